#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoprior/geonet.hpp"
#include "geoprior/synth.hpp"

namespace geoprior {

// Exit codes: 0 success, 2 data/validation errors, 3 I/O errors; usage
// errors return the parser's own nonzero codes.
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

/// Entry point behind the geoprior binary.
int run_cli(int argc, const char* const* argv);

// Each command is also callable directly (the acceptance suite drives the
// same code paths the binary does). Every command creates its output
// directory, writes its artifacts there, and echoes its effective
// configuration to config_echo.txt in a form --config can read back.

struct SynthCommand {
    SynthSpec spec;
    std::string out_dir;
};
void cmd_synth(const SynthCommand& cmd);

struct TrainGeoCommand {
    std::string train_path;
    std::string val_path;  // optional
    std::string out_dir;
    std::string imbalance = "none";  // none | weights:inverse | weights:inverse_log |
                                     // sampler:inverse | sampler:inverse_log | smote |
                                     // cluster | crl
    bool mixup = false;
    bool drop_date = false;  // zero the date feature pair
    GeoNetConfig config;
    std::uint64_t sampler_seed = 0;  // 0 derives from config.seed
    double weight_cap = 0.0;         // 0 disables the cap
    int smote_k = 5;
    int clusters = 3;
    double crl_eta = 0.5;
    double crl_margin = 0.2;
};
void cmd_train_geo(const TrainGeoCommand& cmd);

struct PredictGeoCommand {
    std::string model_path;
    std::string input_path;
    std::string out_dir;
};
void cmd_predict_geo(const PredictGeoCommand& cmd);

struct FuseCommand {
    std::string image_probs_path;
    std::string geo_probs_path;
    std::string out_dir;
    double epsilon = 1e-12;
};
void cmd_fuse(const FuseCommand& cmd);

struct EvalCommand {
    std::string probs_path;
    std::string truth_path;
    std::string out_dir;
    std::string topk = "1,3";
    std::string average = "micro,macro";
};
void cmd_eval(const EvalCommand& cmd);

struct ResampleCommand {
    std::string method;  // weights | oversample | undersample | smote | cluster
    std::string in_path;
    std::string out_dir;
    std::string scheme = "inverse";  // weights method: inverse | inverse_log
    double weight_cap = 0.0;
    int smote_k = 5;
    int clusters = 3;
    std::uint64_t seed = 1;
};
void cmd_resample(const ResampleCommand& cmd);

}  // namespace geoprior
