#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geoprior/domain.hpp"
#include "geoprior/encode.hpp"
#include "geoprior/imbalance.hpp"

namespace geoprior {

// ============================================================================
// Configuration
// ============================================================================

struct GeoNetConfig {
    int input_dim = kFeatureDim;
    int hidden_width = 64;
    int residual_blocks = 4;  // 1 input projection + 2 layers per block = 9 weight layers
    int classes = 0;
    std::uint64_t seed = 1;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double lr_decay = 0.98;  // multiplicative, per epoch
    int epochs = 30;
    int batch_size = 64;

    int weight_layers() const { return 1 + 2 * residual_blocks; }
    void validate() const;  // throws InvalidConfig
};

// ============================================================================
// Network
// ============================================================================

/// Residual fully-connected classifier over encoded geo-spatiotemporal
/// features. Parameters live in one flat array; layer views are spans into
/// it, laid out input layer first, then each block's two layers, then the
/// output layer, each as a row-major weight matrix followed by its bias.
class GeoNet {
public:
    GeoNet() = default;
    GeoNet(GeoNetConfig config, ClassVocabulary vocabulary);

    const GeoNetConfig& config() const { return config_; }
    const ClassVocabulary& vocabulary() const { return vocabulary_; }
    const std::string& feature_convention() const { return feature_convention_; }

    /// Zeroed entries drop the corresponding feature at both train and
    /// predict time; persisted in checkpoints.
    const std::array<double, kFeatureDim>& feature_mask() const { return feature_mask_; }
    void set_feature_mask(const std::array<double, kFeatureDim>& mask) { feature_mask_ = mask; }

    long parameter_count() const { return static_cast<long>(params_.size()); }
    std::span<double> parameters() { return params_; }
    std::span<const double> parameters() const { return params_; }

    std::span<const double> input_w() const { return view(0); }
    std::span<const double> input_b() const { return view(1); }
    std::span<const double> block_w(int block, int layer) const {
        return view(2 + 4 * block + 2 * layer);
    }
    std::span<const double> block_b(int block, int layer) const {
        return view(2 + 4 * block + 2 * layer + 1);
    }
    std::span<const double> output_w() const { return view(2 + 4 * config_.residual_blocks); }
    std::span<const double> output_b() const { return view(3 + 4 * config_.residual_blocks); }

    friend class GeoNetOps;

private:
    std::span<const double> view(int piece) const {
        return std::span<const double>(params_).subspan(offsets_[piece], sizes_[piece]);
    }
    std::span<double> mutable_view(int piece) {
        return std::span<double>(params_).subspan(offsets_[piece], sizes_[piece]);
    }
    void compute_layout();

    GeoNetConfig config_;
    ClassVocabulary vocabulary_;
    std::string feature_convention_ = kFeatureConvention;
    std::array<double, kFeatureDim> feature_mask_{1, 1, 1, 1, 1, 1};
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> sizes_;
};

/// Seeded initialization: weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// biases zero. Equal seeds give bitwise-identical parameters.
GeoNet init_network(const GeoNetConfig& config, const ClassVocabulary& vocabulary);

/// Softmax class distribution for one encoded observation.
ProbVector forward(const GeoNet& net, const EncodedFeatures& x);

/// Hidden vector after the last residual block (the embedding used by hard
/// triplet mining).
std::vector<double> penultimate(const GeoNet& net, const EncodedFeatures& x);

// ============================================================================
// Loss and gradients
// ============================================================================

struct Batch {
    std::vector<EncodedFeatures> features;
    std::vector<int> labels;
    std::vector<double> weights;  // empty means all ones
    /// When present, overrides `labels` as the cross-entropy target
    /// distribution (mixed labels from mixup).
    std::vector<std::vector<double>> soft_labels;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // same layout as GeoNet::parameters()
};

/// Weighted cross-entropy: weights are normalized to mean 1 per batch, loss
/// is the weighted mean of -log p[target], gradients come from reverse-mode
/// accumulation through the exact forward definition.
LossGrad loss_and_gradients(const GeoNet& net, const Batch& batch);

struct CrlOptions {
    std::vector<double> alpha;  // per class, in [0, 1]
    double margin = 0.2;
    std::set<int> minority_classes;
};

/// Class rectification loss over a batch: (1-alpha)-weighted cross-entropy
/// plus alpha-weighted hinge over hard-mined triplets in embedding space.
LossGrad crl_loss_and_gradients(const GeoNet& net, const Batch& batch, const CrlOptions& options);

// ============================================================================
// Training
// ============================================================================

/// Encoded training data with integer class targets.
struct TrainingSet {
    std::vector<EncodedFeatures> features;
    std::vector<int> labels;
    std::vector<double> weights;  // per-sample loss weights, 1.0 by default
    int num_classes = 0;
};

TrainingSet make_training_set(const Dataset& dataset, const ClassVocabulary& vocabulary);

struct EpochStats {
    int epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double train_top1 = 0.0;
    std::optional<double> val_top1_micro;
    std::optional<double> val_top1_macro;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainSettings {
    enum class Loss { WeightedCrossEntropy, ClassRectification };
    Loss loss = Loss::WeightedCrossEntropy;
    bool mixup = false;
    double crl_eta = 0.5;
    double crl_margin = 0.2;
    std::uint64_t augment_seed = 0;  // mixup lambda/pairing stream
};

/// Mini-batch SGD with classical momentum and per-epoch learning-rate decay.
/// Fully deterministic given (net seed, sampler, settings).
TrainHistory train(GeoNet& net, const TrainingSet& data, const TrainingSet* val,
                   IndexSampler& sampler, const TrainSettings& settings = {});

/// Batch inference over a validated dataset; one row per observation, input
/// order preserved. Throws VocabularyMismatch when the dataset contains
/// species the model does not know.
ProbMatrix predict_matrix(const GeoNet& net, const Dataset& input);

// ============================================================================
// Checkpoints
// ============================================================================

/// Self-describing JSON document: format version, config, vocabulary,
/// feature convention and mask, row-major parameter arrays. Values are
/// written with full round-trip precision, so a load reproduces predictions
/// within 1e-12 (exactly, in practice).
void save_checkpoint(const GeoNet& net, const std::string& path);
GeoNet load_checkpoint(const std::string& path);

}  // namespace geoprior
