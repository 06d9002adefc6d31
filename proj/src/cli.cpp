#include "geoprior/cli.hpp"

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "geoprior/fusion.hpp"
#include "geoprior/io.hpp"
#include "geoprior/metrics.hpp"
#include "geoprior/text.hpp"

namespace geoprior {

namespace fs = std::filesystem;

namespace {

void ensure_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) throw Error(ErrorKind::IoError, "output directory must not be empty");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoError, "cannot create '" + out_dir + "': " + ec.message());
    }
}

std::string path_in(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

/// key=value lines readable back through --config.
void write_config_echo(const std::string& out_dir,
                       const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string text;
    for (const auto& [key, value] : entries) text += key + "=" + value + "\n";
    write_text_file(path_in(out_dir, "config_echo.txt"), text);
}

Dataset load_and_validate(const std::string& path, const ClassVocabulary* expected = nullptr) {
    const ValidationResult result = validate_dataset(read_observations_csv(path), expected);
    if (!result.ok()) {
        for (const Violation& v : result.violations) {
            std::cerr << path << ": " << error_kind_name(v.kind) << ": " << v.message << "\n";
        }
        throw Error(result.violations.front().kind,
                    path + " failed validation with " +
                        std::to_string(result.violations.size()) + " violation(s)");
    }
    return *result.dataset;
}

std::string bool_str(bool v) { return v ? "true" : "false"; }

}  // namespace

// ============================================================================
// synth
// ============================================================================

void cmd_synth(const SynthCommand& cmd) {
    ensure_out_dir(cmd.out_dir);
    const SynthOutput output = generate_dataset(cmd.spec);
    write_observations_csv(path_in(cmd.out_dir, "train.csv"), output.train);
    write_observations_csv(path_in(cmd.out_dir, "test.csv"), output.test);
    write_prob_matrix(path_in(cmd.out_dir, "image_probs.csv"), output.image_probs);
    write_text_file(path_in(cmd.out_dir, "generator.txt"), describe_generator(output));
    write_config_echo(cmd.out_dir,
                      {{"pairs", std::to_string(cmd.spec.n_pairs)},
                       {"train-n", std::to_string(cmd.spec.n_train)},
                       {"test-n", std::to_string(cmd.spec.n_test)},
                       {"gamma", format_double(cmd.spec.imbalance_gamma)},
                       {"geo-sigma", format_double(cmd.spec.geo_sigma)},
                       {"pair-separation", format_double(cmd.spec.pair_separation)},
                       {"season-width", format_double(cmd.spec.season_width)},
                       {"image-confusion", format_double(cmd.spec.image_confusion)},
                       {"seed", std::to_string(cmd.spec.seed)},
                       {"out", cmd.out_dir}});
    std::cout << "wrote train.csv, test.csv, image_probs.csv, generator.txt to " << cmd.out_dir
              << "\n";
}

// ============================================================================
// train-geo
// ============================================================================

namespace {

const std::vector<std::string> kStrategies = {
    "none",    "weights:inverse", "weights:inverse_log", "sampler:inverse",
    "sampler:inverse_log", "smote",           "cluster",             "crl"};

struct GroupedFeatures {
    std::vector<std::vector<Point>> by_class;
    std::vector<std::vector<std::size_t>> index_by_class;  // back into the training set
};

GroupedFeatures group_by_class(const TrainingSet& set) {
    GroupedFeatures grouped;
    grouped.by_class.resize(set.num_classes);
    grouped.index_by_class.resize(set.num_classes);
    for (std::size_t i = 0; i < set.features.size(); ++i) {
        const int c = set.labels[i];
        grouped.by_class[c].emplace_back(set.features[i].begin(), set.features[i].end());
        grouped.index_by_class[c].push_back(i);
    }
    return grouped;
}

WeightScheme scheme_from_name(const std::string& name, double cap) {
    WeightScheme scheme;
    scheme.kind = name == "inverse" ? WeightScheme::Kind::Inverse : WeightScheme::Kind::InverseLog;
    if (cap > 0.0) scheme.cap = cap;
    return scheme;
}

}  // namespace

void cmd_train_geo(const TrainGeoCommand& cmd) {
    if (std::find(kStrategies.begin(), kStrategies.end(), cmd.imbalance) == kStrategies.end()) {
        throw Error(ErrorKind::InvalidConfig, "unknown imbalance strategy '" + cmd.imbalance + "'");
    }
    ensure_out_dir(cmd.out_dir);

    const Dataset train_ds = load_and_validate(cmd.train_path);
    GeoNetConfig config = cmd.config;
    config.classes = train_ds.vocabulary.size();
    GeoNet net = init_network(config, train_ds.vocabulary);
    if (cmd.drop_date) net.set_feature_mask({1, 1, 1, 1, 0, 0});

    TrainingSet set = make_training_set(train_ds, train_ds.vocabulary);
    const ClassCounts counts = class_counts(set.labels, set.num_classes);

    TrainSettings settings;
    settings.mixup = cmd.mixup;
    settings.augment_seed = config.seed + 2;
    const std::uint64_t sampler_seed =
        cmd.sampler_seed != 0 ? cmd.sampler_seed : config.seed + 1;

    std::unique_ptr<IndexSampler> sampler;
    if (cmd.imbalance == "weights:inverse" || cmd.imbalance == "weights:inverse_log") {
        const std::vector<double> weights =
            class_weights(counts, scheme_from_name(cmd.imbalance.substr(8), cmd.weight_cap));
        for (std::size_t i = 0; i < set.labels.size(); ++i) {
            set.weights[i] = weights[set.labels[i]];
        }
    } else if (cmd.imbalance == "sampler:inverse" || cmd.imbalance == "sampler:inverse_log") {
        const std::vector<double> weights =
            class_weights(counts, scheme_from_name(cmd.imbalance.substr(8), cmd.weight_cap));
        std::vector<double> draw_weights(set.labels.size());
        for (std::size_t i = 0; i < set.labels.size(); ++i) {
            draw_weights[i] = weights[set.labels[i]];
        }
        sampler = make_weighted_sampler(std::move(draw_weights), set.features.size(), sampler_seed);
    } else if (cmd.imbalance == "smote") {
        const GroupedFeatures grouped = group_by_class(set);
        for (int c = 0; c < set.num_classes; ++c) {
            const long missing = counts.n_max - counts.counts[c];
            if (counts.counts[c] == 0 || missing <= 0) continue;
            const SmoteResult synth = smote(grouped.by_class[c], cmd.smote_k,
                                            static_cast<std::size_t>(missing),
                                            config.seed + 3 + static_cast<std::uint64_t>(c));
            for (const Point& p : synth.points) {
                EncodedFeatures f{};
                std::copy(p.begin(), p.end(), f.begin());
                set.features.push_back(f);
                set.labels.push_back(c);
                set.weights.push_back(1.0);
            }
        }
    } else if (cmd.imbalance == "cluster") {
        const GroupedFeatures grouped = group_by_class(set);
        const ResamplePlan plan =
            cluster_oversample(grouped.by_class, cmd.clusters, config.seed + 3);
        TrainingSet resampled;
        resampled.num_classes = set.num_classes;
        for (const ResamplePlan::Entry& entry : plan.entries) {
            const std::size_t src =
                grouped.index_by_class[entry.class_index][entry.source_index];
            resampled.features.push_back(set.features[src]);
            resampled.labels.push_back(set.labels[src]);
            resampled.weights.push_back(1.0);
        }
        set = std::move(resampled);
    } else if (cmd.imbalance == "crl") {
        settings.loss = TrainSettings::Loss::ClassRectification;
        settings.crl_eta = cmd.crl_eta;
        settings.crl_margin = cmd.crl_margin;
    }
    if (!sampler) sampler = make_shuffle_sampler(set.features.size(), sampler_seed);

    TrainingSet val_set;
    const TrainingSet* val_ptr = nullptr;
    if (!cmd.val_path.empty()) {
        const Dataset val_ds = load_and_validate(cmd.val_path);
        val_set = make_training_set(val_ds, train_ds.vocabulary);
        val_ptr = &val_set;
    }

    const TrainHistory history = train(net, set, val_ptr, *sampler, settings);

    save_checkpoint(net, path_in(cmd.out_dir, "model.json"));
    write_history_csv(path_in(cmd.out_dir, "history.csv"), history);
    write_config_echo(cmd.out_dir, {{"train", cmd.train_path},
                                    {"val", cmd.val_path},
                                    {"imbalance", cmd.imbalance},
                                    {"mixup", bool_str(cmd.mixup)},
                                    {"drop-date", bool_str(cmd.drop_date)},
                                    {"width", std::to_string(config.hidden_width)},
                                    {"blocks", std::to_string(config.residual_blocks)},
                                    {"epochs", std::to_string(config.epochs)},
                                    {"batch", std::to_string(config.batch_size)},
                                    {"lr", format_double(config.learning_rate)},
                                    {"momentum", format_double(config.momentum)},
                                    {"lr-decay", format_double(config.lr_decay)},
                                    {"seed", std::to_string(config.seed)},
                                    {"sampler-seed", std::to_string(cmd.sampler_seed)},
                                    {"weight-cap", format_double(cmd.weight_cap)},
                                    {"smote-k", std::to_string(cmd.smote_k)},
                                    {"clusters", std::to_string(cmd.clusters)},
                                    {"crl-eta", format_double(cmd.crl_eta)},
                                    {"crl-margin", format_double(cmd.crl_margin)},
                                    {"out", cmd.out_dir}});
    const EpochStats& last = history.back();
    std::cout << "trained " << config.epochs << " epochs; final train loss "
              << format_double(last.train_loss) << ", train top-1 "
              << format_double(last.train_top1) << "\n";
}

// ============================================================================
// predict-geo / fuse / eval
// ============================================================================

void cmd_predict_geo(const PredictGeoCommand& cmd) {
    ensure_out_dir(cmd.out_dir);
    const GeoNet net = load_checkpoint(cmd.model_path);
    const Dataset input = load_and_validate(cmd.input_path);
    const ProbMatrix probs = predict_matrix(net, input);
    write_prob_matrix(path_in(cmd.out_dir, "geo_probs.csv"), probs);
    write_config_echo(cmd.out_dir, {{"model", cmd.model_path},
                                    {"input", cmd.input_path},
                                    {"out", cmd.out_dir}});
    std::cout << "wrote geo_probs.csv (" << probs.size() << " rows) to " << cmd.out_dir << "\n";
}

void cmd_fuse(const FuseCommand& cmd) {
    ensure_out_dir(cmd.out_dir);
    const ProbMatrix image = read_prob_matrix(cmd.image_probs_path);
    const ProbMatrix geo = read_prob_matrix(cmd.geo_probs_path);
    const ProbMatrix fused = fuse_file(image, geo, cmd.epsilon);
    write_prob_matrix(path_in(cmd.out_dir, "fused_probs.csv"), fused);
    write_config_echo(cmd.out_dir, {{"image-probs", cmd.image_probs_path},
                                    {"geo-probs", cmd.geo_probs_path},
                                    {"epsilon", format_double(cmd.epsilon)},
                                    {"out", cmd.out_dir}});
    std::cout << "wrote fused_probs.csv (" << fused.size() << " rows) to " << cmd.out_dir << "\n";
}

namespace {

std::vector<int> parse_topk(const std::string& text) {
    std::vector<int> ks;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (trim(item).empty()) continue;
        ks.push_back(static_cast<int>(parse_long(trim(item), "--topk")));
    }
    if (ks.empty()) throw Error(ErrorKind::InvalidConfig, "--topk needs at least one value");
    return ks;
}

}  // namespace

void cmd_eval(const EvalCommand& cmd) {
    ensure_out_dir(cmd.out_dir);
    const ProbMatrix probs = read_prob_matrix(cmd.probs_path);
    const Dataset truth = load_and_validate(cmd.truth_path);
    const std::vector<int> ks = parse_topk(cmd.topk);
    const bool micro = cmd.average.find("micro") != std::string::npos;
    const bool macro = cmd.average.find("macro") != std::string::npos;
    if (!micro && !macro) {
        throw Error(ErrorKind::InvalidConfig, "--average must name micro, macro, or both");
    }

    const EvalReport report = eval_report(probs, truth, ks, micro, macro);
    write_text_file(path_in(cmd.out_dir, "report.txt"), render_report_text(report));
    write_text_file(path_in(cmd.out_dir, "per_class.csv"), render_report_csv(report));
    write_config_echo(cmd.out_dir, {{"probs", cmd.probs_path},
                                    {"truth", cmd.truth_path},
                                    {"topk", cmd.topk},
                                    {"average", cmd.average},
                                    {"out", cmd.out_dir}});
    std::cout << render_report_text(report);
}

// ============================================================================
// resample
// ============================================================================

namespace {

/// Observations regrouped per class, file order preserved inside a class.
std::vector<std::vector<std::size_t>> observation_indices_by_class(const Dataset& dataset) {
    std::vector<std::vector<std::size_t>> by_class(dataset.vocabulary.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[dataset.vocabulary.require_index(dataset.observations[i].species)].push_back(i);
    }
    return by_class;
}

std::vector<std::vector<std::string>> ids_by_class(
    const Dataset& dataset, const std::vector<std::vector<std::size_t>>& index_by_class) {
    std::vector<std::vector<std::string>> ids(index_by_class.size());
    for (std::size_t c = 0; c < index_by_class.size(); ++c) {
        for (std::size_t i : index_by_class[c]) {
            ids[c].push_back(dataset.observations[i].obs_id);
        }
    }
    return ids;
}

Dataset dataset_from_plan(const Dataset& source, const ResamplePlan& plan,
                          const std::vector<std::vector<std::size_t>>& index_by_class) {
    Dataset out;
    out.hierarchy = source.hierarchy;
    out.vocabulary = source.vocabulary;
    std::map<std::string, int> dup_counter;
    for (const ResamplePlan::Entry& entry : plan.entries) {
        const std::size_t src = index_by_class[entry.class_index][entry.source_index];
        Observation obs = source.observations[src];
        if (entry.duplicate) {
            obs.obs_id += "__dup" + std::to_string(++dup_counter[obs.obs_id]);
        }
        out.observations.push_back(std::move(obs));
    }
    return out;
}

}  // namespace

void cmd_resample(const ResampleCommand& cmd) {
    static const std::vector<std::string> kMethods = {"weights", "oversample", "undersample",
                                                      "smote", "cluster"};
    if (std::find(kMethods.begin(), kMethods.end(), cmd.method) == kMethods.end()) {
        throw Error(ErrorKind::InvalidConfig, "unknown resample method '" + cmd.method + "'");
    }
    if (cmd.method == "weights" && cmd.scheme != "inverse" && cmd.scheme != "inverse_log") {
        throw Error(ErrorKind::InvalidConfig, "unknown weight scheme '" + cmd.scheme + "'");
    }
    ensure_out_dir(cmd.out_dir);

    const Dataset dataset = load_and_validate(cmd.in_path);
    const auto index_by_class = observation_indices_by_class(dataset);
    const auto source_ids = ids_by_class(dataset, index_by_class);
    const std::vector<std::string>& labels = dataset.vocabulary.classes;

    const TrainingSet set = make_training_set(dataset, dataset.vocabulary);
    std::vector<std::vector<Point>> features_by_class(dataset.vocabulary.size());
    for (std::size_t c = 0; c < index_by_class.size(); ++c) {
        for (std::size_t i : index_by_class[c]) {
            features_by_class[c].emplace_back(set.features[i].begin(), set.features[i].end());
        }
    }

    ResamplePlan plan;
    if (cmd.method == "weights") {
        const ClassCounts counts = class_counts(dataset);
        plan.kind = ResamplePlan::Kind::Weights;
        plan.weights = class_weights(counts, scheme_from_name(cmd.scheme, cmd.weight_cap));
        write_weights_csv(path_in(cmd.out_dir, "weights.csv"), labels, plan.weights);
    } else if (cmd.method == "oversample") {
        plan = oversample_plan(features_by_class);
        write_observations_csv(path_in(cmd.out_dir, "resampled.csv"),
                               dataset_from_plan(dataset, plan, index_by_class));
    } else if (cmd.method == "undersample") {
        plan = undersample_plan(features_by_class);
        write_observations_csv(path_in(cmd.out_dir, "resampled.csv"),
                               dataset_from_plan(dataset, plan, index_by_class));
    } else if (cmd.method == "cluster") {
        plan = cluster_oversample(features_by_class, cmd.clusters, cmd.seed);
        write_observations_csv(path_in(cmd.out_dir, "resampled.csv"),
                               dataset_from_plan(dataset, plan, index_by_class));
    } else {  // smote
        const ClassCounts counts = class_counts(dataset);
        plan.kind = ResamplePlan::Kind::Smote;
        std::vector<std::string> out_ids;
        std::vector<std::string> out_labels;
        std::vector<Point> out_features;
        long synth_id = 1;
        for (std::size_t c = 0; c < features_by_class.size(); ++c) {
            for (std::size_t j = 0; j < features_by_class[c].size(); ++j) {
                ResamplePlan::Entry entry;
                entry.class_index = static_cast<int>(c);
                entry.source_index = static_cast<long>(j);
                plan.entries.push_back(entry);
                out_ids.push_back(source_ids[c][j]);
                out_labels.push_back(labels[c]);
                out_features.push_back(features_by_class[c][j]);
            }
            const long missing = counts.n_max - counts.counts[c];
            if (counts.counts[c] == 0 || missing <= 0) continue;
            const SmoteResult synth =
                smote(features_by_class[c], cmd.smote_k, static_cast<std::size_t>(missing),
                      cmd.seed + static_cast<std::uint64_t>(c));
            if (synth.degenerate_copies) {
                plan.notes.push_back("class " + labels[c] +
                                     ": single sample, synthetic points are exact copies");
            }
            for (std::size_t n = 0; n < synth.points.size(); ++n) {
                ResamplePlan::Entry entry;
                entry.class_index = static_cast<int>(c);
                entry.source_index = static_cast<long>(synth.base_index[n]);
                entry.duplicate = true;
                entry.synthetic = synth.points[n];
                plan.entries.push_back(std::move(entry));
                out_ids.push_back("synth-" + std::to_string(synth_id++));
                out_labels.push_back(labels[c]);
                out_features.push_back(synth.points[n]);
            }
        }
        write_features_csv(path_in(cmd.out_dir, "features.csv"), out_ids, out_labels,
                           out_features);
    }

    write_plan_csv(path_in(cmd.out_dir, "plan.csv"), plan, labels, source_ids);
    write_config_echo(cmd.out_dir, {{"method", cmd.method},
                                    {"in", cmd.in_path},
                                    {"scheme", cmd.scheme},
                                    {"weight-cap", format_double(cmd.weight_cap)},
                                    {"smote-k", std::to_string(cmd.smote_k)},
                                    {"clusters", std::to_string(cmd.clusters)},
                                    {"seed", std::to_string(cmd.seed)},
                                    {"out", cmd.out_dir}});
    std::cout << "wrote resample outputs to " << cmd.out_dir << "\n";
}

// ============================================================================
// argument parsing
// ============================================================================

namespace {

/// Wraps CLI11 with repeat-tolerant options so values from --config files can
/// be injected as tokens and overridden by explicit command-line flags.
class SubcommandBuilder {
public:
    SubcommandBuilder(CLI::App& app, const std::string& name, const std::string& description) {
        sub_ = app.add_subcommand(name, description);
        sub_->add_option("--config", config_path_,
                         "flat key=value file; command-line flags take precedence");
    }

    template <typename T>
    CLI::Option* option(const std::string& name, T& target, const std::string& description) {
        CLI::Option* opt = sub_->add_option(name, target, description);
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        keys_.insert(name.substr(2));
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool& target, const std::string& description) {
        CLI::Option* opt = sub_->add_flag(name, target, description);
        opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        keys_.insert(name.substr(2));
        return opt;
    }

    CLI::App* app() { return sub_; }
    const std::set<std::string>& keys() const { return keys_; }
    const std::string& name() const { return sub_->get_name(); }

private:
    CLI::App* sub_ = nullptr;
    std::string config_path_;
    std::set<std::string> keys_;
};

/// Turns "key=value" lines from a config file into --key=value tokens,
/// rejecting keys the subcommand does not define.
std::vector<std::string> config_tokens(const std::string& path,
                                       const std::set<std::string>& known_keys) {
    const std::string content = read_text_file(path);
    std::vector<std::string> tokens;
    std::stringstream stream(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig,
                        path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (!known_keys.count(key)) {
            throw Error(ErrorKind::InvalidConfig,
                        path + ":" + std::to_string(line_no) + ": unknown config key '" + key + "'");
        }
        if (!value.empty()) tokens.push_back("--" + key + "=" + value);
    }
    return tokens;
}

/// Splices config-file tokens in front of the user's own flags so the
/// command line wins, and strips the --config tokens themselves.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args,
                                           const std::vector<SubcommandBuilder*>& subcommands) {
    if (args.empty()) return args;
    const SubcommandBuilder* active = nullptr;
    for (SubcommandBuilder* sub : subcommands) {
        if (sub->name() == args.front()) active = sub;
    }
    if (!active) return args;

    std::string config_path;
    std::vector<std::string> rest;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw Error(ErrorKind::InvalidConfig, "--config needs a file argument");
            }
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) return args;

    std::vector<std::string> merged;
    merged.push_back(args.front());
    for (std::string& token : config_tokens(config_path, active->keys())) {
        merged.push_back(std::move(token));
    }
    merged.insert(merged.end(), rest.begin(), rest.end());
    return merged;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"geo-spatiotemporal prior and imbalance toolkit for fine-grained species "
                 "classification"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    auto synth_cmd = std::make_shared<SynthCommand>();
    SubcommandBuilder synth(app, "synth", "generate a synthetic sighting dataset");
    synth.option("--pairs", synth_cmd->spec.n_pairs,
                 "number of confusable species pairs (classes = 2*pairs)");
    synth.option("--train-n", synth_cmd->spec.n_train, "training observations");
    synth.option("--test-n", synth_cmd->spec.n_test, "test observations");
    synth.option("--gamma", synth_cmd->spec.imbalance_gamma, "power-law imbalance exponent");
    synth.option("--geo-sigma", synth_cmd->spec.geo_sigma, "range spread in degrees");
    synth.option("--pair-separation", synth_cmd->spec.pair_separation,
                 "paired range separation in geo-sigma units");
    synth.option("--season-width", synth_cmd->spec.season_width,
                 "seasonal window spread in days");
    synth.option("--image-confusion", synth_cmd->spec.image_confusion,
                 "image-model mass on the pair partner");
    synth.option("--seed", synth_cmd->spec.seed, "generator seed");
    synth.option("--out", synth_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    synth.app()->callback([synth_cmd] { cmd_synth(*synth_cmd); });

    // train-geo ----------------------------------------------------------
    auto train_cmd = std::make_shared<TrainGeoCommand>();
    SubcommandBuilder train(app, "train-geo", "train the geo-spatiotemporal prior");
    train.option("--train", train_cmd->train_path, "training observation CSV")->required();
    train.option("--val", train_cmd->val_path, "validation observation CSV");
    train.option("--imbalance", train_cmd->imbalance,
                 "none | weights:inverse | weights:inverse_log | sampler:inverse | "
                 "sampler:inverse_log | smote | cluster | crl");
    train.flag("--mixup", train_cmd->mixup, "mix encoded features and labels per batch");
    train.flag("--drop-date", train_cmd->drop_date, "zero the date feature pair");
    train.option("--width", train_cmd->config.hidden_width, "hidden layer width");
    train.option("--blocks", train_cmd->config.residual_blocks, "residual blocks");
    train.option("--epochs", train_cmd->config.epochs, "training epochs");
    train.option("--batch", train_cmd->config.batch_size, "mini-batch size");
    train.option("--lr", train_cmd->config.learning_rate, "learning rate");
    train.option("--momentum", train_cmd->config.momentum, "momentum coefficient");
    train.option("--lr-decay", train_cmd->config.lr_decay, "per-epoch learning-rate factor");
    train.option("--seed", train_cmd->config.seed, "initialization seed");
    train.option("--sampler-seed", train_cmd->sampler_seed,
                 "sampler seed (0 derives from --seed)");
    train.option("--weight-cap", train_cmd->weight_cap, "cap on class weights (0 = none)");
    train.option("--smote-k", train_cmd->smote_k, "SMOTE neighbor count");
    train.option("--clusters", train_cmd->clusters, "k-means clusters per class");
    train.option("--crl-eta", train_cmd->crl_eta, "rectification weight scale");
    train.option("--crl-margin", train_cmd->crl_margin, "triplet margin");
    train.option("--out", train_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    train.app()->callback([train_cmd] { cmd_train_geo(*train_cmd); });

    // predict-geo ----------------------------------------------------------
    auto predict_cmd = std::make_shared<PredictGeoCommand>();
    SubcommandBuilder predict(app, "predict-geo", "run the prior over observations");
    predict.option("--model", predict_cmd->model_path, "checkpoint path")->required();
    predict.option("--input", predict_cmd->input_path, "observation CSV")->required();
    predict.option("--out", predict_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    predict.app()->callback([predict_cmd] { cmd_predict_geo(*predict_cmd); });

    // fuse ----------------------------------------------------------
    auto fuse_cmd = std::make_shared<FuseCommand>();
    SubcommandBuilder fuse(app, "fuse", "multiply image and geo probabilities");
    fuse.option("--image-probs", fuse_cmd->image_probs_path, "image probability CSV")->required();
    fuse.option("--geo-probs", fuse_cmd->geo_probs_path, "geo probability CSV")->required();
    fuse.option("--epsilon", fuse_cmd->epsilon, "probability floor before fusing");
    fuse.option("--out", fuse_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    fuse.app()->callback([fuse_cmd] { cmd_fuse(*fuse_cmd); });

    // eval ----------------------------------------------------------
    auto eval_cmd = std::make_shared<EvalCommand>();
    SubcommandBuilder eval(app, "eval", "score predictions against ground truth");
    eval.option("--probs", eval_cmd->probs_path, "probability CSV")->required();
    eval.option("--truth", eval_cmd->truth_path, "observation CSV with true labels")->required();
    eval.option("--topk", eval_cmd->topk, "comma-separated k values");
    eval.option("--average", eval_cmd->average, "micro, macro, or micro,macro");
    eval.option("--out", eval_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    eval.app()->callback([eval_cmd] { cmd_eval(*eval_cmd); });

    // resample ----------------------------------------------------------
    auto resample_cmd = std::make_shared<ResampleCommand>();
    SubcommandBuilder resample(app, "resample", "rebalance a dataset or emit weights");
    resample.option("--method", resample_cmd->method,
                    "weights | oversample | undersample | smote | cluster")
        ->required();
    resample.option("--in", resample_cmd->in_path, "observation CSV")->required();
    resample.option("--scheme", resample_cmd->scheme, "inverse | inverse_log");
    resample.option("--weight-cap", resample_cmd->weight_cap, "cap on weights (0 = none)");
    resample.option("--smote-k", resample_cmd->smote_k, "SMOTE neighbor count");
    resample.option("--clusters", resample_cmd->clusters, "k-means clusters per class");
    resample.option("--seed", resample_cmd->seed, "resampling seed");
    resample.option("--out", resample_cmd->out_dir, "output directory")
        ->envname("GEOPRIOR_OUT")
        ->required();
    resample.app()->callback([resample_cmd] { cmd_resample(*resample_cmd); });

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        const std::vector<SubcommandBuilder*> builders = {&synth, &train,    &predict,
                                                          &fuse,  &eval, &resample};
        args = merge_config_args(args, builders);
        std::reverse(args.begin(), args.end());  // CLI11 consumes tokens back to front
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::IoError ? kExitIo : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}

}  // namespace geoprior
