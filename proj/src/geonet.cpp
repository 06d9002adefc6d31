#include "geoprior/geonet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "geoprior/rng.hpp"
#include "geoprior/softmax.hpp"

namespace geoprior {

using json = nlohmann::ordered_json;

// ============================================================================
// Config and layout
// ============================================================================

void GeoNetConfig::validate() const {
    if (input_dim != kFeatureDim) {
        throw Error(ErrorKind::InvalidConfig, "input_dim must be " + std::to_string(kFeatureDim));
    }
    if (hidden_width < 1) throw Error(ErrorKind::InvalidConfig, "hidden_width must be positive");
    if (residual_blocks < 1) {
        throw Error(ErrorKind::InvalidConfig, "residual_blocks must be positive");
    }
    if (classes < 1) throw Error(ErrorKind::InvalidConfig, "classes must be positive");
    if (learning_rate < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate must be non-negative");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw Error(ErrorKind::InvalidConfig, "momentum must lie in [0, 1)");
    }
    if (lr_decay <= 0.0) throw Error(ErrorKind::InvalidConfig, "lr_decay must be positive");
    if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be positive");
    if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be positive");
}

GeoNet::GeoNet(GeoNetConfig config, ClassVocabulary vocabulary)
    : config_(std::move(config)), vocabulary_(std::move(vocabulary)) {
    if (config_.classes == 0) config_.classes = vocabulary_.size();
    config_.validate();
    if (config_.classes != vocabulary_.size()) {
        throw Error(ErrorKind::InvalidConfig,
                    "config declares " + std::to_string(config_.classes) + " classes but the vocabulary has " +
                        std::to_string(vocabulary_.size()));
    }
    compute_layout();
}

void GeoNet::compute_layout() {
    offsets_.clear();
    sizes_.clear();
    const std::size_t w = static_cast<std::size_t>(config_.hidden_width);
    const std::size_t d = static_cast<std::size_t>(config_.input_dim);
    const std::size_t c = static_cast<std::size_t>(config_.classes);

    auto add = [&](std::size_t size) {
        offsets_.push_back(offsets_.empty() ? 0 : offsets_.back() + sizes_.back());
        sizes_.push_back(size);
    };
    add(w * d);  // input weights
    add(w);      // input bias
    for (int b = 0; b < config_.residual_blocks; ++b) {
        add(w * w);
        add(w);
        add(w * w);
        add(w);
    }
    add(c * w);  // output weights
    add(c);      // output bias
    params_.assign(offsets_.back() + sizes_.back(), 0.0);
}

/// Internal access to the flat layout for gradient accumulation.
class GeoNetOps {
public:
    static std::span<double> piece(std::vector<double>& flat, const GeoNet& net, int index) {
        return std::span<double>(flat).subspan(net.offsets_[index], net.sizes_[index]);
    }
    static std::span<double> mutable_piece(GeoNet& net, int index) {
        return net.mutable_view(index);
    }
};

namespace {

constexpr int kPieceInputW = 0;
constexpr int kPieceInputB = 1;
int piece_block(int block, int layer, bool bias) { return 2 + 4 * block + 2 * layer + (bias ? 1 : 0); }
int piece_output_w(const GeoNetConfig& cfg) { return 2 + 4 * cfg.residual_blocks; }
int piece_output_b(const GeoNetConfig& cfg) { return 3 + 4 * cfg.residual_blocks; }

}  // namespace

GeoNet init_network(const GeoNetConfig& config, const ClassVocabulary& vocabulary) {
    GeoNet net(config, vocabulary);
    Rng rng(net.config().seed);

    auto fill_uniform = [&](std::span<double> weights, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : weights) w = rng.uniform(-scale, scale);
    };
    const auto& cfg = net.config();
    fill_uniform(GeoNetOps::mutable_piece(net, kPieceInputW), cfg.input_dim);
    for (int b = 0; b < cfg.residual_blocks; ++b) {
        fill_uniform(GeoNetOps::mutable_piece(net, piece_block(b, 0, false)), cfg.hidden_width);
        fill_uniform(GeoNetOps::mutable_piece(net, piece_block(b, 1, false)), cfg.hidden_width);
    }
    fill_uniform(GeoNetOps::mutable_piece(net, piece_output_w(cfg)), cfg.hidden_width);
    // Biases stay zero.
    return net;
}

// ============================================================================
// Forward / backward
// ============================================================================

namespace {

struct BlockCache {
    std::vector<double> h_in;
    std::vector<double> z1;
    std::vector<double> t1;
    std::vector<double> z2;
};

struct SampleCache {
    std::array<double, kFeatureDim> xm{};
    std::vector<double> z0;
    std::vector<BlockCache> blocks;
    std::vector<double> h_final;
    std::vector<double> logits;
    std::vector<double> probs;
};

void forward_sample(const GeoNet& net, const EncodedFeatures& x, SampleCache& cache) {
    const GeoNetConfig& cfg = net.config();
    const int width = cfg.hidden_width;
    const int dim = cfg.input_dim;
    const int classes = cfg.classes;

    for (int d = 0; d < dim; ++d) cache.xm[d] = x[d] * net.feature_mask()[d];

    const auto input_w = net.input_w();
    const auto input_b = net.input_b();
    cache.z0.resize(width);
    std::vector<double> h(width);
    for (int j = 0; j < width; ++j) {
        double s = input_b[j];
        for (int d = 0; d < dim; ++d) s += input_w[j * dim + d] * cache.xm[d];
        cache.z0[j] = s;
        h[j] = s > 0.0 ? s : 0.0;
    }

    cache.blocks.resize(cfg.residual_blocks);
    for (int b = 0; b < cfg.residual_blocks; ++b) {
        BlockCache& bc = cache.blocks[b];
        bc.h_in = h;
        const auto w1 = net.block_w(b, 0);
        const auto b1 = net.block_b(b, 0);
        const auto w2 = net.block_w(b, 1);
        const auto b2 = net.block_b(b, 1);
        bc.z1.resize(width);
        bc.t1.resize(width);
        for (int i = 0; i < width; ++i) {
            double s = b1[i];
            for (int k = 0; k < width; ++k) s += w1[i * width + k] * bc.h_in[k];
            bc.z1[i] = s;
            bc.t1[i] = s > 0.0 ? s : 0.0;
        }
        bc.z2.resize(width);
        for (int j = 0; j < width; ++j) {
            double s = b2[j];
            for (int k = 0; k < width; ++k) s += w2[j * width + k] * bc.t1[k];
            bc.z2[j] = s;
            h[j] += s > 0.0 ? s : 0.0;
        }
    }
    cache.h_final = h;

    const auto output_w = net.output_w();
    const auto output_b = net.output_b();
    cache.logits.resize(classes);
    for (int c = 0; c < classes; ++c) {
        double s = output_b[c];
        for (int j = 0; j < width; ++j) s += output_w[c * width + j] * h[j];
        cache.logits[c] = s;
    }
    cache.probs = softmax_stable(cache.logits);
}

/// Accumulates parameter gradients for one sample given the gradient of the
/// loss with respect to its logits and, optionally, its embedding.
void backward_sample(const GeoNet& net, const SampleCache& cache,
                     const std::vector<double>& dlogits, const std::vector<double>* dembedding,
                     std::vector<double>& grad) {
    const GeoNetConfig& cfg = net.config();
    const int width = cfg.hidden_width;
    const int dim = cfg.input_dim;
    const int classes = cfg.classes;

    auto g_out_w = GeoNetOps::piece(grad, net, piece_output_w(cfg));
    auto g_out_b = GeoNetOps::piece(grad, net, piece_output_b(cfg));
    const auto output_w = net.output_w();

    std::vector<double> dh(width, 0.0);
    for (int c = 0; c < classes; ++c) {
        const double dl = dlogits[c];
        if (dl == 0.0) continue;
        g_out_b[c] += dl;
        for (int j = 0; j < width; ++j) {
            g_out_w[c * width + j] += dl * cache.h_final[j];
            dh[j] += output_w[c * width + j] * dl;
        }
    }
    if (dembedding) {
        for (int j = 0; j < width; ++j) dh[j] += (*dembedding)[j];
    }

    std::vector<double> dz2(width), dt1(width), dz1(width);
    for (int b = cfg.residual_blocks - 1; b >= 0; --b) {
        const BlockCache& bc = cache.blocks[b];
        const auto w1 = net.block_w(b, 0);
        const auto w2 = net.block_w(b, 1);
        auto g_w1 = GeoNetOps::piece(grad, net, piece_block(b, 0, false));
        auto g_b1 = GeoNetOps::piece(grad, net, piece_block(b, 0, true));
        auto g_w2 = GeoNetOps::piece(grad, net, piece_block(b, 1, false));
        auto g_b2 = GeoNetOps::piece(grad, net, piece_block(b, 1, true));

        for (int j = 0; j < width; ++j) dz2[j] = bc.z2[j] > 0.0 ? dh[j] : 0.0;
        std::fill(dt1.begin(), dt1.end(), 0.0);
        for (int j = 0; j < width; ++j) {
            const double d = dz2[j];
            if (d == 0.0) continue;
            g_b2[j] += d;
            for (int k = 0; k < width; ++k) {
                g_w2[j * width + k] += d * bc.t1[k];
                dt1[k] += w2[j * width + k] * d;
            }
        }
        for (int i = 0; i < width; ++i) dz1[i] = bc.z1[i] > 0.0 ? dt1[i] : 0.0;
        for (int i = 0; i < width; ++i) {
            const double d = dz1[i];
            if (d == 0.0) continue;
            g_b1[i] += d;
            for (int k = 0; k < width; ++k) {
                g_w1[i * width + k] += d * bc.h_in[k];
                dh[k] += w1[i * width + k] * d;
            }
        }
        // dh now carries the gradient with respect to the block input.
    }

    auto g_in_w = GeoNetOps::piece(grad, net, kPieceInputW);
    auto g_in_b = GeoNetOps::piece(grad, net, kPieceInputB);
    for (int j = 0; j < width; ++j) {
        if (cache.z0[j] <= 0.0) continue;
        const double d = dh[j];
        g_in_b[j] += d;
        for (int k = 0; k < dim; ++k) g_in_w[j * dim + k] += d * cache.xm[k];
    }
}

/// Cross-entropy of one cached sample against a hard or soft target, plus
/// the (p - y) logit gradient scaled by `factor`.
double ce_and_dlogits(const SampleCache& cache, int label, const std::vector<double>* soft,
                      double factor, std::vector<double>& dlogits) {
    const int classes = static_cast<int>(cache.logits.size());
    const double max_logit = *std::max_element(cache.logits.begin(), cache.logits.end());
    double lse = 0.0;
    for (double l : cache.logits) lse += std::exp(l - max_logit);
    lse = std::log(lse);

    double ce = 0.0;
    dlogits.resize(classes);
    if (soft) {
        for (int c = 0; c < classes; ++c) {
            const double y = (*soft)[c];
            if (y != 0.0) ce -= y * (cache.logits[c] - max_logit - lse);
            dlogits[c] = factor * (cache.probs[c] - y);
        }
    } else {
        ce = lse - (cache.logits[label] - max_logit);
        for (int c = 0; c < classes; ++c) {
            dlogits[c] = factor * (cache.probs[c] - (c == label ? 1.0 : 0.0));
        }
    }
    return ce;
}

void validate_batch(const GeoNet& net, const Batch& batch, bool need_hard_labels) {
    if (batch.features.empty()) {
        throw Error(ErrorKind::InvalidConfig, "batch must be non-empty");
    }
    const std::size_t n = batch.features.size();
    if (!batch.soft_labels.empty()) {
        if (batch.soft_labels.size() != n) {
            throw Error(ErrorKind::ShapeMismatch, "soft labels and features differ in length");
        }
        for (const auto& row : batch.soft_labels) {
            if (static_cast<int>(row.size()) != net.config().classes) {
                throw Error(ErrorKind::ShapeMismatch, "soft label width differs from class count");
            }
        }
    }
    if (batch.soft_labels.empty() || need_hard_labels) {
        if (batch.labels.size() != n) {
            throw Error(ErrorKind::ShapeMismatch, "labels and features differ in length");
        }
        for (int label : batch.labels) {
            if (label < 0 || label >= net.config().classes) {
                throw Error(ErrorKind::InvalidConfig, "label index out of range");
            }
        }
    }
    if (!batch.weights.empty() && batch.weights.size() != n) {
        throw Error(ErrorKind::ShapeMismatch, "weights and features differ in length");
    }
}

/// Per-batch weights normalized to mean 1 so the learning rate keeps its
/// meaning across weighting schemes.
std::vector<double> normalized_weights(const Batch& batch) {
    const std::size_t n = batch.features.size();
    std::vector<double> weights = batch.weights.empty()
                                      ? std::vector<double>(n, 1.0)
                                      : batch.weights;
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw Error(ErrorKind::InvalidConfig, "negative sample weight");
        sum += w;
    }
    if (sum <= 0.0) throw Error(ErrorKind::AllZeroWeights, "batch weights sum to zero");
    const double scale = static_cast<double>(n) / sum;
    for (double& w : weights) w *= scale;
    return weights;
}

}  // namespace

ProbVector forward(const GeoNet& net, const EncodedFeatures& x) {
    SampleCache cache;
    forward_sample(net, x, cache);
    return cache.probs;
}

std::vector<double> penultimate(const GeoNet& net, const EncodedFeatures& x) {
    SampleCache cache;
    forward_sample(net, x, cache);
    return cache.h_final;
}

LossGrad loss_and_gradients(const GeoNet& net, const Batch& batch) {
    validate_batch(net, batch, false);
    const std::size_t n = batch.features.size();
    const std::vector<double> weights = normalized_weights(batch);

    LossGrad out;
    out.grad.assign(net.parameter_count(), 0.0);
    SampleCache cache;
    std::vector<double> dlogits;
    for (std::size_t i = 0; i < n; ++i) {
        forward_sample(net, batch.features[i], cache);
        const std::vector<double>* soft =
            batch.soft_labels.empty() ? nullptr : &batch.soft_labels[i];
        const int label = batch.soft_labels.empty() ? batch.labels[i] : 0;
        const double ce = ce_and_dlogits(cache, label, soft, weights[i] / n, dlogits);
        out.loss += weights[i] * ce / n;
        backward_sample(net, cache, dlogits, nullptr, out.grad);
    }
    return out;
}

namespace {

/// Shared CRL machinery; the mixup path computes the two terms on different
/// batches, so each term can be toggled.
LossGrad crl_terms(const GeoNet& net, const Batch& batch, const CrlOptions& options, bool with_ce,
                   bool with_triplets) {
    validate_batch(net, batch, with_triplets);
    if (static_cast<int>(options.alpha.size()) != net.config().classes) {
        throw Error(ErrorKind::ShapeMismatch, "alpha vector width differs from class count");
    }
    for (double a : options.alpha) {
        if (a < 0.0 || a > 1.0) {
            throw Error(ErrorKind::InvalidConfig, "alpha values must lie in [0, 1]");
        }
    }
    const std::size_t n = batch.features.size();

    std::vector<SampleCache> caches(n);
    for (std::size_t i = 0; i < n; ++i) forward_sample(net, batch.features[i], caches[i]);

    LossGrad out;
    out.grad.assign(net.parameter_count(), 0.0);
    std::vector<std::vector<double>> dlogits(n);
    std::vector<std::vector<double>> dembedding;

    if (with_ce) {
        for (std::size_t i = 0; i < n; ++i) {
            double factor;
            const std::vector<double>* soft =
                batch.soft_labels.empty() ? nullptr : &batch.soft_labels[i];
            if (soft) {
                factor = 0.0;
                for (int c = 0; c < net.config().classes; ++c) {
                    factor += (*soft)[c] * (1.0 - options.alpha[c]);
                }
            } else {
                factor = 1.0 - options.alpha[batch.labels[i]];
            }
            const int label = soft ? 0 : batch.labels[i];
            const double ce = ce_and_dlogits(caches[i], label, soft, factor / n, dlogits[i]);
            out.loss += factor * ce / n;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) dlogits[i].assign(net.config().classes, 0.0);
    }

    if (with_triplets) {
        std::vector<Point> embeddings(n);
        for (std::size_t i = 0; i < n; ++i) embeddings[i] = caches[i].h_final;
        const std::vector<Triplet> triplets =
            hard_mine_triplets(embeddings, batch.labels, options.minority_classes);
        if (!triplets.empty()) {
            const int width = net.config().hidden_width;
            dembedding.assign(n, std::vector<double>(width, 0.0));
            const double inv_t = 1.0 / static_cast<double>(triplets.size());
            for (const Triplet& t : triplets) {
                const double alpha = options.alpha[batch.labels[t.anchor]];
                const Point& ea = embeddings[t.anchor];
                const Point& ep = embeddings[t.positive];
                const Point& en = embeddings[t.negative];
                double d_ap = 0.0, d_an = 0.0;
                for (int j = 0; j < width; ++j) {
                    d_ap += (ea[j] - ep[j]) * (ea[j] - ep[j]);
                    d_an += (ea[j] - en[j]) * (ea[j] - en[j]);
                }
                d_ap = std::sqrt(d_ap);
                d_an = std::sqrt(d_an);
                const double hinge = d_ap - d_an + options.margin;
                if (hinge <= 0.0) continue;
                out.loss += alpha * hinge * inv_t;
                const double scale = alpha * inv_t;
                for (int j = 0; j < width; ++j) {
                    if (d_ap > 0.0) {
                        const double u = (ea[j] - ep[j]) / d_ap;
                        dembedding[t.anchor][j] += scale * u;
                        dembedding[t.positive][j] -= scale * u;
                    }
                    if (d_an > 0.0) {
                        const double v = (ea[j] - en[j]) / d_an;
                        dembedding[t.anchor][j] -= scale * v;
                        dembedding[t.negative][j] += scale * v;
                    }
                }
            }
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double>* demb = dembedding.empty() ? nullptr : &dembedding[i];
        backward_sample(net, caches[i], dlogits[i], demb, out.grad);
    }
    return out;
}

}  // namespace

LossGrad crl_loss_and_gradients(const GeoNet& net, const Batch& batch, const CrlOptions& options) {
    if (!batch.soft_labels.empty()) {
        throw Error(ErrorKind::InvalidConfig, "class rectification mining needs hard labels");
    }
    return crl_terms(net, batch, options, true, true);
}

// ============================================================================
// Training
// ============================================================================

TrainingSet make_training_set(const Dataset& dataset, const ClassVocabulary& vocabulary) {
    TrainingSet set;
    set.num_classes = vocabulary.size();
    set.features = encode_dataset(dataset);
    set.labels.reserve(dataset.size());
    for (const Observation& obs : dataset.observations) {
        auto it = vocabulary.index_of.find(obs.species);
        if (it == vocabulary.index_of.end()) {
            throw Error(ErrorKind::VocabularyMismatch,
                        "species '" + obs.species + "' is not in the model vocabulary");
        }
        set.labels.push_back(it->second);
    }
    set.weights.assign(dataset.size(), 1.0);
    return set;
}

namespace {

struct Top1Stats {
    double micro = 0.0;
    double macro = 0.0;
};

/// Argmax accuracy with the shared tie rule (lowest index wins).
Top1Stats top1_stats(const GeoNet& net, const TrainingSet& data) {
    std::vector<long> per_class_total(net.config().classes, 0);
    std::vector<long> per_class_hit(net.config().classes, 0);
    long hits = 0;
    SampleCache cache;
    for (std::size_t i = 0; i < data.features.size(); ++i) {
        forward_sample(net, data.features[i], cache);
        int best = 0;
        for (int c = 1; c < net.config().classes; ++c) {
            if (cache.probs[c] > cache.probs[best]) best = c;
        }
        ++per_class_total[data.labels[i]];
        if (best == data.labels[i]) {
            ++hits;
            ++per_class_hit[data.labels[i]];
        }
    }
    Top1Stats stats;
    if (!data.features.empty()) {
        stats.micro = static_cast<double>(hits) / static_cast<double>(data.features.size());
    }
    double macro_sum = 0.0;
    int included = 0;
    for (int c = 0; c < net.config().classes; ++c) {
        if (per_class_total[c] == 0) continue;
        macro_sum += static_cast<double>(per_class_hit[c]) / per_class_total[c];
        ++included;
    }
    if (included > 0) stats.macro = macro_sum / included;
    return stats;
}

}  // namespace

TrainHistory train(GeoNet& net, const TrainingSet& data, const TrainingSet* val,
                   IndexSampler& sampler, const TrainSettings& settings) {
    if (data.num_classes != net.config().classes) {
        throw Error(ErrorKind::VocabularyMismatch,
                    "training set has " + std::to_string(data.num_classes) +
                        " classes, model expects " + std::to_string(net.config().classes));
    }
    if (data.features.empty()) {
        throw Error(ErrorKind::InvalidConfig, "training set is empty");
    }
    if (val && val->num_classes != net.config().classes) {
        throw Error(ErrorKind::VocabularyMismatch, "validation set vocabulary differs from model");
    }

    CrlOptions crl;
    if (settings.loss == TrainSettings::Loss::ClassRectification) {
        const ClassCounts counts = class_counts(data.labels, data.num_classes);
        crl.alpha = alpha_schedule(counts, settings.crl_eta);
        crl.margin = settings.crl_margin;
        for (int c = 0; c < data.num_classes; ++c) {
            if (counts.counts[c] > 0 && counts.counts[c] < counts.n_max) {
                crl.minority_classes.insert(c);
            }
        }
    }

    Rng augment_rng(settings.augment_seed);
    std::vector<double> velocity(net.parameter_count(), 0.0);
    TrainHistory history;
    double lr = net.config().learning_rate;

    for (int epoch = 0; epoch < net.config().epochs; ++epoch) {
        const std::vector<std::size_t> order = sampler.epoch_indices();
        double epoch_loss = 0.0;
        std::size_t epoch_samples = 0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(net.config().batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(net.config().batch_size));
            const std::size_t b = end - start;

            Batch batch;
            batch.features.reserve(b);
            batch.labels.reserve(b);
            batch.weights.reserve(b);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                batch.features.push_back(data.features[idx]);
                batch.labels.push_back(data.labels[idx]);
                batch.weights.push_back(data.weights.empty() ? 1.0 : data.weights[idx]);
            }

            Batch mixed;
            if (settings.mixup) {
                const double lambda = augment_rng.uniform();
                std::vector<std::size_t> partner(b);
                std::iota(partner.begin(), partner.end(), std::size_t{0});
                augment_rng.shuffle(partner);
                mixed.features.resize(b);
                mixed.soft_labels.assign(b, std::vector<double>(net.config().classes, 0.0));
                mixed.weights.resize(b);
                for (std::size_t i = 0; i < b; ++i) {
                    const std::size_t p = partner[i];
                    for (int d = 0; d < kFeatureDim; ++d) {
                        mixed.features[i][d] = lambda * batch.features[i][d] +
                                               (1.0 - lambda) * batch.features[p][d];
                    }
                    mixed.soft_labels[i][batch.labels[i]] += lambda;
                    mixed.soft_labels[i][batch.labels[p]] += 1.0 - lambda;
                    mixed.weights[i] =
                        lambda * batch.weights[i] + (1.0 - lambda) * batch.weights[p];
                }
            }

            LossGrad lg;
            if (settings.loss == TrainSettings::Loss::ClassRectification) {
                if (settings.mixup) {
                    // Cross-entropy on the mixed batch, triplets on the real one.
                    LossGrad ce_part = crl_terms(net, mixed, crl, true, false);
                    LossGrad triplet_part = crl_terms(net, batch, crl, false, true);
                    lg.loss = ce_part.loss + triplet_part.loss;
                    lg.grad = std::move(ce_part.grad);
                    for (std::size_t i = 0; i < lg.grad.size(); ++i) {
                        lg.grad[i] += triplet_part.grad[i];
                    }
                } else {
                    lg = crl_terms(net, batch, crl, true, true);
                }
            } else {
                lg = loss_and_gradients(net, settings.mixup ? mixed : batch);
            }

            auto params = net.parameters();
            for (std::size_t i = 0; i < velocity.size(); ++i) {
                velocity[i] = net.config().momentum * velocity[i] + lg.grad[i];
                params[i] -= lr * velocity[i];
            }
            epoch_loss += lg.loss * static_cast<double>(b);
            epoch_samples += b;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.learning_rate = lr;
        stats.train_loss = epoch_samples ? epoch_loss / static_cast<double>(epoch_samples) : 0.0;
        stats.train_top1 = top1_stats(net, data).micro;
        if (val) {
            const Top1Stats v = top1_stats(net, *val);
            stats.val_top1_micro = v.micro;
            stats.val_top1_macro = v.macro;
        }
        history.push_back(stats);
        lr *= net.config().lr_decay;
    }
    return history;
}

ProbMatrix predict_matrix(const GeoNet& net, const Dataset& input) {
    for (const Observation& obs : input.observations) {
        if (!net.vocabulary().index_of.count(obs.species)) {
            throw Error(ErrorKind::VocabularyMismatch,
                        "species '" + obs.species + "' is not in the model vocabulary");
        }
    }
    ProbMatrix matrix;
    matrix.labels = net.vocabulary().classes;
    matrix.obs_ids.reserve(input.size());
    matrix.rows.reserve(input.size());
    SampleCache cache;
    for (const Observation& obs : input.observations) {
        matrix.obs_ids.push_back(obs.obs_id);
        forward_sample(net, encode_observation(obs), cache);
        matrix.rows.push_back(cache.probs);
    }
    return matrix;
}

// ============================================================================
// Checkpoints
// ============================================================================

namespace {

json config_to_json(const GeoNetConfig& cfg) {
    json j;
    j["input_dim"] = cfg.input_dim;
    j["hidden_width"] = cfg.hidden_width;
    j["residual_blocks"] = cfg.residual_blocks;
    j["classes"] = cfg.classes;
    j["seed"] = cfg.seed;
    j["learning_rate"] = cfg.learning_rate;
    j["momentum"] = cfg.momentum;
    j["lr_decay"] = cfg.lr_decay;
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    return j;
}

std::vector<double> require_array(const json& j, const std::string& key, std::size_t size) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw Error(ErrorKind::CorruptFile, "checkpoint missing array '" + key + "'");
    }
    std::vector<double> values;
    values.reserve(j[key].size());
    for (const auto& v : j[key]) {
        if (!v.is_number()) {
            throw Error(ErrorKind::CorruptFile, "non-numeric value in '" + key + "'");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw Error(ErrorKind::CorruptFile, "non-finite value in '" + key + "'");
        }
        values.push_back(d);
    }
    if (values.size() != size) {
        throw Error(ErrorKind::CorruptFile, "array '" + key + "' has " +
                                                std::to_string(values.size()) + " values, expected " +
                                                std::to_string(size));
    }
    return values;
}

json span_to_json(std::span<const double> values) {
    json arr = json::array();
    for (double v : values) arr.push_back(v);
    return arr;
}

}  // namespace

void save_checkpoint(const GeoNet& net, const std::string& path) {
    json j;
    j["format_version"] = 1;
    j["config"] = config_to_json(net.config());
    j["feature_convention"] = net.feature_convention();
    j["feature_mask"] = net.feature_mask();
    j["vocabulary"] = net.vocabulary().classes;

    json params;
    params["input_w"] = span_to_json(net.input_w());
    params["input_b"] = span_to_json(net.input_b());
    json blocks = json::array();
    for (int b = 0; b < net.config().residual_blocks; ++b) {
        json block;
        block["w1"] = span_to_json(net.block_w(b, 0));
        block["b1"] = span_to_json(net.block_b(b, 0));
        block["w2"] = span_to_json(net.block_w(b, 1));
        block["b2"] = span_to_json(net.block_b(b, 1));
        blocks.push_back(std::move(block));
    }
    params["blocks"] = std::move(blocks);
    params["output_w"] = span_to_json(net.output_w());
    params["output_b"] = span_to_json(net.output_b());
    j["parameters"] = std::move(params);

    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write checkpoint '" + path + "'");
    out << j.dump(1) << "\n";
    if (!out) throw Error(ErrorKind::IoError, "failed writing checkpoint '" + path + "'");
}

GeoNet load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open checkpoint '" + path + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorKind::CorruptFile, "checkpoint '" + path + "' is not valid JSON");
    }
    if (!j.contains("format_version")) {
        throw Error(ErrorKind::CorruptFile, "checkpoint has no format_version field");
    }
    if (j["format_version"] != json(1)) {
        throw Error(ErrorKind::UnsupportedVersion,
                    "checkpoint format_version " + j["format_version"].dump() + " is not supported");
    }

    try {
        const json& jc = j.at("config");
        GeoNetConfig cfg;
        cfg.input_dim = jc.at("input_dim").get<int>();
        cfg.hidden_width = jc.at("hidden_width").get<int>();
        cfg.residual_blocks = jc.at("residual_blocks").get<int>();
        cfg.classes = jc.at("classes").get<int>();
        cfg.seed = jc.at("seed").get<std::uint64_t>();
        cfg.learning_rate = jc.at("learning_rate").get<double>();
        cfg.momentum = jc.at("momentum").get<double>();
        cfg.lr_decay = jc.at("lr_decay").get<double>();
        cfg.epochs = jc.at("epochs").get<int>();
        cfg.batch_size = jc.at("batch_size").get<int>();

        std::vector<std::string> labels = j.at("vocabulary").get<std::vector<std::string>>();
        ClassVocabulary vocabulary = ClassVocabulary::from_labels(labels);
        if (vocabulary.classes != labels) {
            throw Error(ErrorKind::CorruptFile, "checkpoint vocabulary is not in sorted order");
        }

        GeoNet net(cfg, vocabulary);
        const std::string convention = j.at("feature_convention").get<std::string>();
        if (convention != net.feature_convention()) {
            throw Error(ErrorKind::VocabularyMismatch,
                        "checkpoint feature convention '" + convention +
                            "' differs from this build's '" + net.feature_convention() + "'");
        }

        const auto mask = j.at("feature_mask").get<std::vector<double>>();
        if (mask.size() != kFeatureDim) {
            throw Error(ErrorKind::CorruptFile, "feature_mask must have 6 entries");
        }
        std::array<double, kFeatureDim> mask_array{};
        std::copy(mask.begin(), mask.end(), mask_array.begin());
        net.set_feature_mask(mask_array);

        const std::size_t w = static_cast<std::size_t>(cfg.hidden_width);
        const json& jp = j.at("parameters");
        auto write_piece = [&](int piece, const std::vector<double>& values) {
            auto dst = GeoNetOps::mutable_piece(net, piece);
            std::copy(values.begin(), values.end(), dst.begin());
        };
        write_piece(kPieceInputW, require_array(jp, "input_w", w * cfg.input_dim));
        write_piece(kPieceInputB, require_array(jp, "input_b", w));
        if (!jp.contains("blocks") || !jp["blocks"].is_array() ||
            jp["blocks"].size() != static_cast<std::size_t>(cfg.residual_blocks)) {
            throw Error(ErrorKind::CorruptFile, "checkpoint block list does not match config");
        }
        for (int b = 0; b < cfg.residual_blocks; ++b) {
            const json& jb = jp["blocks"][b];
            write_piece(piece_block(b, 0, false), require_array(jb, "w1", w * w));
            write_piece(piece_block(b, 0, true), require_array(jb, "b1", w));
            write_piece(piece_block(b, 1, false), require_array(jb, "w2", w * w));
            write_piece(piece_block(b, 1, true), require_array(jb, "b2", w));
        }
        write_piece(piece_output_w(cfg), require_array(jp, "output_w", cfg.classes * w));
        write_piece(piece_output_b(cfg), require_array(jp, "output_b", cfg.classes));
        return net;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::CorruptFile, std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace geoprior
