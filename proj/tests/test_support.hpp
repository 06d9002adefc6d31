#pragma once

// Helpers shared between the unit tests and the acceptance suite: an
// independent forward pass for cross-checking, kink-aware batch drawing for
// finite-difference probes, and small geometry oracles.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "geoprior/geonet.hpp"
#include "geoprior/rng.hpp"

namespace geoprior::testing {

inline ClassVocabulary vocab_of(int classes) {
    std::vector<std::string> labels;
    for (int c = 0; c < classes; ++c) labels.push_back("sp" + std::to_string(c));
    return ClassVocabulary::from_labels(labels);
}

inline GeoNetConfig small_config(int width, int classes, std::uint64_t seed) {
    GeoNetConfig cfg;
    cfg.hidden_width = width;
    cfg.classes = classes;
    cfg.seed = seed;
    return cfg;
}

inline Batch random_batch(Rng& rng, std::size_t n, int classes, bool weighted) {
    Batch batch;
    for (std::size_t i = 0; i < n; ++i) {
        EncodedFeatures f{};
        for (double& v : f) v = rng.uniform(-1.0, 1.0);
        batch.features.push_back(f);
        batch.labels.push_back(static_cast<int>(rng.uniform_index(classes)));
        batch.weights.push_back(weighted ? rng.uniform(0.2, 2.0) : 1.0);
    }
    return batch;
}

/// Independent reference forward pass, written against the layer views
/// directly. Returns the softmax output and the smallest |preactivation|
/// seen, which tells whether a finite-difference probe of step h can cross a
/// ReLU kink.
inline std::pair<ProbVector, double> reference_forward(const GeoNet& net,
                                                       const EncodedFeatures& x) {
    const int width = net.config().hidden_width;
    double min_pre = 1e300;
    std::vector<double> h(width);
    for (int j = 0; j < width; ++j) {
        double s = net.input_b()[j];
        for (int d = 0; d < 6; ++d) s += net.input_w()[j * 6 + d] * x[d] * net.feature_mask()[d];
        min_pre = std::min(min_pre, std::abs(s));
        h[j] = std::max(s, 0.0);
    }
    for (int b = 0; b < net.config().residual_blocks; ++b) {
        std::vector<double> t1(width), t2(width);
        for (int i = 0; i < width; ++i) {
            double s = net.block_b(b, 0)[i];
            for (int k = 0; k < width; ++k) s += net.block_w(b, 0)[i * width + k] * h[k];
            min_pre = std::min(min_pre, std::abs(s));
            t1[i] = std::max(s, 0.0);
        }
        for (int j = 0; j < width; ++j) {
            double s = net.block_b(b, 1)[j];
            for (int k = 0; k < width; ++k) s += net.block_w(b, 1)[j * width + k] * t1[k];
            min_pre = std::min(min_pre, std::abs(s));
            t2[j] = std::max(s, 0.0);
        }
        for (int j = 0; j < width; ++j) h[j] += t2[j];
    }
    std::vector<double> logits(net.config().classes);
    double max_logit = -1e300;
    for (int c = 0; c < net.config().classes; ++c) {
        double s = net.output_b()[c];
        for (int j = 0; j < width; ++j) s += net.output_w()[c * width + j] * h[j];
        logits[c] = s;
        max_logit = std::max(max_logit, s);
    }
    double lse = 0.0;
    for (double l : logits) lse += std::exp(l - max_logit);
    ProbVector probs(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - max_logit) / lse;
    }
    return {probs, min_pre};
}

/// Batch whose preactivations all sit safely away from the ReLU kinks, so
/// central differences with step 1e-5 stay on one linear piece.
inline Batch kink_free_batch(const GeoNet& net, Rng& rng, std::size_t n, int classes,
                             bool weighted) {
    for (;;) {
        const Batch batch = random_batch(rng, n, classes, weighted);
        double min_pre = 1e300;
        for (const EncodedFeatures& x : batch.features) {
            min_pre = std::min(min_pre, reference_forward(net, x).second);
        }
        if (min_pre > 1e-3) return batch;
    }
}

/// Central finite differences against the analytic gradient. Gradients below
/// the probe's own noise floor (absolute 1e-6) count as matching zeros.
inline double max_relative_gradient_error(GeoNet& net, const Batch& batch,
                                          const std::function<double(const GeoNet&)>& loss_only,
                                          const std::vector<double>& analytic) {
    const double step = 1e-5;
    double worst = 0.0;
    auto params = net.parameters();
    for (long i = 0; i < net.parameter_count(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss_only(net);
        params[i] = saved - step;
        const double down = loss_only(net);
        params[i] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

/// Distance from a point to the segment [a, b].
inline double point_to_segment(const std::vector<double>& p, const std::vector<double>& a,
                               const std::vector<double>& b) {
    double ab2 = 0.0, ap_ab = 0.0;
    for (std::size_t d = 0; d < p.size(); ++d) {
        ab2 += (b[d] - a[d]) * (b[d] - a[d]);
        ap_ab += (p[d] - a[d]) * (b[d] - a[d]);
    }
    const double t = ab2 == 0.0 ? 0.0 : std::clamp(ap_ab / ab2, 0.0, 1.0);
    double dist2 = 0.0;
    for (std::size_t d = 0; d < p.size(); ++d) {
        const double proj = a[d] + t * (b[d] - a[d]);
        dist2 += (p[d] - proj) * (p[d] - proj);
    }
    return std::sqrt(dist2);
}

}  // namespace geoprior::testing
