#include "geoprior/imbalance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoprior/rng.hpp"
#include "geoprior/softmax.hpp"

namespace geoprior {

namespace {

double squared_distance(const Point& a, const Point& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

}  // namespace

// ============================================================================
// Counts and weights
// ============================================================================

ClassCounts class_counts(const std::vector<int>& labels, int num_classes) {
    ClassCounts counts;
    counts.counts.assign(num_classes, 0);
    for (int label : labels) {
        ++counts.counts[label];
        ++counts.n_total;
    }
    for (long c : counts.counts) counts.n_max = std::max(counts.n_max, c);
    return counts;
}

ClassCounts class_counts(const Dataset& dataset) {
    std::vector<int> labels;
    labels.reserve(dataset.size());
    for (const Observation& obs : dataset.observations) {
        labels.push_back(dataset.vocabulary.require_index(obs.species));
    }
    return class_counts(labels, dataset.vocabulary.size());
}

std::vector<double> class_weights(const ClassCounts& counts, const WeightScheme& scheme) {
    if (counts.n_total == 0) {
        throw Error(ErrorKind::AllEmpty, "cannot derive class weights from an empty dataset");
    }
    std::vector<double> weights(counts.counts.size(), 0.0);
    for (std::size_t c = 0; c < counts.counts.size(); ++c) {
        const long n = counts.counts[c];
        if (n == 0) continue;  // absent classes get weight 0
        double w;
        switch (scheme.kind) {
            case WeightScheme::Kind::Inverse:
                w = static_cast<double>(counts.n_max) / static_cast<double>(n);
                break;
            case WeightScheme::Kind::InverseLog:
                w = 1.0 / std::log(std::exp(1.0) + static_cast<double>(n));
                break;
            default:
                throw Error(ErrorKind::InvalidConfig, "unknown weight scheme");
        }
        if (scheme.cap) w = std::min(w, *scheme.cap);
        weights[c] = w;
    }
    return weights;
}

// ============================================================================
// Samplers
// ============================================================================

std::vector<std::size_t> weighted_draws(const std::vector<double>& weights, std::size_t n_draws,
                                        std::uint64_t seed) {
    std::vector<double> cumulative(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) {
            throw Error(ErrorKind::InvalidConfig, "negative sampling weight at index " +
                                                      std::to_string(i));
        }
        total += weights[i];
        cumulative[i] = total;
    }
    if (total <= 0.0) {
        throw Error(ErrorKind::AllZeroWeights, "sampling weights sum to zero");
    }

    Rng rng(seed);
    std::vector<std::size_t> draws(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) {
        const double u = rng.uniform() * total;
        // First index whose cumulative weight exceeds u; zero-weight indices
        // have empty intervals and are never selected.
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        draws[d] = std::min<std::size_t>(it - cumulative.begin(), weights.size() - 1);
    }
    return draws;
}

namespace {

class ShuffleSampler final : public IndexSampler {
public:
    ShuffleSampler(std::size_t n, std::uint64_t seed) : rng_(seed) {
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    std::vector<std::size_t> epoch_indices() override {
        rng_.shuffle(order_);
        return order_;
    }

    std::size_t epoch_size() const override { return order_.size(); }

private:
    Rng rng_;
    std::vector<std::size_t> order_;
};

class WeightedSampler final : public IndexSampler {
public:
    WeightedSampler(std::vector<double> weights, std::size_t n_draws, std::uint64_t seed)
        : weights_(std::move(weights)), n_draws_(n_draws), rng_(seed) {}

    std::vector<std::size_t> epoch_indices() override {
        // Same draw semantics as weighted_draws, with a persistent stream.
        return weighted_draws(weights_, n_draws_, rng_.raw());
    }

    std::size_t epoch_size() const override { return n_draws_; }

private:
    std::vector<double> weights_;
    std::size_t n_draws_;
    Rng rng_;
};

}  // namespace

std::unique_ptr<IndexSampler> make_shuffle_sampler(std::size_t n, std::uint64_t seed) {
    return std::make_unique<ShuffleSampler>(n, seed);
}

std::unique_ptr<IndexSampler> make_weighted_sampler(std::vector<double> weights,
                                                    std::size_t n_draws, std::uint64_t seed) {
    return std::make_unique<WeightedSampler>(std::move(weights), n_draws, seed);
}

// ============================================================================
// SMOTE
// ============================================================================

SmoteResult smote(const std::vector<Point>& features, int k, std::size_t n_synthetic,
                  std::uint64_t seed) {
    if (features.empty()) {
        throw Error(ErrorKind::AllEmpty, "SMOTE needs at least one sample");
    }
    const std::size_t s = features.size();
    SmoteResult result;
    result.points.reserve(n_synthetic);
    Rng rng(seed);

    if (s == 1) {
        result.degenerate_copies = true;
        for (std::size_t i = 0; i < n_synthetic; ++i) {
            result.points.push_back(features[0]);
            result.base_index.push_back(0);
            result.neighbor_index.push_back(0);
            result.lambda.push_back(0.0);
        }
        return result;
    }

    const std::size_t k_eff = std::min<std::size_t>(std::max(k, 1), s - 1);

    // k nearest same-class neighbors per sample (brute force, fine at this scale).
    std::vector<std::vector<std::size_t>> neighbors(s);
    for (std::size_t i = 0; i < s; ++i) {
        std::vector<std::size_t> order;
        order.reserve(s - 1);
        for (std::size_t j = 0; j < s; ++j) {
            if (j != i) order.push_back(j);
        }
        std::partial_sort(order.begin(), order.begin() + k_eff, order.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double da = squared_distance(features[i], features[a]);
                              const double db = squared_distance(features[i], features[b]);
                              if (da != db) return da < db;
                              return a < b;
                          });
        order.resize(k_eff);
        neighbors[i] = std::move(order);
    }

    for (std::size_t n = 0; n < n_synthetic; ++n) {
        const std::size_t base = rng.uniform_index(s);
        const std::size_t neighbor = neighbors[base][rng.uniform_index(k_eff)];
        const double lambda = rng.uniform();
        Point p(features[base].size());
        for (std::size_t d = 0; d < p.size(); ++d) {
            p[d] = features[base][d] + lambda * (features[neighbor][d] - features[base][d]);
        }
        result.points.push_back(std::move(p));
        result.base_index.push_back(base);
        result.neighbor_index.push_back(neighbor);
        result.lambda.push_back(lambda);
    }
    return result;
}

// ============================================================================
// K-means
// ============================================================================

KMeansResult kmeans(const std::vector<Point>& points, int k, std::uint64_t seed) {
    if (points.empty()) {
        throw Error(ErrorKind::AllEmpty, "k-means needs at least one point");
    }
    if (k < 1) {
        throw Error(ErrorKind::InvalidConfig, "k must be at least 1");
    }

    std::vector<Point> distinct = points;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    KMeansResult result;
    result.k = std::min<int>(k, static_cast<int>(distinct.size()));
    result.clamped = result.k != k;

    Rng rng(seed);

    // k-means++ seeding over the original point list.
    std::vector<Point> centroids;
    centroids.reserve(result.k);
    centroids.push_back(points[rng.uniform_index(points.size())]);
    std::vector<double> d2(points.size());
    while (static_cast<int>(centroids.size()) < result.k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double best = squared_distance(points[i], centroids[0]);
            for (std::size_t c = 1; c < centroids.size(); ++c) {
                best = std::min(best, squared_distance(points[i], centroids[c]));
            }
            d2[i] = best;
            total += best;
        }
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t chosen = points.size() - 1;
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc += d2[i];
            if (u < acc) {
                chosen = i;
                break;
            }
        }
        centroids.push_back(points[chosen]);
    }

    std::vector<int> assignments(points.size(), 0);
    const int max_iterations = 100;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best = 0;
            double best_d = squared_distance(points[i], centroids[0]);
            for (int c = 1; c < result.k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            assignments[i] = best;
        }

        double max_shift = 0.0;
        for (int c = 0; c < result.k; ++c) {
            Point mean(points[0].size(), 0.0);
            long members = 0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (assignments[i] != c) continue;
                ++members;
                for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += points[i][d];
            }
            if (members == 0) continue;  // keep the previous centroid
            for (double& v : mean) v /= static_cast<double>(members);
            max_shift = std::max(max_shift, distance(mean, centroids[c]));
            centroids[c] = std::move(mean);
        }
        if (max_shift < 1e-6) {
            ++iter;
            break;
        }
    }

    result.iterations = iter;
    result.centroids = std::move(centroids);
    result.assignments = std::move(assignments);
    for (std::size_t i = 0; i < points.size(); ++i) {
        result.inertia += squared_distance(points[i], result.centroids[result.assignments[i]]);
    }
    return result;
}

// ============================================================================
// Resample plans
// ============================================================================

namespace {

void require_nonempty_classes(const std::vector<std::vector<Point>>& features_by_class) {
    if (features_by_class.empty()) {
        throw Error(ErrorKind::AllEmpty, "no classes to resample");
    }
    for (std::size_t c = 0; c < features_by_class.size(); ++c) {
        if (features_by_class[c].empty()) {
            throw Error(ErrorKind::InvalidConfig,
                        "class " + std::to_string(c) + " has no samples to resample");
        }
    }
}

}  // namespace

ResamplePlan cluster_oversample(const std::vector<std::vector<Point>>& features_by_class,
                                int k_per_class, std::uint64_t seed) {
    require_nonempty_classes(features_by_class);
    const int num_classes = static_cast<int>(features_by_class.size());

    struct ClassClusters {
        std::vector<std::vector<long>> members;  // per cluster, sample indices ascending
        int k = 0;
    };
    std::vector<ClassClusters> clustered(num_classes);

    ResamplePlan plan;
    plan.kind = ResamplePlan::Kind::Cluster;

    long target = 0;
    for (int c = 0; c < num_classes; ++c) {
        // Per-class derived seed so parallel and serial runs would agree.
        KMeansResult km = kmeans(features_by_class[c], k_per_class,
                                 seed + static_cast<std::uint64_t>(c));
        if (km.clamped) {
            plan.notes.push_back("class " + std::to_string(c) + ": k clamped to " +
                                 std::to_string(km.k));
        }
        ClassClusters& cc = clustered[c];
        std::vector<std::vector<long>> members(km.k);
        for (std::size_t i = 0; i < km.assignments.size(); ++i) {
            members[km.assignments[i]].push_back(static_cast<long>(i));
        }
        // A Lloyd cluster can end up empty; only populated clusters carry
        // shares of the per-class target.
        for (auto& m : members) {
            if (!m.empty()) cc.members.push_back(std::move(m));
        }
        cc.k = static_cast<int>(cc.members.size());
        if (cc.k != km.k) {
            plan.notes.push_back("class " + std::to_string(c) + ": dropped " +
                                 std::to_string(km.k - cc.k) + " empty cluster(s)");
        }
        long largest = 0;
        for (const auto& m : cc.members) largest = std::max<long>(largest, m.size());
        // Smallest per-class total keeping this class's clusters balanced.
        target = std::max(target, largest * cc.k);
    }
    plan.per_class_target = target;

    for (int c = 0; c < num_classes; ++c) {
        const ClassClusters& cc = clustered[c];
        const long base = target / cc.k;
        const long remainder = target % cc.k;

        // Remainder duplicates go to the largest clusters first.
        std::vector<int> cluster_order(cc.k);
        std::iota(cluster_order.begin(), cluster_order.end(), 0);
        std::sort(cluster_order.begin(), cluster_order.end(), [&](int a, int b) {
            if (cc.members[a].size() != cc.members[b].size()) {
                return cc.members[a].size() > cc.members[b].size();
            }
            return a < b;
        });
        std::vector<long> cluster_target(cc.k, base);
        for (long r = 0; r < remainder; ++r) ++cluster_target[cluster_order[r]];

        for (int j = 0; j < cc.k; ++j) {
            const std::vector<long>& members = cc.members[j];
            for (long n = 0; n < cluster_target[j]; ++n) {
                ResamplePlan::Entry entry;
                entry.class_index = c;
                entry.cluster = j;
                entry.source_index = members[n % members.size()];
                entry.duplicate = n >= static_cast<long>(members.size());
                plan.entries.push_back(std::move(entry));
            }
        }
    }
    return plan;
}

ResamplePlan oversample_plan(const std::vector<std::vector<Point>>& features_by_class) {
    require_nonempty_classes(features_by_class);
    long n_max = 0;
    for (const auto& f : features_by_class) n_max = std::max<long>(n_max, f.size());

    ResamplePlan plan;
    plan.kind = ResamplePlan::Kind::Oversample;
    plan.per_class_target = n_max;
    for (std::size_t c = 0; c < features_by_class.size(); ++c) {
        const long size = static_cast<long>(features_by_class[c].size());
        for (long n = 0; n < n_max; ++n) {
            ResamplePlan::Entry entry;
            entry.class_index = static_cast<int>(c);
            entry.source_index = n % size;
            entry.duplicate = n >= size;
            plan.entries.push_back(std::move(entry));
        }
    }
    return plan;
}

ResamplePlan undersample_plan(const std::vector<std::vector<Point>>& features_by_class) {
    require_nonempty_classes(features_by_class);
    long n_min = std::numeric_limits<long>::max();
    for (const auto& f : features_by_class) n_min = std::min<long>(n_min, f.size());

    ResamplePlan plan;
    plan.kind = ResamplePlan::Kind::Undersample;
    plan.per_class_target = n_min;
    for (std::size_t c = 0; c < features_by_class.size(); ++c) {
        for (long n = 0; n < n_min; ++n) {
            ResamplePlan::Entry entry;
            entry.class_index = static_cast<int>(c);
            entry.source_index = n;
            plan.entries.push_back(std::move(entry));
        }
    }
    return plan;
}

// ============================================================================
// Hard mining and CRL
// ============================================================================

std::vector<Triplet> hard_mine_triplets(const std::vector<Point>& embeddings,
                                        const std::vector<int>& labels,
                                        const std::set<int>& minority_classes) {
    if (embeddings.size() != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "embeddings and labels differ in length");
    }
    std::vector<Triplet> triplets;
    const std::size_t n = embeddings.size();
    for (std::size_t anchor = 0; anchor < n; ++anchor) {
        if (!minority_classes.count(labels[anchor])) continue;

        bool have_positive = false, have_negative = false;
        std::size_t positive = 0, negative = 0;
        double far_pos = -1.0, near_neg = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == anchor) continue;
            const double d = squared_distance(embeddings[anchor], embeddings[j]);
            if (labels[j] == labels[anchor]) {
                if (d > far_pos) {
                    far_pos = d;
                    positive = j;
                    have_positive = true;
                }
            } else {
                if (d < near_neg) {
                    near_neg = d;
                    negative = j;
                    have_negative = true;
                }
            }
        }
        if (have_positive && have_negative) {
            triplets.push_back({anchor, positive, negative});
        }
    }
    return triplets;
}

double crl_loss(const std::vector<std::vector<double>>& logits,
                const std::vector<Point>& embeddings, const std::vector<int>& labels,
                const std::vector<Triplet>& triplets, const std::vector<double>& alpha_per_class,
                double margin) {
    if (logits.size() != labels.size() || embeddings.size() != labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "batch arrays differ in length");
    }
    for (double a : alpha_per_class) {
        if (a < 0.0 || a > 1.0) {
            throw Error(ErrorKind::InvalidConfig, "alpha values must lie in [0, 1]");
        }
    }

    double ce_term = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double alpha = alpha_per_class[labels[i]];
        ce_term += (1.0 - alpha) * cross_entropy_from_logits(logits[i], labels[i]);
    }
    ce_term /= static_cast<double>(labels.size());

    double triplet_term = 0.0;
    if (!triplets.empty()) {
        for (const Triplet& t : triplets) {
            const double alpha = alpha_per_class[labels[t.anchor]];
            const double hinge = std::max(
                0.0, distance(embeddings[t.anchor], embeddings[t.positive]) -
                         distance(embeddings[t.anchor], embeddings[t.negative]) + margin);
            triplet_term += alpha * hinge;
        }
        triplet_term /= static_cast<double>(triplets.size());
    }
    return ce_term + triplet_term;
}

std::vector<double> alpha_schedule(const ClassCounts& counts, double eta) {
    std::vector<double> alpha(counts.counts.size(), 0.0);
    if (counts.n_max == 0) return alpha;
    for (std::size_t c = 0; c < counts.counts.size(); ++c) {
        const double ratio = static_cast<double>(counts.counts[c]) /
                             static_cast<double>(counts.n_max);
        alpha[c] = std::clamp(eta * (1.0 - ratio), 0.0, 1.0);
    }
    return alpha;
}

// ============================================================================
// MixUp
// ============================================================================

FeatureBatch mixup(const FeatureBatch& a, const FeatureBatch& b, double lambda) {
    if (a.features.size() != b.features.size() || a.labels.size() != b.labels.size() ||
        a.features.size() != a.labels.size()) {
        throw Error(ErrorKind::ShapeMismatch, "mixup batches differ in size");
    }
    FeatureBatch mixed;
    mixed.features.resize(a.features.size());
    mixed.labels.resize(a.labels.size());
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        if (a.features[i].size() != b.features[i].size() ||
            a.labels[i].size() != b.labels[i].size()) {
            throw Error(ErrorKind::ShapeMismatch, "mixup rows differ in width");
        }
        mixed.features[i].resize(a.features[i].size());
        for (std::size_t d = 0; d < a.features[i].size(); ++d) {
            mixed.features[i][d] = lambda * a.features[i][d] + (1.0 - lambda) * b.features[i][d];
        }
        mixed.labels[i].resize(a.labels[i].size());
        for (std::size_t d = 0; d < a.labels[i].size(); ++d) {
            mixed.labels[i][d] = lambda * a.labels[i][d] + (1.0 - lambda) * b.labels[i][d];
        }
    }
    return mixed;
}

}  // namespace geoprior
