#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoprior/domain.hpp"

namespace geoprior {

using Point = std::vector<double>;

// ============================================================================
// Class statistics and weights
// ============================================================================

struct ClassCounts {
    std::vector<long> counts;  // per vocabulary class
    long n_max = 0;
    long n_total = 0;
};

ClassCounts class_counts(const Dataset& dataset);
ClassCounts class_counts(const std::vector<int>& labels, int num_classes);

struct WeightScheme {
    enum class Kind {
        Inverse,     // w_c = n_max / n_c
        InverseLog,  // w_c = 1 / ln(e + n_c)
    };
    Kind kind = Kind::Inverse;
    std::optional<double> cap;  // applied last
};

/// Per-class weights; classes with zero occurrences get weight 0.
std::vector<double> class_weights(const ClassCounts& counts, const WeightScheme& scheme);

// ============================================================================
// Samplers
// ============================================================================

/// n_draws i.i.d. indices with probability proportional to weight.
std::vector<std::size_t> weighted_draws(const std::vector<double>& weights, std::size_t n_draws,
                                        std::uint64_t seed);

/// Produces the index order for each training epoch.
class IndexSampler {
public:
    virtual ~IndexSampler() = default;
    virtual std::vector<std::size_t> epoch_indices() = 0;
    virtual std::size_t epoch_size() const = 0;
};

/// Every index once per epoch, in a fresh seeded shuffle.
std::unique_ptr<IndexSampler> make_shuffle_sampler(std::size_t n, std::uint64_t seed);

/// Weighted draws with replacement, n_draws per epoch.
std::unique_ptr<IndexSampler> make_weighted_sampler(std::vector<double> weights,
                                                    std::size_t n_draws, std::uint64_t seed);

// ============================================================================
// SMOTE
// ============================================================================

struct SmoteResult {
    std::vector<Point> points;
    std::vector<std::size_t> base_index;      // per synthetic point
    std::vector<std::size_t> neighbor_index;  // per synthetic point
    std::vector<double> lambda;               // interpolation factor drawn
    bool degenerate_copies = false;           // class had a single sample
};

/// Synthetic minority samples: base + lambda * (neighbor - base) with lambda
/// uniform on [0, 1] and the neighbor drawn from the base's k nearest
/// same-class neighbors (Euclidean). A class of size s <= k uses all s-1
/// neighbors; a single-sample class yields exact copies and sets the
/// degenerate flag.
SmoteResult smote(const std::vector<Point>& features, int k, std::size_t n_synthetic,
                  std::uint64_t seed);

// ============================================================================
// K-means
// ============================================================================

struct KMeansResult {
    std::vector<int> assignments;  // per input point
    std::vector<Point> centroids;
    int k = 0;           // effective k after the distinct-point clamp
    bool clamped = false;
    int iterations = 0;
    double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding; at most 100 iterations, stopping
/// when no centroid moves more than 1e-6. k is clamped to the number of
/// distinct points.
KMeansResult kmeans(const std::vector<Point>& points, int k, std::uint64_t seed);

// ============================================================================
// Resample plans
// ============================================================================

struct ResamplePlan {
    enum class Kind { Weights, Oversample, Undersample, Smote, Cluster };

    struct Entry {
        int class_index = -1;
        int cluster = -1;               // cluster kind only
        long source_index = -1;         // index into the class's sample list; -1 for synthetic
        bool duplicate = false;
        Point synthetic;                // smote kind only
    };

    Kind kind = Kind::Weights;
    std::vector<Entry> entries;          // full output composition for sample-producing kinds
    std::vector<double> weights;         // weights kind only
    long per_class_target = 0;           // cluster/oversample kinds
    std::vector<std::string> notes;      // k clamps, degenerate classes
};

/// Within each class: k-means clusters, every cluster duplicated up to an
/// equal share of the common per-class target, remainder duplicates going to
/// the largest clusters first. The target is the smallest count every class
/// can reach by duplication alone (equal to n_max when clusters already
/// partition evenly), so the plan never drops a sample.
ResamplePlan cluster_oversample(const std::vector<std::vector<Point>>& features_by_class,
                                int k_per_class, std::uint64_t seed);

/// Duplicates every class up to n_max, cycling samples in order.
ResamplePlan oversample_plan(const std::vector<std::vector<Point>>& features_by_class);

/// Keeps the first n_min samples of every class.
ResamplePlan undersample_plan(const std::vector<std::vector<Point>>& features_by_class);

// ============================================================================
// Hard mining and class rectification loss
// ============================================================================

struct Triplet {
    std::size_t anchor;
    std::size_t positive;
    std::size_t negative;
};

/// For every minority-class anchor with at least one same-class and one
/// different-class sample in the batch: positive = farthest same-class
/// sample, negative = nearest different-class sample (Euclidean, ties to the
/// lowest index).
std::vector<Triplet> hard_mine_triplets(const std::vector<Point>& embeddings,
                                        const std::vector<int>& labels,
                                        const std::set<int>& minority_classes);

/// Convex combination of cross-entropy and triplet hinge terms:
///   mean_i (1 - alpha_{c(i)}) * CE_i  +  mean_t alpha_{c(anchor_t)} * hinge_t
/// with hinge = max(0, d(a,p) - d(a,n) + margin). No triplets: second term 0.
double crl_loss(const std::vector<std::vector<double>>& logits,
                const std::vector<Point>& embeddings, const std::vector<int>& labels,
                const std::vector<Triplet>& triplets, const std::vector<double>& alpha_per_class,
                double margin = 0.2);

/// alpha_c = clamp(eta * (1 - n_c / n_max), 0, 1). The majority class gets 0.
std::vector<double> alpha_schedule(const ClassCounts& counts, double eta = 0.5);

// ============================================================================
// MixUp
// ============================================================================

struct FeatureBatch {
    std::vector<Point> features;
    std::vector<std::vector<double>> labels;  // one row per sample, sums to 1
};

/// features = lambda*a + (1-lambda)*b, labels likewise.
FeatureBatch mixup(const FeatureBatch& a, const FeatureBatch& b, double lambda);

}  // namespace geoprior
