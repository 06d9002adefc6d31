#include "geoprior/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace geoprior {

namespace {

/// Normalizes before flooring so any positive scaling of an input is
/// absorbed exactly and cannot reorder the floored entries.
double inverse_sum(const ProbVector& p) {
    double sum = 0.0;
    for (double v : p) sum += v;
    return sum > 0.0 ? 1.0 / sum : 1.0;
}

}  // namespace

ProbVector fuse_posteriors(const ProbVector& p_image, const ProbVector& p_geo, double epsilon) {
    if (p_image.size() != p_geo.size()) {
        throw Error(ErrorKind::LengthMismatch,
                    "cannot fuse vectors of length " + std::to_string(p_image.size()) + " and " +
                        std::to_string(p_geo.size()));
    }
    const std::size_t n = p_image.size();
    const double image_scale = inverse_sum(p_image);
    const double geo_scale = inverse_sum(p_geo);
    ProbVector log_product(n);
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = std::max(p_image[i] * image_scale, epsilon);
        const double b = std::max(p_geo[i] * geo_scale, epsilon);
        log_product[i] = std::log(a) + std::log(b);
        max_log = std::max(max_log, log_product[i]);
    }
    double sum = 0.0;
    ProbVector fused(n);
    for (std::size_t i = 0; i < n; ++i) {
        fused[i] = std::exp(log_product[i] - max_log);
        sum += fused[i];
    }
    for (double& v : fused) v /= sum;
    return fused;
}

std::vector<int> top_k(const ProbVector& p, int k) {
    const int c = static_cast<int>(p.size());
    if (k < 1 || k > c) {
        throw Error(ErrorKind::KOutOfRange,
                    "k = " + std::to_string(k) + " outside [1, " + std::to_string(c) + "]");
    }
    std::vector<int> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
        if (p[a] != p[b]) return p[a] > p[b];
        return a < b;
    });
    order.resize(k);
    return order;
}

ProbMatrix fuse_file(const ProbMatrix& image_probs, const ProbMatrix& geo_probs, double epsilon) {
    if (image_probs.labels != geo_probs.labels) {
        throw Error(ErrorKind::HeaderMismatch,
                    "image and geo probability files carry different class headers");
    }
    std::unordered_map<std::string, std::size_t> geo_row;
    geo_row.reserve(geo_probs.size());
    for (std::size_t i = 0; i < geo_probs.size(); ++i) {
        geo_row[geo_probs.obs_ids[i]] = i;
    }
    std::unordered_map<std::string, bool> image_has;
    image_has.reserve(image_probs.size());
    for (const std::string& id : image_probs.obs_ids) image_has[id] = true;
    for (const std::string& id : geo_probs.obs_ids) {
        if (!image_has.count(id)) {
            throw Error(ErrorKind::MissingObservation,
                        "obs_id '" + id + "' present in geo probabilities but not in image file");
        }
    }

    ProbMatrix fused;
    fused.labels = image_probs.labels;
    fused.obs_ids = image_probs.obs_ids;
    fused.rows.reserve(image_probs.size());
    for (std::size_t i = 0; i < image_probs.size(); ++i) {
        auto it = geo_row.find(image_probs.obs_ids[i]);
        if (it == geo_row.end()) {
            throw Error(ErrorKind::MissingObservation,
                        "obs_id '" + image_probs.obs_ids[i] +
                            "' present in image probabilities but not in geo file");
        }
        fused.rows.push_back(fuse_posteriors(image_probs.rows[i], geo_probs.rows[it->second], epsilon));
    }
    return fused;
}

}  // namespace geoprior
