#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace geoprior {

/// Softmax with max-subtraction; finite for any finite logits.
inline std::vector<double> softmax_stable(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

/// -log softmax(logits)[target], computed without forming the exponentials'
/// ratio directly.
inline double cross_entropy_from_logits(const std::vector<double>& logits, int target) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max_logit);
    return std::log(sum) - (logits[target] - max_logit);
}

}  // namespace geoprior
