#pragma once

#include "geoprior/domain.hpp"

namespace geoprior {

/// Elementwise product of two class distributions, renormalized.
///
/// Inputs are normalized (any positive scaling is absorbed exactly), then
/// floored at epsilon so a hard zero on one side cannot erase the ranking
/// information of the other, and the product is taken in log space so it
/// survives vocabularies large enough for individual probabilities to
/// underflow. Output sums to 1 within 1e-9.
ProbVector fuse_posteriors(const ProbVector& p_image, const ProbVector& p_geo,
                           double epsilon = 1e-12);

/// Indices of the k largest probabilities, descending; ties broken by
/// ascending vocabulary index.
std::vector<int> top_k(const ProbVector& p, int k);

/// Row-wise fusion of two matrices joined on obs_id. Output row order follows
/// the image matrix. Headers must match exactly; every obs_id must appear in
/// both inputs exactly once.
ProbMatrix fuse_file(const ProbMatrix& image_probs, const ProbMatrix& geo_probs,
                     double epsilon = 1e-12);

}  // namespace geoprior
