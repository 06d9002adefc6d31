#pragma once

#include <array>

#include "geoprior/domain.hpp"

namespace geoprior {

/// The 6-dimensional wrapped feature vector fed to the prior network:
/// [sin(pi*a), cos(pi*a), sin(pi*b), cos(pi*b), sin(pi*d), cos(pi*d)]
/// for normalized latitude a, longitude b, date d. Each (sin, cos) pair
/// lies on the unit circle, so both ends of each wrapped axis coincide.
using EncodedFeatures = std::array<double, 6>;

constexpr int kFeatureDim = 6;

/// Identifier persisted in checkpoints so models trained under a different
/// normalization or feature order are never mixed with this one.
inline constexpr const char* kFeatureConvention = "sincos(lat/90,lon/180,dayfrac)-v1";

struct NormalizedObservation {
    double lat;   // latitude / 90, in [-1, 1]
    double lon;   // longitude / 180, in [-1, 1)
    double date;  // 2 * day_index / year_length - 1, in [-1, 1)
};

NormalizedObservation normalize_observation(const Observation& obs);

/// (sin(pi*x), cos(pi*x)). encode(-1) == encode(1) up to rounding.
std::array<double, 2> cyclical_encode(double x);

EncodedFeatures encode_observation(const Observation& obs);

/// Encoded features for a whole dataset, in observation order.
std::vector<EncodedFeatures> encode_dataset(const Dataset& dataset);

}  // namespace geoprior
