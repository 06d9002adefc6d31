#include "geoprior/encode.hpp"

#include <cmath>

namespace geoprior {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

NormalizedObservation normalize_observation(const Observation& obs) {
    NormalizedObservation n;
    n.lat = obs.latitude / 90.0;
    n.lon = obs.longitude / 180.0;
    n.date = 2.0 * static_cast<double>(obs.date.day_index()) /
                 static_cast<double>(obs.date.year_length()) -
             1.0;
    return n;
}

std::array<double, 2> cyclical_encode(double x) {
    return {std::sin(kPi * x), std::cos(kPi * x)};
}

EncodedFeatures encode_observation(const Observation& obs) {
    const NormalizedObservation n = normalize_observation(obs);
    const auto lat = cyclical_encode(n.lat);
    const auto lon = cyclical_encode(n.lon);
    const auto date = cyclical_encode(n.date);
    return {lat[0], lat[1], lon[0], lon[1], date[0], date[1]};
}

std::vector<EncodedFeatures> encode_dataset(const Dataset& dataset) {
    std::vector<EncodedFeatures> features;
    features.reserve(dataset.size());
    for (const Observation& obs : dataset.observations) {
        features.push_back(encode_observation(obs));
    }
    return features;
}

}  // namespace geoprior
