#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geoprior/domain.hpp"

namespace geoprior {

/// Generator knobs for synthetic sighting datasets built from confusable
/// species pairs: each species gets a Gaussian geographic range and a
/// circular Gaussian seasonal window, paired species are the ones a simulated
/// image classifier mixes up.
struct SynthSpec {
    int n_pairs = 10;          // classes C = 2 * n_pairs
    long n_train = 5000;
    long n_test = 1000;
    double imbalance_gamma = 1.5;  // class c mass proportional to (c+1)^-gamma
    double geo_sigma = 3.0;        // range spread, degrees
    double pair_separation = 6.0;  // min distance between paired centers, in geo_sigma units
    double season_width = 30.0;    // seasonal window spread, days
    double image_confusion = 0.45; // mass the image model puts on the pair partner
    std::uint64_t seed = 1;

    int classes() const { return 2 * n_pairs; }
    void validate() const;  // throws InvalidConfig / InfeasibleSpec
};

/// Ground-truth parameters of one generated species.
struct SpeciesModel {
    double center_lat = 0.0;
    double center_lon = 0.0;
    double season_mean_day = 0.0;     // day-of-year of the window center
    long train_count = 0;
    long test_count = 0;
    double flip_probability = 0.0;    // chance the image model perceives the partner
};

struct SynthOutput {
    Dataset train;
    Dataset test;
    ProbMatrix image_probs;  // simulated image posterior for the test set
    std::vector<SpeciesModel> generator;
};

/// Fully seed-deterministic generation. Coordinates outside the legal ranges
/// are resampled (never clipped); dates wrap around the calendar.
SynthOutput generate_dataset(const SynthSpec& spec);

/// Per-class counts, range centers, seasonal windows, and the achieved
/// imbalance ratio, as a text summary.
std::string describe_generator(const SynthOutput& output);

}  // namespace geoprior
