#include "doctest.h"

#include <cmath>
#include <sstream>

#include "geoprior/encode.hpp"
#include "geoprior/synth.hpp"

using namespace geoprior;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.n_pairs = 2;
    spec.n_train = 400;
    spec.n_test = 200;
    spec.imbalance_gamma = 0.0;
    spec.seed = 11;
    return spec;
}

}  // namespace

TEST_CASE("gamma 0 gives equal class counts") {
    const SynthOutput output = generate_dataset(small_spec());
    for (const SpeciesModel& m : output.generator) {
        CHECK(m.train_count == 100);
        CHECK(m.test_count == 50);
    }
}

TEST_CASE("gamma 1 with one pair gives a 2:1 count ratio") {
    SynthSpec spec = small_spec();
    spec.n_pairs = 1;
    spec.imbalance_gamma = 1.0;
    spec.n_train = 300;
    const SynthOutput output = generate_dataset(spec);
    // Masses 1 and 1/2 split 300 as 200:100.
    CHECK(output.generator[0].train_count == 200);
    CHECK(output.generator[1].train_count == 100);
}

TEST_CASE("every class keeps at least one training sample under extreme imbalance") {
    SynthSpec spec = small_spec();
    spec.n_pairs = 5;
    spec.imbalance_gamma = 4.0;
    spec.n_train = 60;
    const SynthOutput output = generate_dataset(spec);
    long total = 0;
    for (const SpeciesModel& m : output.generator) {
        CHECK(m.train_count >= 1);
        total += m.train_count;
    }
    CHECK(total == 60);
}

TEST_CASE("generation is seed-deterministic") {
    const SynthOutput a = generate_dataset(small_spec());
    const SynthOutput b = generate_dataset(small_spec());
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train.observations[i].obs_id == b.train.observations[i].obs_id);
        CHECK(a.train.observations[i].latitude == b.train.observations[i].latitude);
        CHECK(a.train.observations[i].longitude == b.train.observations[i].longitude);
    }
    CHECK(a.image_probs.rows == b.image_probs.rows);
    CHECK(describe_generator(a) == describe_generator(b));

    SynthSpec other = small_spec();
    other.seed = 12;
    const SynthOutput c = generate_dataset(other);
    CHECK(a.train.observations[0].latitude != c.train.observations[0].latitude);
}

TEST_CASE("generated datasets survive validation round trips") {
    const SynthOutput output = generate_dataset(small_spec());
    for (const Dataset* ds : {&output.train, &output.test}) {
        const ValidationResult result = validate_dataset(to_raw(*ds));
        REQUIRE(result.ok());
        CHECK(result.dataset->size() == ds->size());
        CHECK(result.dataset->vocabulary.classes == ds->vocabulary.classes);
    }
}

TEST_CASE("coordinates stay in legal ranges and pairs share a genus") {
    SynthSpec spec = small_spec();
    spec.geo_sigma = 15.0;  // wide ranges exercise the boundary resampling
    const SynthOutput output = generate_dataset(spec);
    for (const Observation& obs : output.train.observations) {
        CHECK(obs.latitude >= -90.0);
        CHECK(obs.latitude <= 90.0);
        CHECK(obs.longitude >= -180.0);
        CHECK(obs.longitude < 180.0);
    }
    const auto& h = output.train.hierarchy;
    CHECK(h.level2_of("species_000") == h.level2_of("species_001"));
    CHECK(h.level2_of("species_002") == h.level2_of("species_003"));
    CHECK(h.level2_of("species_000") != h.level2_of("species_002"));
}

TEST_CASE("image probability rows are distributions") {
    const SynthOutput output = generate_dataset(small_spec());
    REQUIRE(output.image_probs.size() == output.test.size());
    for (const ProbVector& row : output.image_probs.rows) {
        double sum = 0.0;
        for (double v : row) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("a nearest-range-center classifier solves the default geometry") {
    SynthSpec spec;
    spec.n_pairs = 4;
    spec.n_train = 400;
    spec.n_test = 1200;
    spec.pair_separation = 6.0;
    spec.season_width = 10.0;  // disjoint seasonal windows
    spec.seed = 5;
    const SynthOutput output = generate_dataset(spec);

    long correct = 0;
    for (const Observation& obs : output.test.observations) {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t c = 0; c < output.generator.size(); ++c) {
            const double dlat = obs.latitude - output.generator[c].center_lat;
            const double dlon = obs.longitude - output.generator[c].center_lon;
            const double d = dlat * dlat + dlon * dlon;
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        if (output.test.vocabulary.classes[best] == obs.species) ++correct;
    }
    CHECK(static_cast<double>(correct) / output.test.size() >= 0.99);
}

TEST_CASE("simulated image accuracy sits at 1 - confusion - leak") {
    SynthSpec spec;
    spec.n_pairs = 10;
    spec.n_train = 2000;
    spec.n_test = 1500;
    spec.imbalance_gamma = 1.5;
    spec.image_confusion = 0.45;
    spec.seed = 21;
    const SynthOutput output = generate_dataset(spec);

    long correct = 0;
    for (std::size_t i = 0; i < output.test.size(); ++i) {
        const ProbVector& row = output.image_probs.rows[i];
        int best = 0;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = static_cast<int>(c);
        }
        if (output.test.vocabulary.classes[best] == output.test.observations[i].species) {
            ++correct;
        }
    }
    const double micro = static_cast<double>(correct) / output.test.size();
    CHECK(std::abs(micro - 0.50) <= 0.03);
}

TEST_CASE("rarer classes suffer more image confusion") {
    SynthSpec spec;
    spec.n_pairs = 10;
    spec.imbalance_gamma = 1.5;
    spec.seed = 3;
    const SynthOutput output = generate_dataset(spec);
    // Class 0 is the most common, the last class the rarest.
    CHECK(output.generator.front().flip_probability <
          output.generator.back().flip_probability);
    for (const SpeciesModel& m : output.generator) {
        CHECK(m.flip_probability >= 0.0);
        CHECK(m.flip_probability <= 0.9);
    }
}

TEST_CASE("the generator summary lists every class") {
    const SynthOutput output = generate_dataset(small_spec());
    const std::string summary = describe_generator(output);
    std::size_t rows = 0;
    std::stringstream stream(summary);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.rfind("species_", 0) == 0) ++rows;
    }
    CHECK(rows == output.generator.size());
    CHECK(summary.find("imbalance ratio") != std::string::npos);
}

TEST_CASE("infeasible and invalid specs are rejected") {
    SynthSpec spec = small_spec();
    spec.geo_sigma = 25.0;
    CHECK_THROWS_AS(generate_dataset(spec), Error);

    spec = small_spec();
    spec.image_confusion = 0.5;
    CHECK_THROWS_AS(generate_dataset(spec), Error);

    spec = small_spec();
    spec.n_train = 2;  // cannot cover 4 classes
    CHECK_THROWS_AS(generate_dataset(spec), Error);

    spec = small_spec();
    spec.n_pairs = 0;
    CHECK_THROWS_AS(generate_dataset(spec), Error);
}
