#include "geoprior/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "geoprior/rng.hpp"
#include "geoprior/text.hpp"

namespace geoprior {

namespace {

// Fraction of image-model mass spread over classes outside the pair.
constexpr double kImageLeak = 0.05;
// Dirichlet jitter concentration: visible texture on the simulated rows
// without disturbing their ranking.
constexpr double kJitterConcentration = 2000.0;
// Minimum distance between centers of different pairs, in geo_sigma units.
// Keeps cross-pair geography unambiguous so the confusion the fusion has to
// resolve lives inside the pairs.
constexpr double kCrossPairSeparation = 8.0;
constexpr int kYear = 2021;  // all synthetic observations share one year
constexpr int kYearDays = 365;

std::string padded_number(int value, int width) {
    std::string text = std::to_string(value);
    while (static_cast<int>(text.size()) < width) text.insert(text.begin(), '0');
    return text;
}

/// Largest-remainder rounding of `total` into shares proportional to mass.
std::vector<long> apportion(const std::vector<double>& mass, long total) {
    const double mass_sum = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::vector<long> counts(mass.size());
    std::vector<std::pair<double, std::size_t>> remainders(mass.size());
    long assigned = 0;
    for (std::size_t c = 0; c < mass.size(); ++c) {
        const double exact = static_cast<double>(total) * mass[c] / mass_sum;
        counts[c] = static_cast<long>(std::floor(exact));
        assigned += counts[c];
        remainders[c] = {exact - std::floor(exact), c};
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (long r = 0; r < total - assigned; ++r) ++counts[remainders[r].second];
    return counts;
}

double distance2(double lat_a, double lon_a, double lat_b, double lon_b) {
    const double dlat = lat_a - lat_b;
    const double dlon = lon_a - lon_b;
    return dlat * dlat + dlon * dlon;
}

}  // namespace

void SynthSpec::validate() const {
    if (n_pairs < 1) throw Error(ErrorKind::InvalidConfig, "n_pairs must be positive");
    if (n_train < classes()) {
        throw Error(ErrorKind::InvalidConfig,
                    "n_train must cover every class at least once (need >= " +
                        std::to_string(classes()) + ")");
    }
    if (n_test < 1) throw Error(ErrorKind::InvalidConfig, "n_test must be positive");
    if (imbalance_gamma < 0.0) throw Error(ErrorKind::InvalidConfig, "imbalance_gamma must be >= 0");
    if (geo_sigma <= 0.0) throw Error(ErrorKind::InvalidConfig, "geo_sigma must be positive");
    if (pair_separation < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "pair_separation must be >= 0");
    }
    if (season_width <= 0.0) throw Error(ErrorKind::InvalidConfig, "season_width must be positive");
    if (image_confusion < 0.0 || image_confusion >= 0.5) {
        throw Error(ErrorKind::InvalidConfig, "image_confusion must lie in [0, 0.5)");
    }
    if (geo_sigma > 20.0 || pair_separation * geo_sigma > 120.0) {
        throw Error(ErrorKind::InfeasibleSpec,
                    "ranges this wide cannot be placed inside legal coordinates");
    }
}

namespace {

struct Placement {
    std::vector<double> lat;
    std::vector<double> lon;
};

/// Places one range center per species. Paired centers sit pair_separation
/// geo_sigmas apart; centers of different pairs keep at least
/// kCrossPairSeparation geo_sigmas of clearance.
Placement place_centers(const SynthSpec& spec, Rng& rng) {
    const int classes = spec.classes();
    Placement placement;
    placement.lat.resize(classes);
    placement.lon.resize(classes);

    const double cross_min2 =
        std::pow(kCrossPairSeparation * spec.geo_sigma, 2.0);
    const double pair_distance = spec.pair_separation * spec.geo_sigma;

    for (int p = 0; p < spec.n_pairs; ++p) {
        bool placed = false;
        for (int attempt = 0; attempt < 5000 && !placed; ++attempt) {
            const double base_lat = rng.uniform(-60.0, 60.0);
            const double base_lon = rng.uniform(-120.0, 120.0);
            const double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            const double partner_lat = base_lat + pair_distance * std::sin(theta);
            const double partner_lon = base_lon + pair_distance * std::cos(theta);
            if (partner_lat < -80.0 || partner_lat > 80.0 || partner_lon < -160.0 ||
                partner_lon > 160.0) {
                continue;
            }
            bool clear = true;
            for (int q = 0; q < 2 * p && clear; ++q) {
                if (distance2(base_lat, base_lon, placement.lat[q], placement.lon[q]) < cross_min2 ||
                    distance2(partner_lat, partner_lon, placement.lat[q], placement.lon[q]) <
                        cross_min2) {
                    clear = false;
                }
            }
            if (!clear) continue;
            placement.lat[2 * p] = base_lat;
            placement.lon[2 * p] = base_lon;
            placement.lat[2 * p + 1] = partner_lat;
            placement.lon[2 * p + 1] = partner_lon;
            placed = true;
        }
        if (!placed) {
            throw Error(ErrorKind::InfeasibleSpec,
                        "could not place " + std::to_string(spec.n_pairs) +
                            " separated range pairs inside legal coordinates");
        }
    }
    return placement;
}

/// Per-class probability that the simulated image model perceives the pair
/// partner instead of the true class. Rarer classes (by train count) flip
/// more; the test-count-weighted mean is calibrated to image_confusion so
/// the image model's micro accuracy stays at 1 - image_confusion - leak.
std::vector<double> calibrate_flips(const SynthSpec& spec, const std::vector<long>& train_counts,
                                    const std::vector<long>& test_counts) {
    const int classes = spec.classes();
    const long n_max =
        *std::max_element(train_counts.begin(), train_counts.end());
    std::vector<double> rarity(classes);
    for (int c = 0; c < classes; ++c) {
        rarity[c] = std::sqrt(static_cast<double>(n_max) /
                              static_cast<double>(std::max<long>(train_counts[c], 1)));
    }
    const double cap = 0.9;
    const long test_total = std::accumulate(test_counts.begin(), test_counts.end(), 0L);
    auto weighted_mean = [&](double t) {
        double mean = 0.0;
        for (int c = 0; c < classes; ++c) {
            mean += static_cast<double>(test_counts[c]) * std::min(cap, t * rarity[c]);
        }
        return mean / static_cast<double>(test_total);
    };
    double lo = 0.0, hi = 1.0;
    while (weighted_mean(hi) < spec.image_confusion && hi < 64.0) hi *= 2.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (weighted_mean(mid) < spec.image_confusion ? lo : hi) = mid;
    }
    std::vector<double> flips(classes);
    for (int c = 0; c < classes; ++c) flips[c] = std::min(cap, hi * rarity[c]);
    return flips;
}

struct LabeledObservation {
    Observation obs;
    int class_index;
};

std::vector<LabeledObservation> sample_observations(const SynthSpec& spec,
                                                    const Placement& placement,
                                                    const std::vector<double>& season_mean,
                                                    const std::vector<long>& counts,
                                                    const std::vector<std::string>& species,
                                                    Rng& rng) {
    std::vector<LabeledObservation> rows;
    for (int c = 0; c < spec.classes(); ++c) {
        for (long n = 0; n < counts[c]; ++n) {
            Observation obs;
            // Resample at the boundaries so the range shape stays smooth.
            do {
                obs.latitude = rng.normal(placement.lat[c], spec.geo_sigma);
            } while (obs.latitude < -90.0 || obs.latitude > 90.0);
            do {
                obs.longitude = rng.normal(placement.lon[c], spec.geo_sigma);
            } while (obs.longitude < -180.0 || obs.longitude >= 180.0);
            const long day_raw = std::lround(rng.normal(season_mean[c], spec.season_width));
            const int day = static_cast<int>(((day_raw % kYearDays) + kYearDays) % kYearDays);
            obs.date = Date::from_day_index(kYear, day);
            obs.species = species[c];
            rows.push_back({std::move(obs), c});
        }
    }
    rng.shuffle(rows);
    return rows;
}

Dataset build_dataset(const std::vector<LabeledObservation>& rows, const char* id_prefix,
                      const std::vector<std::string>& species,
                      const std::vector<std::string>& genus,
                      const std::vector<std::string>& family, const ClassVocabulary& vocabulary,
                      int n_pairs) {
    Dataset dataset;
    dataset.vocabulary = vocabulary;
    for (int p = 0; p < n_pairs; ++p) {
        dataset.hierarchy.level3_to_level2[species[2 * p]] = genus[p];
        dataset.hierarchy.level3_to_level2[species[2 * p + 1]] = genus[p];
        dataset.hierarchy.level2_to_level1[genus[p]] = family[p / 2];
    }
    dataset.observations.reserve(rows.size());
    int next_id = 1;
    for (const LabeledObservation& row : rows) {
        Observation obs = row.obs;
        obs.obs_id = std::string(id_prefix) + "-" + padded_number(next_id++, 6);
        dataset.observations.push_back(std::move(obs));
    }
    return dataset;
}

}  // namespace

SynthOutput generate_dataset(const SynthSpec& spec) {
    spec.validate();
    const int classes = spec.classes();
    Rng rng(spec.seed);

    const int width = std::max<int>(3, std::to_string(classes - 1).size());
    std::vector<std::string> species(classes), genus(spec.n_pairs),
        family((spec.n_pairs + 1) / 2);
    for (int c = 0; c < classes; ++c) species[c] = "species_" + padded_number(c, width);
    for (int p = 0; p < spec.n_pairs; ++p) genus[p] = "genus_" + padded_number(p, width);
    for (std::size_t f = 0; f < family.size(); ++f) {
        family[f] = "family_" + padded_number(static_cast<int>(f), width);
    }
    const ClassVocabulary vocabulary = ClassVocabulary::from_labels(species);

    const Placement placement = place_centers(spec, rng);

    // Paired species alternate their seasonal windows half a year apart, so
    // the date carries signal of its own when the windows are narrow.
    std::vector<double> season_mean(classes);
    for (int p = 0; p < spec.n_pairs; ++p) {
        const double base = rng.uniform(0.0, static_cast<double>(kYearDays));
        season_mean[2 * p] = base;
        season_mean[2 * p + 1] = std::fmod(base + kYearDays / 2.0, kYearDays);
    }

    // Power-law class masses; every class keeps at least one training sample.
    std::vector<double> mass(classes);
    for (int c = 0; c < classes; ++c) mass[c] = std::pow(c + 1.0, -spec.imbalance_gamma);
    std::vector<long> train_counts = apportion(mass, spec.n_train);
    for (int c = 0; c < classes; ++c) {
        while (train_counts[c] == 0) {
            const auto donor = std::max_element(train_counts.begin(), train_counts.end());
            --*donor;
            ++train_counts[c];
        }
    }
    const std::vector<long> test_counts = apportion(mass, spec.n_test);

    const std::vector<LabeledObservation> train_rows =
        sample_observations(spec, placement, season_mean, train_counts, species, rng);
    const std::vector<LabeledObservation> test_rows =
        sample_observations(spec, placement, season_mean, test_counts, species, rng);

    SynthOutput output;
    output.train = build_dataset(train_rows, "train", species, genus, family, vocabulary,
                                 spec.n_pairs);
    output.test =
        build_dataset(test_rows, "test", species, genus, family, vocabulary, spec.n_pairs);

    // Simulated image posterior for the test set. The model "perceives" a
    // class (usually the truth, often the pair partner for rare classes) and
    // emits the template distribution for the perceived class with mild
    // Dirichlet jitter on top.
    const std::vector<double> flips = calibrate_flips(spec, train_counts, test_counts);
    const double leak = classes > 2 ? kImageLeak : 0.0;

    output.image_probs.labels = vocabulary.classes;
    output.image_probs.obs_ids.reserve(output.test.size());
    output.image_probs.rows.reserve(output.test.size());
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
        const int true_class = test_rows[i].class_index;
        const int partner_of_true = true_class ^ 1;

        int perceived = true_class;
        const double u = rng.uniform();
        if (u < flips[true_class]) {
            perceived = partner_of_true;
        } else if (u < flips[true_class] + leak) {
            // Leak lands uniformly on the classes outside the pair.
            int other = static_cast<int>(rng.uniform_index(classes - 2));
            if (other >= std::min(true_class, partner_of_true)) ++other;
            if (other >= std::max(true_class, partner_of_true)) ++other;
            perceived = other;
        }
        const int partner = perceived ^ 1;

        ProbVector base(classes, classes > 2 ? leak / (classes - 2) : 0.0);
        base[perceived] = 1.0 - spec.image_confusion - leak;
        base[partner] = spec.image_confusion;

        ProbVector row(classes);
        double sum = 0.0;
        for (int c = 0; c < classes; ++c) {
            row[c] = rng.gamma(kJitterConcentration * base[c]);
            sum += row[c];
        }
        for (double& v : row) v /= sum;

        output.image_probs.obs_ids.push_back(output.test.observations[i].obs_id);
        output.image_probs.rows.push_back(std::move(row));
    }

    output.generator.resize(classes);
    for (int c = 0; c < classes; ++c) {
        SpeciesModel& m = output.generator[c];
        m.center_lat = placement.lat[c];
        m.center_lon = placement.lon[c];
        m.season_mean_day = season_mean[c];
        m.train_count = train_counts[c];
        m.test_count = test_counts[c];
        m.flip_probability = flips[c];
    }
    return output;
}

std::string describe_generator(const SynthOutput& output) {
    std::string text;
    text += "synthetic generator summary\n";
    text += "===========================\n";
    text += "classes: " + std::to_string(output.generator.size()) + "\n";
    text += "train observations: " + std::to_string(output.train.size()) + "\n";
    text += "test observations: " + std::to_string(output.test.size()) + "\n";

    long n_max = 0, n_min = std::numeric_limits<long>::max();
    for (const SpeciesModel& m : output.generator) {
        n_max = std::max(n_max, m.train_count);
        n_min = std::min(n_min, m.train_count);
    }
    text += "train imbalance ratio (n_max/n_min): " +
            format_double(static_cast<double>(n_max) / static_cast<double>(std::max<long>(n_min, 1))) +
            "\n\n";
    text += "label,train_count,test_count,center_lat,center_lon,season_mean_day,image_flip_prob\n";
    for (std::size_t c = 0; c < output.generator.size(); ++c) {
        const SpeciesModel& m = output.generator[c];
        text += output.train.vocabulary.classes[c] + "," + std::to_string(m.train_count) + "," +
                std::to_string(m.test_count) + "," + format_double(m.center_lat) + "," +
                format_double(m.center_lon) + "," + format_double(m.season_mean_day) + "," +
                format_double(m.flip_probability) + "\n";
    }
    return text;
}

}  // namespace geoprior
