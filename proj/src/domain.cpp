#include "geoprior/domain.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "geoprior/text.hpp"

namespace geoprior {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::CoordinateOutOfRange: return "CoordinateOutOfRange";
        case ErrorKind::UnknownLabel: return "UnknownLabel";
        case ErrorKind::BrokenHierarchy: return "BrokenHierarchy";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::VocabularyMismatch: return "VocabularyMismatch";
        case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorKind::CorruptFile: return "CorruptFile";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::MissingObservation: return "MissingObservation";
        case ErrorKind::HeaderMismatch: return "HeaderMismatch";
        case ErrorKind::KOutOfRange: return "KOutOfRange";
        case ErrorKind::AllEmpty: return "AllEmpty";
        case ErrorKind::AllZeroWeights: return "AllZeroWeights";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorKind::IoError: return "IoError";
    }
    return "UnknownError";
}

// ============================================================================
// Date
// ============================================================================

bool Date::is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int Date::days_in_month(int year, int month) {
    static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return table[month - 1];
}

int Date::day_index() const {
    int index = day - 1;
    for (int m = 1; m < month; ++m) index += days_in_month(year, m);
    return index;
}

int Date::year_length() const { return is_leap_year(year) ? 366 : 365; }

std::string Date::to_iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::optional<Date> Date::parse_iso(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (text[i] < '0' || text[i] > '9') return std::nullopt;
    }
    Date d;
    d.year = std::stoi(text.substr(0, 4));
    d.month = std::stoi(text.substr(5, 2));
    d.day = std::stoi(text.substr(8, 2));
    if (d.month < 1 || d.month > 12) return std::nullopt;
    if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
    return d;
}

Date Date::from_day_index(int year, int day_index) {
    Date d;
    d.year = year;
    d.month = 1;
    int remaining = day_index;
    while (remaining >= days_in_month(year, d.month)) {
        remaining -= days_in_month(year, d.month);
        ++d.month;
    }
    d.day = remaining + 1;
    return d;
}

// ============================================================================
// Hierarchy and vocabulary
// ============================================================================

const std::string& LabelHierarchy::level2_of(const std::string& level3) const {
    auto it = level3_to_level2.find(level3);
    if (it == level3_to_level2.end()) {
        throw Error(ErrorKind::UnknownLabel, "level-3 label '" + level3 + "' not in hierarchy");
    }
    return it->second;
}

const std::string& LabelHierarchy::level1_of(const std::string& level2) const {
    auto it = level2_to_level1.find(level2);
    if (it == level2_to_level1.end()) {
        throw Error(ErrorKind::UnknownLabel, "level-2 label '" + level2 + "' not in hierarchy");
    }
    return it->second;
}

ClassVocabulary ClassVocabulary::from_labels(std::vector<std::string> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    ClassVocabulary vocab;
    vocab.classes = std::move(labels);
    for (std::size_t i = 0; i < vocab.classes.size(); ++i) {
        vocab.index_of[vocab.classes[i]] = static_cast<int>(i);
    }
    return vocab;
}

int ClassVocabulary::require_index(const std::string& label) const {
    auto it = index_of.find(label);
    if (it == index_of.end()) {
        throw Error(ErrorKind::UnknownLabel, "label '" + label + "' not in vocabulary");
    }
    return it->second;
}

// ============================================================================
// Validation
// ============================================================================

Dataset ValidationResult::value() const {
    if (!ok()) {
        const Violation& v = violations.front();
        throw Error(v.kind, v.message + " (and " + std::to_string(violations.size() - 1) +
                                " further violations)");
    }
    return *dataset;
}

namespace {

std::optional<double> parse_coordinate(const std::string& text) {
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

}  // namespace

ValidationResult validate_dataset(const RawDataset& raw, const ClassVocabulary* expected) {
    ValidationResult result;
    auto violate = [&](ErrorKind kind, const std::string& obs_id, const std::string& message) {
        result.violations.push_back({kind, obs_id, message});
    };

    std::set<std::string> seen_ids;
    // First parent observed for each child label; later conflicts are errors.
    std::map<std::string, std::string> l3_parent;
    std::map<std::string, std::string> l2_parent;
    std::vector<Observation> observations;
    observations.reserve(raw.rows.size());

    for (const RawRow& row : raw.rows) {
        const std::string where = "row " + std::to_string(row.line);
        bool row_ok = true;

        if (row.obs_id.empty()) {
            violate(ErrorKind::CorruptFile, row.obs_id, where + ": empty obs_id");
            row_ok = false;
        } else if (!seen_ids.insert(row.obs_id).second) {
            violate(ErrorKind::DuplicateId, row.obs_id,
                    where + ": duplicate obs_id '" + row.obs_id + "'");
            row_ok = false;
        }

        Observation obs;
        obs.obs_id = row.obs_id;

        auto lat = parse_coordinate(trim(row.latitude));
        auto lon = parse_coordinate(trim(row.longitude));
        if (!lat || !lon) {
            violate(ErrorKind::CorruptFile, row.obs_id, where + ": unparseable coordinates");
            row_ok = false;
        } else {
            if (*lat < -90.0 || *lat > 90.0) {
                violate(ErrorKind::CoordinateOutOfRange, row.obs_id,
                        where + ": latitude " + format_double(*lat) + " out of [-90, 90] for obs_id '" +
                            row.obs_id + "'");
                row_ok = false;
            }
            if (*lon < -180.0 || *lon > 180.0) {
                violate(ErrorKind::CoordinateOutOfRange, row.obs_id,
                        where + ": longitude " + format_double(*lon) +
                            " out of [-180, 180] for obs_id '" + row.obs_id + "'");
                row_ok = false;
            }
            obs.latitude = *lat;
            // Half-open longitude convention: 180 and -180 are the same meridian.
            obs.longitude = (*lon == 180.0) ? -180.0 : *lon;
        }

        auto date = Date::parse_iso(trim(row.date));
        if (!date) {
            violate(ErrorKind::CorruptFile, row.obs_id,
                    where + ": invalid date '" + row.date + "'");
            row_ok = false;
        } else {
            obs.date = *date;
        }

        const std::string l1 = trim(row.label_l1);
        const std::string l2 = trim(row.label_l2);
        const std::string l3 = trim(row.label_l3);
        if (l1.empty() || l2.empty() || l3.empty()) {
            violate(ErrorKind::UnknownLabel, row.obs_id, where + ": empty label field");
            row_ok = false;
        } else {
            auto [it3, inserted3] = l3_parent.emplace(l3, l2);
            if (!inserted3 && it3->second != l2) {
                violate(ErrorKind::BrokenHierarchy, row.obs_id,
                        where + ": level-3 label '" + l3 + "' listed under both '" + it3->second +
                            "' and '" + l2 + "'");
                row_ok = false;
            }
            auto [it2, inserted2] = l2_parent.emplace(l2, l1);
            if (!inserted2 && it2->second != l1) {
                violate(ErrorKind::BrokenHierarchy, row.obs_id,
                        where + ": level-2 label '" + l2 + "' listed under both '" + it2->second +
                            "' and '" + l1 + "'");
                row_ok = false;
            }
            obs.species = l3;
            if (expected && expected->index_of.find(l3) == expected->index_of.end()) {
                violate(ErrorKind::UnknownLabel, row.obs_id,
                        where + ": species '" + l3 + "' not in the expected vocabulary");
                row_ok = false;
            }
        }

        if (row_ok) observations.push_back(std::move(obs));
    }

    // No label string may appear in two levels.
    std::set<std::string> level1_set, level2_set;
    for (const auto& [l2, l1] : l2_parent) {
        level1_set.insert(l1);
        level2_set.insert(l2);
    }
    for (const auto& [l3, l2] : l3_parent) {
        if (level1_set.count(l3) || level2_set.count(l3)) {
            violate(ErrorKind::BrokenHierarchy, "",
                    "label '" + l3 + "' appears in more than one hierarchy level");
        }
    }
    for (const std::string& l2 : level2_set) {
        if (level1_set.count(l2)) {
            violate(ErrorKind::BrokenHierarchy, "",
                    "label '" + l2 + "' appears in more than one hierarchy level");
        }
    }

    if (!result.ok()) return result;

    Dataset dataset;
    dataset.hierarchy.level3_to_level2 = std::move(l3_parent);
    dataset.hierarchy.level2_to_level1 = std::move(l2_parent);
    if (expected) {
        dataset.vocabulary = *expected;
    } else {
        std::vector<std::string> labels;
        labels.reserve(dataset.hierarchy.level3_to_level2.size());
        for (const auto& [l3, l2] : dataset.hierarchy.level3_to_level2) labels.push_back(l3);
        dataset.vocabulary = ClassVocabulary::from_labels(std::move(labels));
    }
    dataset.observations = std::move(observations);
    result.dataset = std::move(dataset);
    return result;
}

RawDataset to_raw(const Dataset& dataset) {
    RawDataset raw;
    raw.rows.reserve(dataset.size());
    std::size_t line = 2;  // header is line 1
    for (const Observation& obs : dataset.observations) {
        RawRow row;
        row.obs_id = obs.obs_id;
        row.latitude = format_double(obs.latitude);
        row.longitude = format_double(obs.longitude);
        row.date = obs.date.to_iso();
        row.label_l3 = obs.species;
        row.label_l2 = dataset.hierarchy.level2_of(obs.species);
        row.label_l1 = dataset.hierarchy.level1_of(row.label_l2);
        row.line = line++;
        raw.rows.push_back(std::move(row));
    }
    return raw;
}

}  // namespace geoprior
