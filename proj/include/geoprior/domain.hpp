#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoprior/error.hpp"

namespace geoprior {

// ============================================================================
// Calendar dates
// ============================================================================

struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..days_in_month

    bool operator==(const Date&) const = default;

    /// 0 on Jan 1.
    int day_index() const;
    int year_length() const;
    std::string to_iso() const;

    static bool is_leap_year(int year);
    static int days_in_month(int year, int month);
    /// Parses "YYYY-MM-DD"; empty optional when malformed or not a real date.
    static std::optional<Date> parse_iso(const std::string& text);
    static Date from_day_index(int year, int day_index);
};

// ============================================================================
// Core data model
// ============================================================================

/// One sighting. `species` is the level-3 label; the level-2/level-1 parents
/// live in the hierarchy.
struct Observation {
    std::string obs_id;
    double latitude = 0.0;   // degrees, [-90, 90]
    double longitude = 0.0;  // degrees, [-180, 180); 180 normalized to -180
    Date date;
    std::string species;
};

/// Three-level label tree: each level-3 label has exactly one level-2 parent,
/// each level-2 label exactly one level-1 parent, and no label string appears
/// in two levels.
struct LabelHierarchy {
    std::map<std::string, std::string> level3_to_level2;
    std::map<std::string, std::string> level2_to_level1;

    const std::string& level2_of(const std::string& level3) const;
    const std::string& level1_of(const std::string& level2) const;
};

/// Dense, stable class indexing. Order is the sorted order of the level-3
/// label strings and is persisted with every model and probability file.
struct ClassVocabulary {
    std::vector<std::string> classes;
    std::unordered_map<std::string, int> index_of;

    static ClassVocabulary from_labels(std::vector<std::string> labels);
    int require_index(const std::string& label) const;
    int size() const { return static_cast<int>(classes.size()); }
    bool operator==(const ClassVocabulary& other) const { return classes == other.classes; }
};

/// Normalized distribution over the vocabulary classes.
using ProbVector = std::vector<double>;

/// Per-observation probability rows over a shared class header.
struct ProbMatrix {
    std::vector<std::string> labels;   // vocabulary order
    std::vector<std::string> obs_ids;  // one per row, file order
    std::vector<ProbVector> rows;

    std::size_t size() const { return rows.size(); }
};

struct Dataset {
    LabelHierarchy hierarchy;
    ClassVocabulary vocabulary;
    std::vector<Observation> observations;

    std::size_t size() const { return observations.size(); }
};

// ============================================================================
// Validation
// ============================================================================

/// One observation row as parsed from file, before validation.
struct RawRow {
    std::string obs_id;
    std::string latitude;
    std::string longitude;
    std::string date;
    std::string label_l1;
    std::string label_l2;
    std::string label_l3;
    std::size_t line = 0;
};

struct RawDataset {
    std::vector<RawRow> rows;
};

struct Violation {
    ErrorKind kind;
    std::string obs_id;
    std::string message;
};

struct ValidationResult {
    std::optional<Dataset> dataset;  // set iff violations is empty
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    /// Dataset on success, Error with the first violation otherwise.
    Dataset value() const;
};

/// Validates every row (no row is silently dropped), assembles the hierarchy
/// from the three label columns, and derives the vocabulary. When `expected`
/// is given, species outside it are UnknownLabel violations and the returned
/// dataset keeps the expected vocabulary.
ValidationResult validate_dataset(const RawDataset& raw,
                                  const ClassVocabulary* expected = nullptr);

/// Inverse of validation for round-trip checks and file writing.
RawDataset to_raw(const Dataset& dataset);

}  // namespace geoprior
