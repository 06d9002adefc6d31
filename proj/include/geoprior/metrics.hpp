#pragma once

#include <string>
#include <vector>

#include "geoprior/domain.hpp"

namespace geoprior {

enum class Averaging { Micro, Macro };

/// Top-k accuracy of a probability matrix against ground truth.
///
/// micro: correct observations / total observations.
/// macro: unweighted mean of per-class accuracy over classes with at least
/// one test observation. Correctness uses the same deterministic tie rule
/// as top_k, so metrics and emitted predictions never disagree.
double topk_accuracy(const ProbMatrix& probs, const Dataset& truth, int k, Averaging averaging);

struct EvalReport {
    struct Cell {
        int k;
        Averaging averaging;
        double accuracy;
    };
    struct ClassRow {
        std::string label;
        std::string level2;  // empty when the class never occurs in truth
        std::string level1;
        int count = 0;
        std::vector<double> topk;  // aligned with ks; 0 for empty classes
    };
    struct GroupRow {
        std::string label;
        int count = 0;
        std::vector<double> topk;  // micro accuracy within the group
    };

    std::vector<int> ks;
    std::vector<Cell> cells;            // k ascending, micro before macro
    std::vector<ClassRow> per_class;    // vocabulary order
    std::vector<GroupRow> level2_groups;  // label order
    std::vector<GroupRow> level1_groups;
    int evaluated = 0;
    int classes_with_observations = 0;
    int classes_excluded_from_macro = 0;

    double cell(int k, Averaging averaging) const;
};

/// Computes every requested (k, averaging) cell plus per-class rows and the
/// level-2/level-1 aggregations used for reporting.
EvalReport eval_report(const ProbMatrix& probs, const Dataset& truth, const std::vector<int>& ks,
                       bool micro = true, bool macro = true);

/// Structured text document; byte-stable for identical inputs.
std::string render_report_text(const EvalReport& report);

/// Flat per-class CSV (one row per vocabulary class).
std::string render_report_csv(const EvalReport& report);

}  // namespace geoprior
