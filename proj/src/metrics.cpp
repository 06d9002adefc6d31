#include "geoprior/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "geoprior/fusion.hpp"
#include "geoprior/text.hpp"

namespace geoprior {

namespace {

struct Scored {
    int true_class;                  // index into probs.labels
    std::vector<bool> hit;           // aligned with ks
};

/// Joins truth onto probability rows and marks top-k hits per observation.
std::vector<Scored> score_observations(const ProbMatrix& probs, const Dataset& truth,
                                       const std::vector<int>& ks) {
    for (int k : ks) {
        if (k < 1 || k > static_cast<int>(probs.labels.size())) {
            throw Error(ErrorKind::KOutOfRange, "top-k value " + std::to_string(k) +
                                                    " outside [1, " +
                                                    std::to_string(probs.labels.size()) + "]");
        }
    }
    std::unordered_map<std::string, std::size_t> row_of;
    row_of.reserve(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) row_of[probs.obs_ids[i]] = i;

    std::unordered_map<std::string, int> class_of;
    for (std::size_t i = 0; i < probs.labels.size(); ++i) {
        class_of[probs.labels[i]] = static_cast<int>(i);
    }

    const int max_k = *std::max_element(ks.begin(), ks.end());
    std::vector<Scored> scored;
    scored.reserve(truth.size());
    for (const Observation& obs : truth.observations) {
        auto row_it = row_of.find(obs.obs_id);
        if (row_it == row_of.end()) {
            throw Error(ErrorKind::MissingObservation,
                        "truth obs_id '" + obs.obs_id + "' has no probability row");
        }
        auto class_it = class_of.find(obs.species);
        if (class_it == class_of.end()) {
            throw Error(ErrorKind::HeaderMismatch,
                        "truth species '" + obs.species + "' missing from probability header");
        }
        const std::vector<int> ranked = top_k(probs.rows[row_it->second], max_k);
        Scored s;
        s.true_class = class_it->second;
        s.hit.resize(ks.size());
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const auto end = ranked.begin() + ks[j];
            s.hit[j] = std::find(ranked.begin(), end, s.true_class) != end;
        }
        scored.push_back(std::move(s));
    }
    return scored;
}

std::string format_accuracy(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

}  // namespace

double EvalReport::cell(int k, Averaging averaging) const {
    for (const Cell& c : cells) {
        if (c.k == k && c.averaging == averaging) return c.accuracy;
    }
    throw Error(ErrorKind::KOutOfRange, "cell (k=" + std::to_string(k) + ") was not computed");
}

double topk_accuracy(const ProbMatrix& probs, const Dataset& truth, int k, Averaging averaging) {
    EvalReport report = eval_report(probs, truth, {k}, averaging == Averaging::Micro,
                                    averaging == Averaging::Macro);
    return report.cell(k, averaging);
}

EvalReport eval_report(const ProbMatrix& probs, const Dataset& truth, const std::vector<int>& ks,
                       bool micro, bool macro) {
    if (ks.empty() || (!micro && !macro)) {
        throw Error(ErrorKind::InvalidConfig, "evaluation needs at least one k and one averaging");
    }
    std::vector<int> sorted_ks = ks;
    std::sort(sorted_ks.begin(), sorted_ks.end());
    sorted_ks.erase(std::unique(sorted_ks.begin(), sorted_ks.end()), sorted_ks.end());

    const std::vector<Scored> scored = score_observations(probs, truth, sorted_ks);
    const int num_classes = static_cast<int>(probs.labels.size());

    std::vector<int> class_count(num_classes, 0);
    std::vector<std::vector<int>> class_hits(num_classes, std::vector<int>(sorted_ks.size(), 0));
    for (const Scored& s : scored) {
        ++class_count[s.true_class];
        for (std::size_t j = 0; j < sorted_ks.size(); ++j) {
            if (s.hit[j]) ++class_hits[s.true_class][j];
        }
    }

    EvalReport report;
    report.ks = sorted_ks;
    report.evaluated = static_cast<int>(scored.size());
    for (int c = 0; c < num_classes; ++c) {
        if (class_count[c] > 0) ++report.classes_with_observations;
    }
    report.classes_excluded_from_macro = num_classes - report.classes_with_observations;

    for (std::size_t j = 0; j < sorted_ks.size(); ++j) {
        if (micro) {
            int correct = 0;
            for (int c = 0; c < num_classes; ++c) correct += class_hits[c][j];
            const double acc = scored.empty() ? 0.0 : static_cast<double>(correct) / scored.size();
            report.cells.push_back({sorted_ks[j], Averaging::Micro, acc});
        }
        if (macro) {
            double sum = 0.0;
            int included = 0;
            for (int c = 0; c < num_classes; ++c) {
                if (class_count[c] == 0) continue;
                sum += static_cast<double>(class_hits[c][j]) / class_count[c];
                ++included;
            }
            const double acc = included == 0 ? 0.0 : sum / included;
            report.cells.push_back({sorted_ks[j], Averaging::Macro, acc});
        }
    }

    // Per-class rows in vocabulary order; hierarchy names resolved from truth.
    for (int c = 0; c < num_classes; ++c) {
        EvalReport::ClassRow row;
        row.label = probs.labels[c];
        row.count = class_count[c];
        auto it2 = truth.hierarchy.level3_to_level2.find(row.label);
        if (it2 != truth.hierarchy.level3_to_level2.end()) {
            row.level2 = it2->second;
            auto it1 = truth.hierarchy.level2_to_level1.find(row.level2);
            if (it1 != truth.hierarchy.level2_to_level1.end()) row.level1 = it1->second;
        }
        row.topk.resize(sorted_ks.size(), 0.0);
        if (row.count > 0) {
            for (std::size_t j = 0; j < sorted_ks.size(); ++j) {
                row.topk[j] = static_cast<double>(class_hits[c][j]) / row.count;
            }
        }
        report.per_class.push_back(std::move(row));
    }

    // Level-2 / level-1 groupings: micro accuracy within each group.
    auto aggregate = [&](auto level_of) {
        std::map<std::string, EvalReport::GroupRow> groups;
        for (int c = 0; c < num_classes; ++c) {
            if (class_count[c] == 0) continue;
            const std::string group = level_of(report.per_class[c]);
            if (group.empty()) continue;
            EvalReport::GroupRow& g = groups[group];
            g.label = group;
            g.count += class_count[c];
            g.topk.resize(sorted_ks.size(), 0.0);
            for (std::size_t j = 0; j < sorted_ks.size(); ++j) {
                g.topk[j] += class_hits[c][j];  // raw hits; normalized below
            }
        }
        std::vector<EvalReport::GroupRow> rows;
        for (auto& [label, g] : groups) {
            for (double& v : g.topk) v /= g.count;
            rows.push_back(std::move(g));
        }
        return rows;
    };
    report.level2_groups = aggregate([](const EvalReport::ClassRow& r) { return r.level2; });
    report.level1_groups = aggregate([](const EvalReport::ClassRow& r) { return r.level1; });

    return report;
}

std::string render_report_text(const EvalReport& report) {
    std::string text;
    text += "evaluation report\n";
    text += "=================\n";
    text += "observations evaluated: " + std::to_string(report.evaluated) + "\n";
    text += "classes in vocabulary: " + std::to_string(report.per_class.size()) + "\n";
    text += "classes with test observations: " + std::to_string(report.classes_with_observations) +
            "\n";
    text += "classes excluded from macro: " +
            std::to_string(report.classes_excluded_from_macro) + "\n\n";

    text += "k,averaging,accuracy\n";
    for (const EvalReport::Cell& c : report.cells) {
        text += std::to_string(c.k);
        text += c.averaging == Averaging::Micro ? ",micro," : ",macro,";
        text += format_accuracy(c.accuracy) + "\n";
    }

    auto render_groups = [&](const char* title, const std::vector<EvalReport::GroupRow>& groups) {
        if (groups.empty()) return;
        text += "\n";
        text += title;
        text += "\nlabel,count";
        for (int k : report.ks) text += ",top" + std::to_string(k);
        text += "\n";
        for (const EvalReport::GroupRow& g : groups) {
            text += g.label + "," + std::to_string(g.count);
            for (double v : g.topk) text += "," + format_accuracy(v);
            text += "\n";
        }
    };
    render_groups("level-2 groups (micro within group)", report.level2_groups);
    render_groups("level-1 groups (micro within group)", report.level1_groups);
    return text;
}

std::string render_report_csv(const EvalReport& report) {
    std::string text = "label,level2,level1,count";
    for (int k : report.ks) text += ",top" + std::to_string(k);
    text += "\n";
    for (const EvalReport::ClassRow& row : report.per_class) {
        text += join_csv({row.label, row.level2, row.level1, std::to_string(row.count)});
        for (double v : row.topk) text += "," + format_accuracy(v);
        text += "\n";
    }
    return text;
}

}  // namespace geoprior
