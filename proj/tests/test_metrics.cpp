#include "doctest.h"

#include <cmath>

#include "geoprior/metrics.hpp"
#include "geoprior/rng.hpp"

using namespace geoprior;

namespace {

Dataset truth_with(const std::vector<std::pair<std::string, std::string>>& id_species) {
    Dataset ds;
    std::vector<std::string> labels;
    for (const auto& [id, sp] : id_species) labels.push_back(sp);
    ds.vocabulary = ClassVocabulary::from_labels(labels);
    for (const std::string& sp : ds.vocabulary.classes) {
        ds.hierarchy.level3_to_level2[sp] = "genus_of_" + sp;
        ds.hierarchy.level2_to_level1["genus_of_" + sp] = "family_x";
    }
    for (const auto& [id, sp] : id_species) {
        Observation obs;
        obs.obs_id = id;
        obs.species = sp;
        obs.date = {2021, 6, 1};
        ds.observations.push_back(obs);
    }
    return ds;
}

/// Class A correct on 3 of 4, class B correct on 1 of 2:
/// micro = 4/6, macro = (0.75 + 0.5)/2 = 0.625.
struct Fixture {
    Dataset truth;
    ProbMatrix probs;

    Fixture() {
        truth = truth_with({{"o1", "A"}, {"o2", "A"}, {"o3", "A"}, {"o4", "A"},
                            {"o5", "B"}, {"o6", "B"}});
        probs.labels = {"A", "B"};
        probs.obs_ids = {"o1", "o2", "o3", "o4", "o5", "o6"};
        probs.rows = {
            {0.9, 0.1},  // A right
            {0.8, 0.2},  // A right
            {0.7, 0.3},  // A right
            {0.2, 0.8},  // A wrong
            {0.1, 0.9},  // B right
            {0.6, 0.4},  // B wrong
        };
    }
};

}  // namespace

TEST_CASE("hand-enumerated fixture: micro 4/6, macro 0.625") {
    const Fixture fix;
    CHECK(topk_accuracy(fix.probs, fix.truth, 1, Averaging::Micro) ==
          doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(topk_accuracy(fix.probs, fix.truth, 1, Averaging::Macro) == 0.625);

    // k = C covers everything.
    CHECK(topk_accuracy(fix.probs, fix.truth, 2, Averaging::Micro) == 1.0);
    CHECK(topk_accuracy(fix.probs, fix.truth, 2, Averaging::Macro) == 1.0);
}

TEST_CASE("perfect predictions score 1.0 everywhere") {
    Fixture fix;
    for (std::size_t i = 0; i < fix.probs.rows.size(); ++i) {
        const int truth_idx = fix.truth.vocabulary.require_index(fix.truth.observations[i].species);
        fix.probs.rows[i] = {0.0, 0.0};
        fix.probs.rows[i][truth_idx] = 1.0;
    }
    for (int k : {1, 2}) {
        CHECK(topk_accuracy(fix.probs, fix.truth, k, Averaging::Micro) == 1.0);
        CHECK(topk_accuracy(fix.probs, fix.truth, k, Averaging::Macro) == 1.0);
    }
}

TEST_CASE("eval_report computes the 2x2 table and hierarchy groupings") {
    const Fixture fix;
    const EvalReport report = eval_report(fix.probs, fix.truth, {1, 2});
    CHECK(report.cell(1, Averaging::Micro) == doctest::Approx(4.0 / 6.0));
    CHECK(report.cell(1, Averaging::Macro) == 0.625);
    CHECK(report.cell(2, Averaging::Micro) == 1.0);
    CHECK(report.cell(2, Averaging::Macro) == 1.0);
    CHECK(report.evaluated == 6);
    CHECK(report.classes_excluded_from_macro == 0);

    REQUIRE(report.per_class.size() == 2);
    CHECK(report.per_class[0].label == "A");
    CHECK(report.per_class[0].count == 4);
    CHECK(report.per_class[0].topk[0] == 0.75);
    CHECK(report.per_class[1].topk[0] == 0.5);
    CHECK(report.per_class[0].level2 == "genus_of_A");
    CHECK(report.per_class[0].level1 == "family_x");

    REQUIRE(report.level2_groups.size() == 2);
    CHECK(report.level2_groups[0].count == 4);
    REQUIRE(report.level1_groups.size() == 1);
    CHECK(report.level1_groups[0].count == 6);
    CHECK(report.level1_groups[0].topk[0] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("classes absent from the test split are excluded from macro and reported") {
    Fixture fix;
    // Vocabulary has a third class the truth never uses.
    fix.probs.labels = {"A", "B", "C"};
    for (ProbVector& row : fix.probs.rows) row.push_back(0.0);
    const EvalReport report = eval_report(fix.probs, fix.truth, {1});
    CHECK(report.classes_with_observations == 2);
    CHECK(report.classes_excluded_from_macro == 1);
    CHECK(report.cell(1, Averaging::Macro) == 0.625);  // divisor stays 2

    const std::string text = render_report_text(report);
    CHECK(text.find("classes excluded from macro: 1") != std::string::npos);
}

TEST_CASE("missing observation and header mismatch are rejected") {
    const Fixture fix;
    ProbMatrix missing = fix.probs;
    missing.obs_ids[0] = "other";
    try {
        eval_report(missing, fix.truth, {1});
        FAIL("expected MissingObservation");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingObservation);
    }

    ProbMatrix renamed = fix.probs;
    renamed.labels = {"A", "Z"};
    try {
        eval_report(renamed, fix.truth, {1});
        FAIL("expected HeaderMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::HeaderMismatch);
    }
}

TEST_CASE("top-(k+1) accuracy never drops below top-k") {
    Rng rng(123);
    const int classes = 6;
    for (int trial = 0; trial < 100; ++trial) {
        const int rows = 20;
        std::vector<std::pair<std::string, std::string>> id_species;
        ProbMatrix probs;
        for (int c = 0; c < classes; ++c) probs.labels.push_back("c" + std::to_string(c));
        for (int i = 0; i < rows; ++i) {
            const std::string id = "o" + std::to_string(i);
            id_species.push_back({id, "c" + std::to_string(rng.uniform_index(classes))});
            probs.obs_ids.push_back(id);
            ProbVector row(classes);
            double sum = 0.0;
            for (double& v : row) {
                v = rng.uniform();
                sum += v;
            }
            for (double& v : row) v /= sum;
            probs.rows.push_back(row);
        }
        const Dataset truth = truth_with(id_species);
        double prev_micro = 0.0, prev_macro = 0.0;
        for (int k = 1; k <= classes; ++k) {
            const double micro = topk_accuracy(probs, truth, k, Averaging::Micro);
            const double macro = topk_accuracy(probs, truth, k, Averaging::Macro);
            CHECK(micro >= prev_micro);
            CHECK(macro >= prev_macro);
            prev_micro = micro;
            prev_macro = macro;
        }
    }
}

TEST_CASE("micro accuracy is invariant to consistent class relabeling") {
    const Fixture fix;
    const double before = topk_accuracy(fix.probs, fix.truth, 1, Averaging::Micro);

    // Swap the two classes everywhere.
    Dataset truth = fix.truth;
    for (Observation& obs : truth.observations) obs.species = obs.species == "A" ? "B" : "A";
    ProbMatrix probs = fix.probs;
    for (ProbVector& row : probs.rows) std::swap(row[0], row[1]);
    CHECK(topk_accuracy(probs, truth, 1, Averaging::Micro) == before);
}

TEST_CASE("equal class counts make micro equal macro") {
    const Dataset truth =
        truth_with({{"o1", "A"}, {"o2", "A"}, {"o3", "B"}, {"o4", "B"}});
    ProbMatrix probs;
    probs.labels = {"A", "B"};
    probs.obs_ids = {"o1", "o2", "o3", "o4"};
    probs.rows = {{0.9, 0.1}, {0.2, 0.8}, {0.3, 0.7}, {0.8, 0.2}};
    CHECK(topk_accuracy(probs, truth, 1, Averaging::Micro) ==
          topk_accuracy(probs, truth, 1, Averaging::Macro));
}

TEST_CASE("reports render byte-stably") {
    const Fixture fix;
    const EvalReport a = eval_report(fix.probs, fix.truth, {1, 2});
    const EvalReport b = eval_report(fix.probs, fix.truth, {1, 2});
    CHECK(render_report_text(a) == render_report_text(b));
    CHECK(render_report_csv(a) == render_report_csv(b));
    CHECK(render_report_csv(a).find("label,level2,level1,count,top1,top2") == 0);
}
