// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <roieval/metrics.hpp>
#include <roieval/version.hpp>

#include "support/one_hot_embedder.hpp"

using namespace roieval;

TEST_CASE("coverage from counts") {
    SECTION("hand-checked counts") {
        const CoverageMetrics m = coverage_from_counts(2, 1, 2);
        CHECK(m.precision == Catch::Approx(0.6667).margin(1e-4));
        CHECK(m.recall == Catch::Approx(0.5).margin(1e-4));
        CHECK(m.f1 == Catch::Approx(0.5714).margin(1e-4));
    }
    SECTION("no predictions and no ground truths is vacuously perfect") {
        const CoverageMetrics m = coverage_from_counts(0, 0, 0);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
    SECTION("missing denominators score zero") {
        CHECK(coverage_from_counts(0, 0, 3).precision == 0.0);
        CHECK(coverage_from_counts(0, 0, 3).recall == 0.0);
        CHECK(coverage_from_counts(0, 3, 0).recall == 0.0);
        CHECK(coverage_from_counts(0, 3, 0).f1 == 0.0);
    }
    SECTION("perfect counts") {
        const CoverageMetrics m = coverage_from_counts(4, 0, 0);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
    }
}

TEST_CASE("roiq hand cases") {
    AttributeSimilarities sims;
    sims.s_region = sims.s_lesion = 1.0;
    SECTION("all ones") {
        sims.s_density = sims.s_morphology = sims.s_uptake = 1.0;
        CHECK(roiq(sims) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("zero core annihilates the score") {
        sims.s_region = 0.0;
        sims.s_density = sims.s_morphology = sims.s_uptake = 1.0;
        CHECK(roiq(sims) == 0.0);
    }
    SECTION("geometric core times the present-descriptor mean") {
        sims.s_region = 0.81;
        sims.s_lesion = 0.49;
        sims.s_density = 0.6;  // the only descriptor present
        CHECK(roiq(sims) == Catch::Approx(0.378).margin(1e-12));
    }
    SECTION("no descriptors present leaves the core untouched") {
        sims.s_region = 0.64;
        sims.s_lesion = 0.25;
        CHECK(roiq(sims) == Catch::Approx(0.4).margin(1e-12));
    }
}

TEST_CASE("roiq properties over random attribute tuples") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto maybe = [&](double p) -> std::optional<double> {
        return uniform(rng) < p ? std::optional<double>(uniform(rng)) : std::nullopt;
    };
    for (int round = 0; round < 1000; ++round) {
        AttributeSimilarities sims;
        sims.s_region = uniform(rng);
        sims.s_lesion = uniform(rng);
        sims.s_density = maybe(0.7);
        sims.s_morphology = maybe(0.7);
        sims.s_uptake = maybe(0.7);
        const double q = roiq(sims);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        double present_sum = 0.0;
        int present = 0;
        for (const auto& s : {sims.s_density, sims.s_morphology, sims.s_uptake}) {
            if (s) {
                present_sum += *s;
                ++present;
            }
        }
        CHECK((q == 0.0) == (sims.s_region * sims.s_lesion == 0.0 ||
                             (present > 0 && present_sum == 0.0)));

        // raising any one field never lowers the score
        AttributeSimilarities bumped = sims;
        bumped.s_region = std::min(1.0, sims.s_region + 0.1);
        CHECK(roiq(bumped) >= q);
        bumped = sims;
        if (bumped.s_morphology) {
            bumped.s_morphology = std::min(1.0, *bumped.s_morphology + 0.1);
            CHECK(roiq(bumped) >= q);
        }
    }
}

TEST_CASE("corpus aggregation is micro-averaged") {
    PerReportResult r1;
    r1.report_id = "r1";
    r1.coverage = coverage_from_counts(2, 1, 1);
    r1.pairs.resize(2);
    r1.pairs[0].roiq = 0.4;
    r1.pairs[1].roiq = 0.6;
    PerReportResult r2;
    r2.report_id = "r2";
    r2.coverage = coverage_from_counts(1, 0, 2);
    r2.pairs.resize(1);
    r2.pairs[0].roiq = 0.8;

    const CorpusMetrics corpus = aggregate_corpus({r1, r2});
    CHECK(corpus.tp == 3);
    CHECK(corpus.fp == 1);
    CHECK(corpus.fn == 3);
    CHECK(corpus.precision == Catch::Approx(0.75).margin(1e-12));
    CHECK(corpus.recall == Catch::Approx(0.5).margin(1e-12));
    CHECK(corpus.f1 == Catch::Approx(0.6).margin(1e-12));
    CHECK(corpus.matched_pair_count == 3);
    CHECK(corpus.mean_roiq == Catch::Approx(0.6).margin(1e-12));

    CHECK_THROWS_AS(aggregate_corpus({}), ValidationError);
}

TEST_CASE("bleu-4") {
    SECTION("truncated candidate pays only the brevity penalty") {
        CHECK(bleu4("a b c d", "a b c d e") == Catch::Approx(77.88).margin(0.01));
    }
    SECTION("identity at four or more tokens") {
        CHECK(bleu4("a b c d", "a b c d") == Catch::Approx(100.0).margin(1e-9));
        CHECK(bleu4("một hai ba bốn năm", "một hai ba bốn năm") ==
              Catch::Approx(100.0).margin(1e-9));
    }
    SECTION("any zero precision zeroes the score") {
        CHECK(bleu4("a b c", "a b c") == 0.0);  // no 4-grams on either side
        CHECK(bleu4("p q r s", "w x y z") == 0.0);
        CHECK(bleu4("", "a b c d") == 0.0);
        CHECK(bleu4("a b c d", "") == 0.0);
    }
    SECTION("corpus accumulation pools counts and lengths") {
        BleuAccumulator acc;
        acc.add({"a", "b", "c", "d"}, {"a", "b", "c", "d", "e"});
        acc.add({"x", "y"}, {"x", "y"});
        // pooled: every n-gram matches, c = 6, r = 7
        CHECK(acc.score() == Catch::Approx(100.0 * std::exp(1.0 - 7.0 / 6.0)).margin(1e-9));
    }
    SECTION("clipping caps repeated candidate n-grams") {
        BleuAccumulator acc;
        acc.add({"the", "the", "the", "the"}, {"the", "cat", "sat", "down"});
        CHECK(acc.score() == 0.0);  // clipped unigrams 1/4, bigrams 0/3
    }
    SECTION("tokenization folds case and punctuation") {
        CHECK(bleu4("Tổn thương khu trú, gan.", "tổn thương khu trú gan") ==
              Catch::Approx(100.0).margin(1e-9));
    }
}

TEST_CASE("rouge-1 and rouge-l") {
    SECTION("hand-checked overlap") {
        const RougeScores scores = rouge("a b c", "a c d");
        CHECK(scores.rouge1 == Catch::Approx(66.67).margin(0.01));
        CHECK(scores.rougeL == Catch::Approx(66.67).margin(0.01));
    }
    SECTION("identity") {
        const RougeScores scores = rouge("u gan tăng chuyển hóa", "u gan tăng chuyển hóa");
        CHECK(scores.rouge1 == Catch::Approx(100.0).margin(1e-9));
        CHECK(scores.rougeL == Catch::Approx(100.0).margin(1e-9));
    }
    SECTION("order matters for rouge-l only") {
        const RougeScores scores = rouge("a b c d", "d c b a");
        CHECK(scores.rouge1 == Catch::Approx(100.0).margin(1e-9));
        // longest common subsequence is any single token
        CHECK(scores.rougeL == Catch::Approx(25.0).margin(1e-9));
    }
    SECTION("clipping repeated tokens") {
        const RougeScores scores = rouge("the the the", "the cat");
        CHECK(scores.rouge1 == Catch::Approx(40.0).margin(1e-9));
    }
    SECTION("empty sides score zero") {
        CHECK(rouge("", "a b").rouge1 == 0.0);
        CHECK(rouge("a b", "").rougeL == 0.0);
        CHECK(rouge("", "").rouge1 == 0.0);
    }
}

TEST_CASE("embedding-based token score") {
    testing::OneHotEmbedder embedder;
    SECTION("half overlap") {
        const EmbedScore score = embed_score("a b", "a c", embedder);
        CHECK(score.precision == Catch::Approx(50.0).margin(1e-9));
        CHECK(score.recall == Catch::Approx(50.0).margin(1e-9));
        CHECK(score.f1 == Catch::Approx(50.0).margin(1e-9));
    }
    SECTION("identity") {
        const EmbedScore score = embed_score("gan trái", "gan trái", embedder);
        CHECK(score.f1 == Catch::Approx(100.0).margin(1e-9));
    }
    SECTION("asymmetric lengths") {
        const EmbedScore score = embed_score("a", "a b c d", embedder);
        CHECK(score.precision == Catch::Approx(100.0).margin(1e-9));
        CHECK(score.recall == Catch::Approx(25.0).margin(1e-9));
    }
    SECTION("untokenizable side is an error") {
        CHECK_THROWS_AS(embed_score("", "a", embedder), ValidationError);
        CHECK_THROWS_AS(embed_score("a", "...", embedder), ValidationError);
    }
}

namespace {

ReportAssignment make_assignment(std::string id, std::size_t preds, std::size_t gts,
                                 std::vector<AssignedPair> pairs, std::vector<double> roiqs) {
    ReportAssignment r;
    r.report_id = std::move(id);
    r.pred_count = preds;
    r.gt_count = gts;
    r.assignment = std::move(pairs);
    r.pair_roiq = std::move(roiqs);
    r.pair_attributes.resize(r.assignment.size());
    return r;
}

}  // namespace

TEST_CASE("threshold sweep re-thresholds a fixed assignment") {
    const std::vector<ReportAssignment> reports = {
        make_assignment("r1", 3, 3, {{0, 0, 0.92}, {1, 1, 0.74}, {2, 2, 0.55}}, {0.9, 0.7, 0.5}),
        make_assignment("r2", 2, 4, {{0, 1, 0.81}, {1, 0, 0.63}}, {0.8, 0.6}),
    };
    const auto rows = sweep_thresholds(reports, SweepGrid{});
    REQUIRE(rows.size() == 10);
    CHECK(rows.front().tau == Catch::Approx(0.50));
    CHECK(rows.back().tau == Catch::Approx(0.95));

    // everything clears tau = 0.50
    CHECK(rows[0].tp == 5);
    CHECK(rows[0].fp == 0);
    CHECK(rows[0].fn == 2);
    CHECK(rows[0].precision == Catch::Approx(1.0).margin(1e-12));
    CHECK(rows[0].mean_roiq == Catch::Approx(0.7).margin(1e-12));

    // at tau = 0.70 only the 0.92, 0.74 and 0.81 pairs survive
    CHECK(rows[4].tau == Catch::Approx(0.70));
    CHECK(rows[4].tp == 3);
    CHECK(rows[4].fp == 2);
    CHECK(rows[4].fn == 4);
    CHECK(rows[4].mean_roiq == Catch::Approx(0.8).margin(1e-12));

    std::size_t last_tp = rows[0].tp;
    for (const auto& row : rows) {
        CHECK(row.tp <= last_tp);
        CHECK(row.tp + row.fp == 5);
        CHECK(row.tp + row.fn == 7);
        last_tp = row.tp;
    }
}

TEST_CASE("report serialization conventions") {
    AttributeSimilarities sims;
    sims.s_region = 0.5;
    sims.s_lesion = 1.0;
    sims.s_morphology = 0.25;
    nlohmann::json j = sims;
    CHECK(j["s_region"] == 0.5);
    CHECK(j["s_density"].is_null());  // absent descriptor, not 0
    CHECK(j["s_morphology"] == 0.25);

    EvaluationReport report;
    report.per_report.push_back({});
    report.per_report[0].report_id = "r1";
    report.per_report[0].coverage = coverage_from_counts(1, 0, 0);
    report.config.tau = 0.7;
    report.config.embedder = "local-hash(dim=256,ngram=3)";
    report.config.predictions_source = "pre-extracted";
    report.config.toolkit_version = kVersion;
    nlohmann::json doc = report;
    CHECK(doc["nlp"].is_null());
    CHECK(doc["config"]["tau"] == 0.7);
    CHECK(doc["config"]["toolkit_version"] == kVersion);
    CHECK(doc["per_report"][0]["report_id"] == "r1");
    CHECK(doc["corpus"].is_object());

    const std::string text = render_text_summary(report);
    CHECK(text.find("precision") != std::string::npos);
    CHECK(text.find("reports evaluated : 1") != std::string::npos);

    const auto rows = sweep_thresholds(
        {make_assignment("r1", 1, 1, {{0, 0, 0.9}}, {0.9})}, SweepGrid{});
    const std::string table = render_sweep_table(rows);
    CHECK(table.find("0.70") != std::string::npos);
    CHECK(table.find("tau") != std::string::npos);
}
