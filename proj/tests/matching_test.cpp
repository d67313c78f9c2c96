// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <roieval/matching.hpp>

#include "support/one_hot_embedder.hpp"

using namespace roieval;

namespace {

// Embedder with hand-planted vectors, for exact pairwise cosines.
class PlantedEmbedder final : public Embedder {
  public:
    std::map<std::string, EmbeddingVector> vectors;

    EmbeddingVector embed(std::string_view text) override {
        auto it = vectors.find(std::string(text));
        if (it == vectors.end()) throw ValidationError("unplanted text: " + std::string(text));
        return it->second;
    }
    std::string descriptor() const override { return "planted"; }
};

// Two 8-dim vectors confined to one 2-dim slice, with a chosen cosine.
void plant_pair(PlantedEmbedder& e, const std::string& a, const std::string& b, std::size_t slice,
                double cos_value) {
    EmbeddingVector u(8, 0.0), v(8, 0.0);
    u[2 * slice] = 1.0;
    v[2 * slice] = cos_value;
    v[2 * slice + 1] = std::sqrt(1.0 - cos_value * cos_value);
    e.vectors[a] = u;
    e.vectors[b] = v;
}

double brute_force_best(const std::vector<std::vector<double>>& scores, std::size_t pred_count,
                        std::size_t gt_count) {
    const bool transpose = pred_count > gt_count;
    const std::size_t small = transpose ? gt_count : pred_count;
    const std::size_t large = transpose ? pred_count : gt_count;
    std::vector<std::size_t> order(large);
    std::iota(order.begin(), order.end(), 0);
    double best = -1.0;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < small; ++i) {
            total += transpose ? scores[order[i]][i] : scores[i][order[i]];
        }
        best = std::max(best, total);
    } while (std::next_permutation(order.begin(), order.end()));
    return best;
}

double total_score(const std::vector<AssignedPair>& pairs) {
    double total = 0.0;
    for (const auto& p : pairs) total += p.score;
    return total;
}

}  // namespace

TEST_CASE("pair similarity averages clamped cosines over comparable fields") {
    PlantedEmbedder embedder;
    plant_pair(embedder, "p_region", "g_region", 0, 0.9);
    plant_pair(embedder, "p_lesion", "g_lesion", 1, 0.7);
    plant_pair(embedder, "p_morph", "g_morph", 2, 0.5);
    plant_pair(embedder, "p_fdg", "g_fdg", 3, 0.9);

    ExtractedRoI p;
    p.anatomic_region = "p_region";
    p.lesion_type = "p_lesion";
    p.density = "";  // not comparable: prediction side empty
    p.morphology = "p_morph";
    p.fdg_uptake = "p_fdg";
    GroundTruthRoI g;
    g.anatomic_region = "g_region";
    g.lesion_type = "g_lesion";
    g.density = "";  // and the ground-truth descriptor is empty too
    g.morphology = "g_morph";
    g.fdg_uptake = "g_fdg";

    const PairSimilarity sim = pair_field_similarities(p, g, embedder);
    CHECK(sim.score == Catch::Approx((0.9 + 0.7 + 0.5 + 0.9) / 4.0).margin(1e-12));
    CHECK(sim.attributes.s_region == Catch::Approx(0.9).margin(1e-12));
    CHECK(sim.attributes.s_lesion == Catch::Approx(0.7).margin(1e-12));
    CHECK_FALSE(sim.attributes.s_density.has_value());  // keyed on the ground truth
    CHECK(sim.attributes.s_morphology.value() == Catch::Approx(0.5).margin(1e-12));
    CHECK(sim.attributes.s_uptake.value() == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("pair similarity edge conventions") {
    testing::OneHotEmbedder one_hot;
    ExtractedRoI p;
    GroundTruthRoI g;

    SECTION("textually identical fields give exactly 1") {
        p.anatomic_region = g.anatomic_region = "gan";
        p.lesion_type = g.lesion_type = "u";
        p.density = g.density = "giảm đậm độ";
        p.morphology = g.morphology = "khu trú";
        p.fdg_uptake = g.fdg_uptake = "tăng";
        CHECK(pair_similarity(p, g, one_hot) == 1.0);
    }
    SECTION("no comparable field gives 0") {
        g.anatomic_region = "gan";  // prediction side entirely empty
        g.density = "giảm đậm độ";
        const PairSimilarity sim = pair_field_similarities(p, g, one_hot);
        CHECK(sim.score == 0.0);
        CHECK(sim.attributes.s_region == 0.0);
        // ground truth has a density, the prediction does not: present at 0
        CHECK(sim.attributes.s_density.value() == 0.0);
    }
    SECTION("negative cosines clamp to 0") {
        PlantedEmbedder planted;
        plant_pair(planted, "a", "b", 0, -0.3);
        p.anatomic_region = "a";
        g.anatomic_region = "b";
        const PairSimilarity sim = pair_field_similarities(p, g, planted);
        CHECK(sim.score == 0.0);
        CHECK(sim.attributes.s_region == 0.0);
    }
}

TEST_CASE("hungarian assignment hand cases") {
    SECTION("singleton") {
        const auto pairs = hungarian_assign({{0.4}}, 1, 1);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].pred == 0);
        CHECK(pairs[0].gt == 0);
        CHECK(pairs[0].score == 0.4);
    }
    SECTION("3x3 picks the diagonal") {
        const std::vector<std::vector<double>> scores = {
            {0.9, 0.1, 0.2}, {0.3, 0.8, 0.1}, {0.2, 0.4, 0.7}};
        const auto pairs = hungarian_assign(scores, 3, 3);
        REQUIRE(pairs.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(pairs[i].pred == i);
            CHECK(pairs[i].gt == i);
        }
        CHECK(total_score(pairs) == Catch::Approx(2.4).margin(1e-9));
    }
    SECTION("2x3 leaves one ground truth unmatched") {
        const std::vector<std::vector<double>> scores = {{0.9, 0.2, 0.5}, {0.1, 0.8, 0.6}};
        const auto pairs = hungarian_assign(scores, 2, 3);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].pred == 0);
        CHECK(pairs[0].gt == 0);
        CHECK(pairs[1].pred == 1);
        CHECK(pairs[1].gt == 1);
        CHECK(total_score(pairs) == Catch::Approx(1.7).margin(1e-9));
    }
    SECTION("empty sides give an empty assignment") {
        CHECK(hungarian_assign({}, 0, 5).empty());
        CHECK(hungarian_assign({{}, {}}, 2, 0).empty());
    }
}

TEST_CASE("hungarian equals exhaustive search on small random matrices") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int round = 0; round < 250; ++round) {
        const std::size_t pred_count = 1 + rng() % 6;
        const std::size_t gt_count = 1 + rng() % 6;
        std::vector<std::vector<double>> scores(pred_count, std::vector<double>(gt_count));
        for (auto& row : scores) {
            for (auto& cell : row) cell = uniform(rng);
        }
        const auto pairs = hungarian_assign(scores, pred_count, gt_count);
        REQUIRE(pairs.size() == std::min(pred_count, gt_count));
        for (const auto& p : pairs) {
            CHECK(p.pred < pred_count);  // sentinel padding never leaks out
            CHECK(p.gt < gt_count);
        }
        CHECK(total_score(pairs) ==
              Catch::Approx(brute_force_best(scores, pred_count, gt_count)).margin(1e-9));
    }
}

TEST_CASE("assignment follows row and column permutations") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::size_t n = 5;
    std::vector<std::vector<double>> scores(n, std::vector<double>(n));
    for (auto& row : scores) {
        for (auto& cell : row) cell = uniform(rng);  // distinct a.s.: unique optimum
    }
    const auto base = hungarian_assign(scores, n, n);
    std::vector<std::size_t> row_perm(n), col_perm(n);
    std::iota(row_perm.begin(), row_perm.end(), 0);
    std::iota(col_perm.begin(), col_perm.end(), 0);
    std::shuffle(row_perm.begin(), row_perm.end(), rng);
    std::shuffle(col_perm.begin(), col_perm.end(), rng);
    std::vector<std::vector<double>> permuted(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) permuted[row_perm[i]][col_perm[j]] = scores[i][j];
    }
    const auto moved = hungarian_assign(permuted, n, n);
    std::map<std::size_t, std::size_t> base_map, moved_map;
    for (const auto& p : base) base_map[p.pred] = p.gt;
    for (const auto& p : moved) moved_map[p.pred] = p.gt;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(moved_map.at(row_perm[i]) == col_perm[base_map.at(i)]);
    }
}

TEST_CASE("equal-score ties prefer smaller index pairs") {
    SECTION("all-equal square matrix settles on the diagonal") {
        const std::vector<std::vector<double>> flat(3, std::vector<double>(3, 0.5));
        const auto pairs = hungarian_assign(flat, 3, 3);
        REQUIRE(pairs.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(pairs[i].pred == i);
            CHECK(pairs[i].gt == i);
        }
    }
    SECTION("equal columns prefer the smaller ground-truth index") {
        const auto pairs = hungarian_assign({{0.6, 0.6, 0.2}}, 1, 3);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].gt == 0);
    }
    SECTION("equal rows prefer the smaller prediction index") {
        const auto pairs = hungarian_assign({{0.6}, {0.6}, {0.6}}, 3, 1);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0].pred == 0);
    }
}

TEST_CASE("threshold matching keeps scores at or above tau") {
    const std::vector<std::vector<double>> scores = {
        {0.9, 0.1, 0.2}, {0.3, 0.8, 0.1}, {0.2, 0.4, 0.7}};
    const auto assignment = hungarian_assign(scores, 3, 3);

    const MatchResult at075 = match_with_threshold(assignment, 3, 3, 0.75);
    CHECK(at075.tp == 2);
    CHECK(at075.fp == 1);
    CHECK(at075.fn == 1);

    CHECK(match_with_threshold(assignment, 3, 3, 0.0).tp == 3);
    CHECK(match_with_threshold(assignment, 3, 3, 1.0).tp == 0);
    CHECK(match_with_threshold(assignment, 3, 3, 0.7).tp == 3);  // inclusive at the boundary
    CHECK_THROWS_AS(match_with_threshold(assignment, 3, 3, 1.5), ValidationError);
    CHECK_THROWS_AS(match_with_threshold(assignment, 3, 3, -0.1), ValidationError);
}

TEST_CASE("with a fixed assignment, counts are monotone in tau") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<std::vector<double>> scores(6, std::vector<double>(5));
    for (auto& row : scores) {
        for (auto& cell : row) cell = uniform(rng);
    }
    const auto assignment = hungarian_assign(scores, 6, 5);
    std::size_t last_tp = assignment.size() + 1;
    for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
        const MatchResult match = match_with_threshold(assignment, 6, 5, tau);
        CHECK(match.tp <= last_tp);
        last_tp = match.tp;
    }
}

TEST_CASE("sweep grid generation") {
    CHECK(SweepGrid{}.values().size() == 10);
    CHECK(SweepGrid{}.values().front() == Catch::Approx(0.50));
    CHECK(SweepGrid{}.values().back() == Catch::Approx(0.95));
    const SweepGrid single{0.70, 0.70, 0.05};
    REQUIRE(single.values().size() == 1);
    CHECK(single.values()[0] == Catch::Approx(0.70));
    CHECK_THROWS_AS((SweepGrid{0.5, 0.9, 0.0}).values(), ValidationError);
    CHECK_THROWS_AS((SweepGrid{0.9, 0.5, 0.05}).values(), ValidationError);
    CHECK_THROWS_AS((SweepGrid{-0.1, 0.9, 0.05}).values(), ValidationError);
}

TEST_CASE("default operating point is 0.70") {
    CHECK(kDefaultTau == 0.70);
    CHECK(MatchResult{}.tau == 0.70);
}
