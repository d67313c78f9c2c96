// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Release gate for the toolkit. Each test case states one shipping
// criterion; a listener prints a PASS/FAIL line per criterion so the
// binary's output reads as a checklist.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <roieval/roieval.hpp>

#include "support/one_hot_embedder.hpp"

using namespace roieval;

namespace {

class ChecklistListener : public Catch::EventListenerBase {
  public:
    using Catch::EventListenerBase::EventListenerBase;

    void testCaseEnded(Catch::TestCaseStats const& stats) override {
        const bool ok = stats.totals.assertions.allPassed();
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << stats.testInfo->name << "\n";
    }
};
CATCH_REGISTER_LISTENER(ChecklistListener)

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

GroundTruthRoI gt_roi(std::string region, std::string lesion, std::string uptake) {
    GroundTruthRoI roi;
    roi.anatomic_region = std::move(region);
    roi.lesion_type = std::move(lesion);
    roi.fdg_uptake = std::move(uptake);
    roi.physical_region = PhysicalRegion::kAbdomenPelvis;
    return roi;
}

ExtractedRoI pred_roi(const GroundTruthRoI& gt) {
    ExtractedRoI roi;
    roi.extraction_text = gt.anatomic_region + " " + gt.lesion_type;
    roi.anatomic_region = gt.anatomic_region;
    roi.lesion_type = gt.lesion_type;
    roi.fdg_uptake = gt.fdg_uptake;
    return roi;
}

// Corpus whose RoIs use pairwise-distinct tokens: under the one-hot
// embedder every off-diagonal similarity is 0 and every matching field
// scores exactly 1.
std::pair<std::vector<ReportRecord>, std::vector<PredictionRecord>> distinct_token_corpus(
    const std::vector<std::size_t>& rois_per_report) {
    std::vector<ReportRecord> gt;
    std::vector<PredictionRecord> pred;
    for (std::size_t r = 0; r < rois_per_report.size(); ++r) {
        ReportRecord record;
        record.report_id = "r-" + std::to_string(r);
        PredictionRecord p;
        p.report_id = record.report_id;
        p.rois.emplace();
        for (std::size_t k = 0; k < rois_per_report[r]; ++k) {
            const std::string tag = std::to_string(r) + "n" + std::to_string(k);
            record.rois.push_back(
                gt_roi("vung" + tag, "loai" + tag, "fdg" + tag));
            p.rois->push_back(pred_roi(record.rois.back()));
        }
        gt.push_back(std::move(record));
        pred.push_back(std::move(p));
    }
    return {gt, pred};
}

EvaluateOptions one_hot_options() {
    EvaluateOptions options;
    options.embedder_override = std::make_shared<roieval::testing::OneHotEmbedder>(16384);
    return options;
}

const std::string kCli = ROIEVAL_CLI_PATH;
const std::string kData = ROIEVAL_DATA_DIR;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

class TempDir {
  public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("roieval-accept-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

int run_cli(const std::string& args) {
    const int status = std::system((kCli + " " + args).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("criterion 01: assignment solver equals exhaustive search on 500 random matrices") {
    std::mt19937 rng(20260814);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const auto start = std::chrono::steady_clock::now();
    for (int round = 0; round < 500; ++round) {
        const std::size_t pred_count = 1 + rng() % 6;
        const std::size_t gt_count = 1 + rng() % 6;
        std::vector<std::vector<double>> scores(pred_count, std::vector<double>(gt_count));
        for (auto& row : scores) {
            for (auto& cell : row) cell = uniform(rng);
        }
        const auto pairs = hungarian_assign(scores, pred_count, gt_count);
        double total = 0.0;
        for (const auto& p : pairs) total += p.score;
        REQUIRE(total == Catch::Approx(brute_force_best(scores, pred_count, gt_count))
                             .margin(1e-9));
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    CHECK(elapsed.count() < 5.0);
}

TEST_CASE("criterion 02: pair quality index is exact on hand cases and well-behaved") {
    // hand cases, to 1e-12
    AttributeSimilarities a;
    a.s_region = a.s_lesion = 1.0;
    a.s_density = a.s_morphology = a.s_uptake = 1.0;
    CHECK(roiq(a) == Catch::Approx(1.0).margin(1e-12));

    AttributeSimilarities b;
    b.s_region = 0.0;
    b.s_lesion = 1.0;
    b.s_density = 1.0;
    CHECK(roiq(b) == Catch::Approx(0.0).margin(1e-12));

    AttributeSimilarities c;
    c.s_region = 0.81;
    c.s_lesion = 0.49;
    c.s_density = 0.6;
    CHECK(roiq(c) == Catch::Approx(0.378).margin(1e-12));

    // randomized properties over 1,000 tuples
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    auto maybe = [&](double p) -> std::optional<double> {
        return uniform(rng) < p ? std::optional<double>(uniform(rng)) : std::nullopt;
    };
    for (int round = 0; round < 1000; ++round) {
        AttributeSimilarities sims;
        sims.s_region = uniform(rng);
        sims.s_lesion = uniform(rng);
        sims.s_density = maybe(0.6);
        sims.s_morphology = maybe(0.6);
        sims.s_uptake = maybe(0.6);
        const double q = roiq(sims);
        REQUIRE(q >= 0.0);
        REQUIRE(q <= 1.0);
        if (sims.s_region == 0.0 || sims.s_lesion == 0.0) REQUIRE(q == 0.0);
        if (q == 0.0) {
            double present_sum = 0.0;
            int present = 0;
            for (const auto& s : {sims.s_density, sims.s_morphology, sims.s_uptake}) {
                if (s) {
                    present_sum += *s;
                    ++present;
                }
            }
            REQUIRE((sims.s_region * sims.s_lesion == 0.0 ||
                     (present > 0 && present_sum == 0.0)));
        }
        auto bumped_not_lower = [&](auto mutate) {
            AttributeSimilarities up = sims;
            mutate(up);
            REQUIRE(roiq(up) >= q);
        };
        bumped_not_lower([](auto& s) { s.s_region = std::min(1.0, s.s_region + 0.07); });
        bumped_not_lower([](auto& s) { s.s_lesion = std::min(1.0, s.s_lesion + 0.07); });
        bumped_not_lower([](auto& s) {
            if (s.s_density) s.s_density = std::min(1.0, *s.s_density + 0.07);
        });
        bumped_not_lower([](auto& s) {
            if (s.s_morphology) s.s_morphology = std::min(1.0, *s.s_morphology + 0.07);
        });
        bumped_not_lower([](auto& s) {
            if (s.s_uptake) s.s_uptake = std::min(1.0, *s.s_uptake + 0.07);
        });
    }
}

TEST_CASE("criterion 03: coverage formulas on the worked counts") {
    const CoverageMetrics m = coverage_from_counts(2, 1, 2);
    CHECK(m.precision == Catch::Approx(0.6667).margin(1e-4));
    CHECK(m.recall == Catch::Approx(0.5).margin(1e-4));
    CHECK(m.f1 == Catch::Approx(0.5714).margin(1e-4));
}

TEST_CASE("criterion 04: counts and rates are non-increasing over the default grid") {
    // 50-report synthetic corpus with similarity scores spread over [0, 1]:
    // each prediction matches its ground truth on 0..5 of the five fields.
    std::mt19937 rng(41);
    std::vector<ReportRecord> gt;
    std::vector<PredictionRecord> pred;
    for (int r = 0; r < 50; ++r) {
        ReportRecord record;
        record.report_id = "r-" + std::to_string(r);
        PredictionRecord p;
        p.report_id = record.report_id;
        p.rois.emplace();
        const std::size_t rois = 1 + rng() % 4;
        for (std::size_t k = 0; k < rois; ++k) {
            const std::string tag = std::to_string(r) + "n" + std::to_string(k);
            GroundTruthRoI roi;
            roi.anatomic_region = "vung" + tag;
            roi.lesion_type = "loai" + tag;
            roi.density = "dam" + tag;
            roi.morphology = "hinh" + tag;
            roi.fdg_uptake = "fdg" + tag;
            roi.physical_region = PhysicalRegion::kChest;
            record.rois.push_back(roi);

            ExtractedRoI guess;
            guess.extraction_text = "doan " + tag;
            const std::size_t agree = rng() % 6;  // how many fields survive
            guess.anatomic_region = agree > 0 ? roi.anatomic_region : "khac0" + tag;
            guess.lesion_type = agree > 1 ? roi.lesion_type : "khac1" + tag;
            guess.density = agree > 2 ? roi.density : "khac2" + tag;
            guess.morphology = agree > 3 ? roi.morphology : "khac3" + tag;
            guess.fdg_uptake = agree > 4 ? roi.fdg_uptake : "khac4" + tag;
            p.rois->push_back(guess);
        }
        gt.push_back(std::move(record));
        pred.push_back(std::move(p));
    }
    const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
    const auto rows = sweep_thresholds(out.assignments, SweepGrid{});
    REQUIRE(rows.size() == 10);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        CHECK(rows[k].tp <= rows[k - 1].tp);
        CHECK(rows[k].precision <= rows[k - 1].precision);
        CHECK(rows[k].recall <= rows[k - 1].recall);
        CHECK(rows[k].f1 <= rows[k - 1].f1);
    }
    // the grid actually spans distinct operating points on this corpus
    CHECK(rows.front().tp > rows.back().tp);
}

TEST_CASE("criterion 05: the shipped default threshold is 0.70") {
    CHECK(kDefaultTau == 0.70);
    CHECK(EvaluateOptions{}.tau == 0.70);
    CHECK(MatchResult{}.tau == 0.70);
}

TEST_CASE("criterion 06: annotation lines survive a parse/serialize round trip") {
    const std::vector<std::string> regions = {"Gan phải", "Phổi trái", "Hạch cổ", "Manh tràng",
                                              "Đại tràng", "Thận trái"};
    const std::vector<std::string> lesions = {"Khối u", "Nốt đặc", "Hạch lớn",
                                              "Tăng chuyển hóa khu trú"};
    const std::vector<std::string> sizes = {"25 x 30 mm", "9 mm", "Không rõ", ""};
    const std::vector<std::string> suvs = {"12.3", "3.5", "Unclear", "8 - 10"};
    const std::vector<std::string> descriptors = {"Giảm đậm độ", "Kính mờ", "Đồng nhất", ""};
    // list items carry commas only inside parentheses; a bare comma would
    // read back as an item separator
    const std::vector<std::string> phrases = {
        "Ung thư đại tràng (manh tràng)", "Bệnh Crohn (thể hoạt động, mạn tính)", "Lao hạch",
        "Viêm ruột thừa/Áp xe", "Di căn gan"};
    const std::vector<std::string> exams = {"Nội soi đại tràng và sinh thiết", "MRI/CT bụng",
                                            "Xét nghiệm máu", "Siêu âm vùng cổ"};
    std::mt19937 rng(313);
    auto pick = [&](const std::vector<std::string>& pool) { return pool[rng() % pool.size()]; };
    for (int round = 0; round < 1000; ++round) {
        GroundTruthRoI roi;
        roi.anatomic_region = pick(regions);
        roi.lesion_type = pick(lesions);
        roi.size = pick(sizes);
        roi.suv_max_text = pick(suvs);
        roi.suv_max = detail::parse_decimal(roi.suv_max_text);
        roi.density = pick(descriptors);
        roi.morphology = pick(descriptors);
        roi.fdg_uptake = pick(lesions);
        const std::size_t diseases = rng() % 4;
        for (std::size_t k = 0; k < diseases; ++k) roi.top3_diseases.push_back(pick(phrases));
        const std::size_t examinations = rng() % 4;
        for (std::size_t k = 0; k < examinations; ++k) {
            roi.top3_examinations.push_back(pick(exams));
        }
        roi.physical_region = physical_region_from_int(1 + static_cast<int>(rng() % 3));
        roi.note = pick(phrases);

        const std::string line = serialize_annotation(roi);
        const GroundTruthRoI back = parse_annotation(line);
        REQUIRE(back.anatomic_region == roi.anatomic_region);
        REQUIRE(back.lesion_type == roi.lesion_type);
        REQUIRE(back.size == roi.size);
        REQUIRE(back.suv_max_text == roi.suv_max_text);
        REQUIRE(back.suv_max == roi.suv_max);
        REQUIRE(back.density == roi.density);
        REQUIRE(back.morphology == roi.morphology);
        REQUIRE(back.fdg_uptake == roi.fdg_uptake);
        REQUIRE(back.top3_diseases == roi.top3_diseases);
        REQUIRE(back.top3_examinations == roi.top3_examinations);
        REQUIRE(back.physical_region == roi.physical_region);
        REQUIRE(back.note == roi.note);
        REQUIRE(serialize_annotation(back) == line);
    }

    const std::string cecum_line =
        "[Cecum] - [Focal hypermetabolism] - [Unclear] - [12.3] - [Soft tissue density] - "
        "[Focal] - [Very intense hypermetabolism] - [Colon cancer (cecum), Inflammatory bowel "
        "disease (Crohn's disease), Appendicitis/Abscess] - [Colonoscopy and biopsy, Abdominal "
        "MRI/CT, Blood tests] - [3] - [Very intense focal FDG uptake (SUVmax 12.3) in the cecum. "
        "Highly suggestive of colon cancer. Requires exclusion of inflammatory bowel disease.]";
    const GroundTruthRoI cecum = parse_annotation(cecum_line);
    REQUIRE(cecum.suv_max.has_value());
    CHECK(*cecum.suv_max == 12.3);
    CHECK(cecum.physical_region == PhysicalRegion::kAbdomenPelvis);
    CHECK(cecum.anatomic_region == "Cecum");
    CHECK(cecum.top3_diseases.size() == 3);
}

TEST_CASE("criterion 07: region ranges overlap by exactly 15 slices") {
    for (const int total : {60, 100, 313, 1000}) {
        const RegionSplit split = compute_region_ranges(total);
        CHECK(split.head_neck.begin == 0);
        CHECK(split.head_neck.end == total / 4);  // floor(0.25 * T)
        CHECK(split.head_neck.end - split.chest.begin == 15);
        CHECK(split.chest.end - split.abdomen_pelvis.begin == 15);
        CHECK(split.abdomen_pelvis.end == total);
    }
    const RegionSplit split = compute_region_ranges(313);
    CHECK(split.head_neck.begin == 0);
    CHECK(split.head_neck.end == 78);
}

TEST_CASE("criterion 08: identity corpus is perfect; corrupting k regions drops TP by k") {
    const std::vector<std::size_t> layout = {3, 2, 3, 2, 2};  // 12 RoIs over 5 reports
    auto [gt, pred] = distinct_token_corpus(layout);

    const PipelineResult clean = run_pipeline(gt, pred, one_hot_options());
    REQUIRE(clean.report.corpus.tp == 12);
    CHECK(clean.report.corpus.precision == 1.0);
    CHECK(clean.report.corpus.recall == 1.0);
    CHECK(clean.report.corpus.f1 == 1.0);
    CHECK(clean.report.corpus.mean_roiq == Catch::Approx(1.0).margin(1e-12));

    // corrupt the anatomic region of k = 3 predictions, in different reports
    const std::size_t k = 3;
    (*pred[0].rois)[0].anatomic_region = "sai-lech-a";
    (*pred[2].rois)[1].anatomic_region = "sai-lech-b";
    (*pred[4].rois)[0].anatomic_region = "sai-lech-c";
    const PipelineResult corrupted = run_pipeline(gt, pred, one_hot_options());
    CHECK(corrupted.report.corpus.tp == 12 - k);
    CHECK(corrupted.report.corpus.fp == k);
    CHECK(corrupted.report.corpus.fn == k);
}

TEST_CASE("criterion 09: text metric values") {
    CHECK(bleu4("a b c d", "a b c d e") == Catch::Approx(77.88).margin(0.01));
    const RougeScores scores = rouge("a b c", "a c d");
    CHECK(scores.rouge1 == Catch::Approx(66.67).margin(0.01));
    CHECK(scores.rougeL == Catch::Approx(66.67).margin(0.01));

    CHECK(bleu4("a b c d", "a b c d") == Catch::Approx(100.0).margin(1e-9));
    const RougeScores identical = rouge("a b c", "a b c");
    CHECK(identical.rouge1 == Catch::Approx(100.0).margin(1e-9));
    CHECK(identical.rougeL == Catch::Approx(100.0).margin(1e-9));
    roieval::testing::OneHotEmbedder embedder;
    CHECK(embed_score("a b c", "a b c", embedder).f1 == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("criterion 10: graph edges obey the criterion; the worked pair is exact") {
    std::mt19937 rng(59);
    std::uniform_real_distribution<double> coord(0.0, 25.0);
    std::uniform_real_distribution<double> extent(0.5, 4.0);
    std::uniform_real_distribution<double> component(0.05, 1.0);
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 2 + rng() % 6;
        std::vector<RoINode> nodes;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = coord(rng), y = coord(rng), z = coord(rng);
            EmbeddingVector feature(3);
            for (auto& f : feature) f = component(rng);
            nodes.push_back(derive_node(
                {x, y, z, x + extent(rng), y + extent(rng), z + extent(rng)}, std::move(feature)));
        }
        GraphConfig config;
        config.tau_d = 1.0 + coord(rng) / 2.0;
        config.tau_s = component(rng);
        const RoIGraph graph = build_graph(nodes, config);

        std::set<std::pair<std::size_t, std::size_t>> present;
        for (const auto& e : graph.edges) {
            present.insert({e.i, e.j});
            REQUIRE((e.distance < config.tau_d || e.feature_similarity > config.tau_s));
        }
        for (const auto& e : graph.edges) {
            REQUIRE(present.count({e.j, e.i}) == 1);  // both directions present
            const RoIEdge reverse = edge_between(nodes, e.j, e.i);
            for (int axis = 0; axis < 3; ++axis) {
                REQUIRE(e.direction[axis] == Catch::Approx(-reverse.direction[axis])
                                                 .margin(1e-12));
            }
            REQUIRE(e.volume_ratio * reverse.volume_ratio == Catch::Approx(1.0).margin(1e-9));
        }
    }

    std::vector<RoINode> pair(2);
    pair[0].centroid = {0.0, 0.0, 0.0};
    pair[0].volume = 8.0;
    pair[0].mean_intensity_ct = 2.0;
    pair[0].mean_intensity_pet = 3.0;
    pair[0].feature = {1.0, 0.0};
    pair[1].centroid = {3.0, 4.0, 0.0};
    pair[1].volume = 2.0;
    pair[1].mean_intensity_ct = 1.0;
    pair[1].mean_intensity_pet = 4.0;
    pair[1].feature = {0.5, std::sqrt(3.0) / 2.0};
    const RoIEdge edge = edge_between(pair, 0, 1);
    CHECK(edge.spatial_features[0] == 5.0);
    CHECK(edge.spatial_features[1] == 0.6);
    CHECK(edge.spatial_features[2] == 0.8);
    CHECK(edge.spatial_features[3] == 0.0);
    CHECK(edge.spatial_features[4] == 4.0);
    CHECK(edge.morphological_features[0] == Catch::Approx(0.5).margin(1e-12));
    CHECK(edge.morphological_features[1] == 2.0);
    CHECK(edge.morphological_features[2] == 3.0);
    CHECK(edge.morphological_features[3] == 1.0);
    CHECK(edge.morphological_features[4] == 4.0);
}

TEST_CASE("criterion 11: evaluation is deterministic and parallel equals serial") {
    TempDir tmp;
    const std::string first = tmp.file("a.json");
    const std::string second = tmp.file("b.json");
    const std::string quiet = " >/dev/null 2>&1";
    const std::string base = "evaluate --gt " + kData + "/gt.json --pred " + kData +
                             "/pred_identity.json --out ";
    REQUIRE(run_cli(base + first + quiet) == 0);
    REQUIRE(run_cli(base + second + quiet) == 0);
    const std::string bytes = slurp(first);
    CHECK_FALSE(bytes.empty());
    CHECK(bytes == slurp(second));

    const std::string parallel = tmp.file("p.json");
    REQUIRE(run_cli(base + parallel + " --parallelism 4" + quiet) == 0);
    CHECK(bytes == slurp(parallel));

    // and through the library, on a larger corpus
    const auto [gt, pred] = distinct_token_corpus({3, 1, 4, 2, 3, 2, 1, 4, 2, 3});
    EvaluateOptions serial_opts = one_hot_options();
    EvaluateOptions parallel_opts = one_hot_options();
    parallel_opts.parallelism = 4;
    const nlohmann::json serial_doc = run_pipeline(gt, pred, serial_opts).report;
    const nlohmann::json parallel_doc = run_pipeline(gt, pred, parallel_opts).report;
    CHECK(serial_doc.dump() == parallel_doc.dump());
}
