// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <roieval/evaluate.hpp>

#include "support/one_hot_embedder.hpp"

using namespace roieval;

namespace {

GroundTruthRoI gt_roi(std::string region, std::string lesion, std::string density = "",
                      std::string morphology = "", std::string uptake = "") {
    GroundTruthRoI roi;
    roi.anatomic_region = std::move(region);
    roi.lesion_type = std::move(lesion);
    roi.density = std::move(density);
    roi.morphology = std::move(morphology);
    roi.fdg_uptake = std::move(uptake);
    roi.physical_region = PhysicalRegion::kAbdomenPelvis;
    return roi;
}

ExtractedRoI pred_roi(std::string region, std::string lesion, std::string density = "",
                      std::string morphology = "", std::string uptake = "") {
    ExtractedRoI roi;
    roi.extraction_text = region + " / " + lesion;
    roi.anatomic_region = std::move(region);
    roi.lesion_type = std::move(lesion);
    roi.density = std::move(density);
    roi.morphology = std::move(morphology);
    roi.fdg_uptake = std::move(uptake);
    return roi;
}

EvaluateOptions one_hot_options() {
    EvaluateOptions options;
    options.embedder_override = std::make_shared<roieval::testing::OneHotEmbedder>();
    return options;
}

// Two-report corpus where predictions replicate the ground truth exactly.
// Field values are pairwise distinct so one-hot cosines are the identity.
std::pair<std::vector<ReportRecord>, std::vector<PredictionRecord>> identity_corpus() {
    std::vector<ReportRecord> gt(2);
    gt[0].report_id = "r-001";
    gt[0].report_text = "tổn thương gan phải tăng chuyển hóa mạnh";
    gt[0].rois = {gt_roi("gan phải", "khối u", "giảm đậm độ", "bờ rõ", "tăng mạnh"),
                  gt_roi("phổi trái", "nốt đặc", "kính mờ", "tua gai", "tăng nhẹ")};
    gt[1].report_id = "r-002";
    gt[1].report_text = "hạch cổ trái kích thước lớn không tăng chuyển hóa";
    gt[1].rois = {gt_roi("hạch cổ", "hạch lớn", "đồng nhất", "bầu dục", "không tăng")};

    std::vector<PredictionRecord> pred(2);
    pred[0].report_id = "r-001";
    pred[0].report_text = gt[0].report_text;
    pred[0].rois = {pred_roi("gan phải", "khối u", "giảm đậm độ", "bờ rõ", "tăng mạnh"),
                    pred_roi("phổi trái", "nốt đặc", "kính mờ", "tua gai", "tăng nhẹ")};
    pred[1].report_id = "r-002";
    pred[1].report_text = gt[1].report_text;
    pred[1].rois = {pred_roi("hạch cổ", "hạch lớn", "đồng nhất", "bầu dục", "không tăng")};
    return {gt, pred};
}

class TempDir {
  public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("roieval-eval-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

}  // namespace

TEST_CASE("prediction records parse strictly") {
    SECTION("both record kinds load") {
        const nlohmann::json doc = nlohmann::json::parse(R"([
            {"report_id": "a", "report_text": "Có u ở gan.",
             "rois": [{"extraction_text": "u ở gan", "anatomic_region": "gan",
                       "lesion_type": "u"}]},
            {"report_id": "b", "report_text": "Không thấy bất thường."}
        ])");
        const auto records = load_predictions(doc);
        REQUIRE(records.size() == 2);
        REQUIRE(records[0].rois.has_value());
        CHECK(records[0].rois->size() == 1);
        CHECK((*records[0].rois)[0].anatomic_region == "gan");
        CHECK_FALSE(records[1].rois.has_value());
        CHECK(records[1].report_text == "Không thấy bất thường.");
    }
    SECTION("empty rois array stays distinct from a missing one") {
        const auto records =
            load_predictions(nlohmann::json::parse(R"([{"report_id": "a", "rois": []}])"));
        REQUIRE(records[0].rois.has_value());
        CHECK(records[0].rois->empty());
    }
    SECTION("malformed files are rejected") {
        CHECK_THROWS_AS(load_predictions(nlohmann::json::object()), ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(R"(["x"])")), ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(R"([{"report_text": "x"}])")),
                        ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(
                            R"([{"report_id": "a"}, {"report_id": "a"}])")),
                        ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(
                            R"([{"report_id": "a", "reportText": "x"}])")),
                        ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(
                            R"([{"report_id": "a", "rois": {}}])")),
                        ValidationError);
        CHECK_THROWS_AS(load_predictions(nlohmann::json::parse(
                            R"([{"report_id": "a", "rois": [{"anatomic_region": "gan"}]}])")),
                        ValidationError);  // RoI without extraction_text
    }
}

TEST_CASE("report ids must coincide as sets") {
    auto [gt, pred] = identity_corpus();
    SECTION("missing prediction") {
        pred.pop_back();
        CHECK_THROWS_AS(run_pipeline(gt, pred, one_hot_options()), ValidationError);
    }
    SECTION("unknown prediction") {
        PredictionRecord extra;
        extra.report_id = "r-999";
        extra.rois.emplace();
        pred.push_back(extra);
        CHECK_THROWS_AS(run_pipeline(gt, pred, one_hot_options()), ValidationError);
    }
    SECTION("order does not matter") {
        std::swap(pred[0], pred[1]);
        const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
        CHECK(out.report.per_report[0].report_id == "r-001");  // ground-truth order wins
        CHECK(out.report.corpus.f1 == 1.0);
    }
}

TEST_CASE("identity corpus scores perfectly") {
    const auto [gt, pred] = identity_corpus();
    const PipelineResult out = run_pipeline(gt, pred, one_hot_options());

    CHECK(out.report.corpus.tp == 3);
    CHECK(out.report.corpus.fp == 0);
    CHECK(out.report.corpus.fn == 0);
    CHECK(out.report.corpus.precision == 1.0);
    CHECK(out.report.corpus.recall == 1.0);
    CHECK(out.report.corpus.f1 == 1.0);
    CHECK(out.report.corpus.mean_roiq == Catch::Approx(1.0).margin(1e-12));

    REQUIRE(out.report.per_report.size() == 2);
    for (const auto& report : out.report.per_report) {
        CHECK(report.coverage.f1 == 1.0);
        CHECK(report.mean_roiq == Catch::Approx(1.0).margin(1e-12));
        for (const auto& pair : report.pairs) {
            CHECK(pair.pred_index == pair.gt_index);
            CHECK(pair.score == Catch::Approx(1.0).margin(1e-12));
        }
    }

    CHECK(out.report.config.predictions_source == "pre-extracted");
    CHECK(out.report.config.extractor.empty());
    CHECK(out.report.config.embedder == "one-hot-test(dim=4096)");
    CHECK(out.report.config.toolkit_version == kVersion);

    REQUIRE(out.assignments.size() == 2);
    CHECK(out.assignments[0].pred_count == 2);
    CHECK(out.assignments[0].assignment.size() == 2);
}

TEST_CASE("mixed prediction kinds are rejected") {
    auto [gt, pred] = identity_corpus();
    pred[1].rois.reset();
    CHECK_THROWS_WITH(run_pipeline(gt, pred, one_hot_options()),
                      Catch::Matchers::ContainsSubstring("mix"));
}

TEST_CASE("raw-text predictions run through the rules extractor") {
    TempDir tmp;
    const std::string lexicon = tmp.file("lexicon.json");
    std::ofstream(lexicon) << R"({"gan": "anatomic_region", "u": "lesion_type"})";

    std::vector<ReportRecord> gt(1);
    gt[0].report_id = "r-1";
    gt[0].rois = {gt_roi("gan", "u")};
    std::vector<PredictionRecord> pred(1);
    pred[0].report_id = "r-1";
    pred[0].report_text = "Có u ở gan.";

    EvaluateOptions options = one_hot_options();
    SECTION("extractor required") {
        CHECK_THROWS_AS(run_pipeline(gt, pred, options), ValidationError);
    }
    SECTION("rules extraction end to end") {
        ExtractorConfig extractor;
        extractor.backend = ExtractorConfig::Backend::kRules;
        extractor.lexicon_path = lexicon;
        options.extractor = extractor;
        const PipelineResult out = run_pipeline(gt, pred, options);
        CHECK(out.report.corpus.tp == 1);
        CHECK(out.report.corpus.f1 == 1.0);
        CHECK(out.report.config.predictions_source == "extracted-from-text");
        CHECK(out.report.config.extractor.rfind("rules(", 0) == 0);
    }
    SECTION("blank prediction text extracts nothing") {
        ExtractorConfig extractor;
        extractor.backend = ExtractorConfig::Backend::kRules;
        extractor.lexicon_path = lexicon;
        options.extractor = extractor;
        pred[0].report_text = "   ";
        const PipelineResult out = run_pipeline(gt, pred, options);
        CHECK(out.report.corpus.tp == 0);
        CHECK(out.report.corpus.fp == 0);
        CHECK(out.report.corpus.fn == 1);
    }
}

TEST_CASE("text metrics are computed only over reports with both texts") {
    auto [gt, pred] = identity_corpus();
    SECTION("identical texts score perfectly") {
        const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
        REQUIRE(out.report.nlp.has_value());
        CHECK(out.report.nlp->scored_reports == 2);
        CHECK(out.report.nlp->bleu4 == Catch::Approx(100.0).margin(1e-9));
        CHECK(out.report.nlp->bleu4_sentence_mean == Catch::Approx(100.0).margin(1e-9));
        CHECK(out.report.nlp->rouge1 == Catch::Approx(100.0).margin(1e-9));
        CHECK(out.report.nlp->rougeL == Catch::Approx(100.0).margin(1e-9));
        CHECK(out.report.nlp->embed.f1 == Catch::Approx(100.0).margin(1e-9));
    }
    SECTION("reports missing either text are skipped") {
        gt[1].report_text.clear();
        const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
        REQUIRE(out.report.nlp.has_value());
        CHECK(out.report.nlp->scored_reports == 1);
    }
    SECTION("no text anywhere leaves the block absent") {
        for (auto& g : gt) g.report_text.clear();
        const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
        CHECK_FALSE(out.report.nlp.has_value());
        const nlohmann::json doc = out.report;
        CHECK(doc["nlp"].is_null());
    }
}

TEST_CASE("parallel evaluation matches serial evaluation") {
    // A corpus large enough to keep several workers busy, with imperfect
    // predictions so scores are non-trivial.
    std::vector<ReportRecord> gt;
    std::vector<PredictionRecord> pred;
    for (int r = 0; r < 16; ++r) {
        ReportRecord record;
        record.report_id = "r-" + std::to_string(r);
        record.report_text = "báo cáo số " + std::to_string(r) + " có tổn thương";
        PredictionRecord p;
        p.report_id = record.report_id;
        p.report_text = record.report_text;
        p.rois.emplace();
        for (int k = 0; k < 1 + r % 4; ++k) {
            const std::string tag = std::to_string(r) + "x" + std::to_string(k);
            record.rois.push_back(gt_roi("vùng" + tag, "loại" + tag));
            // every other prediction corrupts the lesion type
            if (k % 2 == 0) {
                p.rois->push_back(pred_roi("vùng" + tag, "loại" + tag));
            } else {
                p.rois->push_back(pred_roi("vùng" + tag, "khác" + tag));
            }
        }
        gt.push_back(std::move(record));
        pred.push_back(std::move(p));
    }

    EvaluateOptions serial = one_hot_options();
    serial.parallelism = 1;
    EvaluateOptions parallel = one_hot_options();
    parallel.parallelism = 4;

    const PipelineResult a = run_pipeline(gt, pred, serial);
    const PipelineResult b = run_pipeline(gt, pred, parallel);
    const nlohmann::json ja = a.report;
    const nlohmann::json jb = b.report;
    CHECK(ja == jb);
    CHECK(ja.dump(2) == jb.dump(2));
    REQUIRE(a.assignments.size() == b.assignments.size());
    for (std::size_t i = 0; i < a.assignments.size(); ++i) {
        CHECK(a.assignments[i].report_id == b.assignments[i].report_id);
        REQUIRE(a.assignments[i].assignment.size() == b.assignments[i].assignment.size());
        for (std::size_t k = 0; k < a.assignments[i].assignment.size(); ++k) {
            CHECK(a.assignments[i].assignment[k].pred == b.assignments[i].assignment[k].pred);
            CHECK(a.assignments[i].assignment[k].gt == b.assignments[i].assignment[k].gt);
            CHECK(a.assignments[i].assignment[k].score == b.assignments[i].assignment[k].score);
        }
    }
}

TEST_CASE("pipeline input validation") {
    auto [gt, pred] = identity_corpus();
    EvaluateOptions options = one_hot_options();
    options.tau = 1.5;
    CHECK_THROWS_AS(run_pipeline(gt, pred, options), ValidationError);
    CHECK_THROWS_AS(run_pipeline({}, pred, one_hot_options()), ValidationError);
}

TEST_CASE("sweep json carries run config and grid") {
    const auto [gt, pred] = identity_corpus();
    const PipelineResult out = run_pipeline(gt, pred, one_hot_options());
    const auto rows = sweep_thresholds(out.assignments, SweepGrid{});
    const nlohmann::json doc = sweep_to_json(rows, SweepGrid{}, out.report.config);
    CHECK(doc["rows"].size() == 10);
    CHECK(doc["config"]["grid"]["min"] == 0.50);
    CHECK(doc["config"]["grid"]["max"] == 0.95);
    CHECK(doc["config"]["embedder"] == "one-hot-test(dim=4096)");
    CHECK(doc["rows"][0]["tp"] == 3);
}
