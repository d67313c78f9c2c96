// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end checks of the installed binary: exit codes, file outputs,
// and determinism. Everything here runs offline.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

namespace {

const std::string kCli = ROIEVAL_CLI_PATH;
const std::string kData = ROIEVAL_DATA_DIR;

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

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
                ("roieval-cli-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

CliResult run_cli(const TempDir& tmp, const std::string& args) {
    const std::string out = tmp.file("stdout.txt");
    const std::string err = tmp.file("stderr.txt");
    const std::string command = kCli + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

}  // namespace

TEST_CASE("cli evaluate writes a report and prints a summary") {
    TempDir tmp;
    const std::string report_path = tmp.file("report.json");
    const CliResult r = run_cli(tmp, "evaluate --gt " + kData + "/gt.json --pred " + kData +
                                         "/pred_identity.json --out " + report_path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("precision") != std::string::npos);

    const nlohmann::json report = nlohmann::json::parse(slurp(report_path));
    CHECK(report["corpus"]["tp"] == 3);
    CHECK(report["corpus"]["fp"] == 0);
    CHECK(report["corpus"]["fn"] == 0);
    CHECK(report["corpus"]["f1"] == 1.0);
    CHECK(report["corpus"]["mean_roiq"].get<double>() == Catch::Approx(1.0).margin(1e-9));
    CHECK(report["config"]["tau"] == 0.7);
    CHECK(report["config"]["predictions_source"] == "pre-extracted");
    CHECK(report["config"]["embedder"].get<std::string>().rfind("local-hash", 0) == 0);
    CHECK(report["per_report"].size() == 2);
}

TEST_CASE("cli evaluate runs are byte-identical") {
    TempDir tmp;
    const std::string first = tmp.file("a.json");
    const std::string second = tmp.file("b.json");
    const std::string base =
        "evaluate --gt " + kData + "/gt.json --pred " + kData + "/pred_identity.json --out ";
    const CliResult a = run_cli(tmp, base + first);
    const CliResult b = run_cli(tmp, base + second);
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(first) == slurp(second));
    CHECK(a.out == b.out);
}

TEST_CASE("cli evaluate maps failures onto exit codes") {
    TempDir tmp;
    const std::string report_path = tmp.file("report.json");
    SECTION("missing input file is exit 2") {
        const CliResult r = run_cli(tmp, "evaluate --gt " + tmp.file("nope.json") + " --pred " +
                                             kData + "/pred_identity.json --out " + report_path);
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("error:") != std::string::npos);
        CHECK_FALSE(std::filesystem::exists(report_path));
    }
    SECTION("out-of-range tau is exit 4") {
        const CliResult r =
            run_cli(tmp, "evaluate --gt " + kData + "/gt.json --pred " + kData +
                             "/pred_identity.json --tau 1.7 --out " + report_path);
        CHECK(r.exit_code == 4);
        CHECK_FALSE(std::filesystem::exists(report_path));
    }
    SECTION("schema-invalid predictions are exit 4") {
        // the ground-truth corpus is not a predictions file
        const CliResult r = run_cli(tmp, "evaluate --gt " + kData + "/gt.json --pred " + kData +
                                             "/gt.json --out " + report_path);
        CHECK(r.exit_code == 4);
        CHECK(r.err.find("error:") != std::string::npos);
    }
}

TEST_CASE("cli sweep emits one row per grid value, consistent with evaluate") {
    TempDir tmp;
    const std::string report_path = tmp.file("report.json");
    const std::string sweep_path = tmp.file("sweep.json");
    REQUIRE(run_cli(tmp, "evaluate --gt " + kData + "/gt.json --pred " + kData +
                             "/pred_identity.json --out " + report_path)
                .exit_code == 0);
    const CliResult s = run_cli(tmp, "sweep --gt " + kData + "/gt.json --pred " + kData +
                                         "/pred_identity.json --out " + sweep_path);
    INFO(s.err);
    REQUIRE(s.exit_code == 0);
    CHECK(s.out.find("tau") != std::string::npos);

    const nlohmann::json report = nlohmann::json::parse(slurp(report_path));
    const nlohmann::json sweep = nlohmann::json::parse(slurp(sweep_path));
    REQUIRE(sweep["rows"].size() == 10);
    const auto& row = sweep["rows"][4];  // 0.50 + 4 * 0.05
    CHECK(row["tau"].get<double>() == Catch::Approx(0.70));
    CHECK(row["tp"] == report["corpus"]["tp"]);
    CHECK(row["fp"] == report["corpus"]["fp"]);
    CHECK(row["fn"] == report["corpus"]["fn"]);
    CHECK(sweep["config"]["grid"]["step"].get<double>() == Catch::Approx(0.05));

    const CliResult bad = run_cli(tmp, "sweep --gt " + kData + "/gt.json --pred " + kData +
                                           "/pred_identity.json --grid-step 0 --out " +
                                           tmp.file("bad.json"));
    CHECK(bad.exit_code == 4);
}

TEST_CASE("cli extract runs the rules backend over report files") {
    TempDir tmp;
    const std::string out_path = tmp.file("extracted.json");
    const CliResult r =
        run_cli(tmp, "extract --backend rules --lexicon " + kData + "/lexicon.json --in " +
                         kData + "/reports.json --out " + out_path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("extracted 2 RoIs from 2 reports") != std::string::npos);

    const nlohmann::json out = nlohmann::json::parse(slurp(out_path));
    REQUIRE(out.size() == 2);
    REQUIRE(out[0]["rois"].size() == 2);
    CHECK(out[0]["rois"][0]["anatomic_region"] == "gan");
    CHECK(out[0]["rois"][0]["lesion_type"] == "u");
    CHECK(out[0]["rois"][0]["fdg_uptake"] == "tăng chuyển hóa");
    CHECK(out[0]["rois"][1]["anatomic_region"] == "phổi");
    CHECK(out[0]["rois"][1]["lesion_type"] == "tổn thương");
    CHECK(out[1]["rois"].empty());
    for (const auto& roi : out[0]["rois"]) {
        CHECK_FALSE(roi["extraction_text"].get<std::string>().empty());
    }
}

TEST_CASE("cli evaluate extracts from raw text when asked") {
    TempDir tmp;
    const std::string report_path = tmp.file("report.json");
    const CliResult r = run_cli(
        tmp, "evaluate --gt " + kData + "/gt_text.json --pred " + kData +
                 "/pred_text.json --backend rules --lexicon " + kData + "/lexicon.json --out " +
                 report_path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const nlohmann::json report = nlohmann::json::parse(slurp(report_path));
    CHECK(report["corpus"]["f1"] == 1.0);
    CHECK(report["config"]["predictions_source"] == "extracted-from-text");
    CHECK(report["config"]["extractor"].get<std::string>().rfind("rules(", 0) == 0);
    REQUIRE(report["nlp"].is_object());
    CHECK(report["nlp"]["rouge1"].get<double>() == Catch::Approx(100.0).margin(1e-9));
}

TEST_CASE("cli parse-gt validates and counts a corpus") {
    TempDir tmp;
    const CliResult ok = run_cli(tmp, "parse-gt --in " + kData + "/gt.json");
    REQUIRE(ok.exit_code == 0);
    CHECK(ok.out.find("OK: 2 reports, 3 RoIs") != std::string::npos);

    const std::string broken = tmp.file("broken.json");
    std::ofstream(broken) << "{not json";
    const CliResult bad = run_cli(tmp, "parse-gt --in " + broken);
    CHECK(bad.exit_code == 4);
    CHECK(bad.err.find("error:") != std::string::npos);
}

TEST_CASE("cli split prints the slice ranges") {
    TempDir tmp;
    const CliResult r = run_cli(tmp, "split --slices 313");
    REQUIRE(r.exit_code == 0);
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    CHECK(doc["total_slices"] == 313);
    CHECK(doc["regions"]["head_neck"]["begin"] == 0);
    CHECK(doc["regions"]["head_neck"]["end"] == 78);
    CHECK(doc["regions"]["chest"]["begin"] == 63);
    CHECK(doc["regions"]["chest"]["end"] == 187);
    CHECK(doc["regions"]["abdomen_pelvis"]["begin"] == 172);
    CHECK(doc["regions"]["abdomen_pelvis"]["end"] == 313);

    CHECK(run_cli(tmp, "split --slices 0").exit_code == 4);
}

TEST_CASE("cli graph exports both edge directions") {
    TempDir tmp;
    const std::string out_path = tmp.file("graph.json");
    const CliResult r = run_cli(tmp, "graph --nodes " + kData +
                                         "/nodes.json --tau-d 10 --tau-s 0.99 --out " + out_path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("graph: 2 nodes, 2 directed edges") != std::string::npos);

    const nlohmann::json doc = nlohmann::json::parse(slurp(out_path));
    CHECK(doc["config"]["tau_d"] == 10.0);
    REQUIRE(doc["edges"].size() == 2);
    CHECK(doc["edges"][0]["i"] == 0);
    CHECK(doc["edges"][0]["j"] == 1);
    CHECK(doc["edges"][1]["i"] == 1);
    CHECK(doc["edges"][1]["j"] == 0);
    CHECK(doc["edges"][0]["concat_features"].size() == 2 + 2 + 5 + 5);

    CHECK(run_cli(tmp, "graph --nodes " + kData + "/nodes.json --tau-d 0 --tau-s 0.5 --out " +
                           tmp.file("g2.json"))
              .exit_code == 4);
}

TEST_CASE("cli requires a subcommand") {
    TempDir tmp;
    CHECK(run_cli(tmp, "").exit_code != 0);
}
