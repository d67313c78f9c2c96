// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// `roieval` command-line tool. Exit codes partition failures for scripting:
// 2 file I/O, 3 external service, 4 validation; 1 for anything else.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <roieval/roieval.hpp>

namespace {

struct EmbedderCli {
    std::string kind = "local";
    std::string endpoint = roieval::detail::env_or("EMBEDDER_ENDPOINT", "");
    std::string model;
    int dimension = -1;  // -1: pick per provider (local 256, remote inferred)
    int ngram = 3;
};

void add_embedder_options(CLI::App* cmd, EmbedderCli& opts) {
    cmd->add_option("--embedder", opts.kind, "Embedding backend")
        ->check(CLI::IsMember({"local", "remote"}));
    cmd->add_option("--embed-endpoint", opts.endpoint,
                    "Remote embedding endpoint (or EMBEDDER_ENDPOINT)");
    cmd->add_option("--embed-model", opts.model, "Remote embedding model name");
    cmd->add_option("--embed-dim", opts.dimension, "Embedding dimension");
    cmd->add_option("--embed-ngram", opts.ngram, "Local-hash character n-gram size");
}

roieval::EmbedderConfig embedder_config(const EmbedderCli& opts) {
    roieval::EmbedderConfig config;
    if (opts.kind == "remote") {
        config.provider = roieval::EmbedderConfig::Provider::kRemote;
        config.endpoint = opts.endpoint;
        config.model_name = opts.model;
        config.dimension = opts.dimension < 0 ? 0 : static_cast<std::size_t>(opts.dimension);
    } else {
        config.dimension = opts.dimension < 0 ? 256 : static_cast<std::size_t>(opts.dimension);
    }
    if (opts.ngram < 1) throw roieval::ValidationError("n-gram size must be at least 1");
    config.ngram_size = static_cast<std::size_t>(opts.ngram);
    config.validate();
    return config;
}

struct ExtractorCli {
    std::string backend;  // "llm" | "rules" | "" (unset)
    std::string endpoint = roieval::detail::env_or("EXTRACTOR_ENDPOINT", "");
    std::string model;
    std::string lexicon;
    int retries = 2;
};

void add_extractor_options(CLI::App* cmd, ExtractorCli& opts, bool required) {
    auto* backend = cmd->add_option("--backend", opts.backend, "Extraction backend")
                        ->check(CLI::IsMember({"llm", "rules"}));
    if (required) backend->required();
    cmd->add_option("--endpoint", opts.endpoint,
                    "LLM extraction endpoint (or EXTRACTOR_ENDPOINT)");
    cmd->add_option("--model", opts.model, "LLM extraction model name");
    cmd->add_option("--lexicon", opts.lexicon, "Lexicon file for the rules backend");
    cmd->add_option("--max-retries", opts.retries, "Transport retries for the LLM backend");
}

std::optional<roieval::ExtractorConfig> extractor_config(const ExtractorCli& opts) {
    if (opts.backend.empty() && opts.lexicon.empty()) return std::nullopt;
    roieval::ExtractorConfig config;
    const bool rules = opts.backend == "rules" || (opts.backend.empty() && !opts.lexicon.empty());
    config.backend = rules ? roieval::ExtractorConfig::Backend::kRules
                           : roieval::ExtractorConfig::Backend::kRemoteLlm;
    config.endpoint = opts.endpoint;
    config.model_name = opts.model;
    config.lexicon_path = opts.lexicon;
    if (opts.retries < 0) throw roieval::ValidationError("max-retries must be non-negative");
    config.max_retries = opts.retries;
    return config;
}

void write_json_output(const std::string& path, const nlohmann::json& doc) {
    roieval::write_text_file(path, doc.dump(2) + "\n");
}

struct EvaluateArgs {
    std::string gt_path, pred_path, out_path;
    double tau = roieval::kDefaultTau;
    std::size_t parallelism = 1;
    EmbedderCli embedder;
    ExtractorCli extractor;
};

roieval::PipelineResult run_pipeline_from_files(const EvaluateArgs& args) {
    const auto ground_truth = roieval::load_ground_truth_file(args.gt_path);
    const auto predictions = roieval::load_predictions_file(args.pred_path);
    roieval::EvaluateOptions options;
    options.tau = args.tau;
    options.embedder = embedder_config(args.embedder);
    options.extractor = extractor_config(args.extractor);
    options.parallelism = args.parallelism;
    return roieval::run_pipeline(ground_truth, predictions, options);
}

int cmd_evaluate(const EvaluateArgs& args) {
    const roieval::PipelineResult result = run_pipeline_from_files(args);
    write_json_output(args.out_path, nlohmann::json(result.report));
    std::cout << roieval::render_text_summary(result.report);
    return 0;
}

struct SweepArgs {
    EvaluateArgs base;
    roieval::SweepGrid grid;
};

int cmd_sweep(const SweepArgs& args) {
    args.grid.validate();
    const roieval::PipelineResult result = run_pipeline_from_files(args.base);
    const auto rows = roieval::sweep_thresholds(result.assignments, args.grid);
    write_json_output(args.base.out_path,
                      roieval::sweep_to_json(rows, args.grid, result.report.config));
    std::cout << roieval::render_sweep_table(rows);
    return 0;
}

struct ExtractArgs {
    std::string in_path, out_path;
    ExtractorCli extractor;
};

int cmd_extract(const ExtractArgs& args) {
    const auto config = extractor_config(args.extractor);
    if (!config) throw roieval::ValidationError("extract requires --backend");
    const nlohmann::json input = roieval::read_json_file(args.in_path);
    if (!input.is_array()) {
        throw roieval::ValidationError("extract input must be a JSON array of reports");
    }
    nlohmann::json output = nlohmann::json::array();
    std::size_t total = 0;
    for (const auto& item : input) {
        if (!item.is_object() || !item.contains("report_id") || !item.contains("report_text")) {
            throw roieval::ValidationError(
                "each report needs \"report_id\" and \"report_text\"");
        }
        const std::string text = item["report_text"].get<std::string>();
        nlohmann::json rois = nlohmann::json::array();
        for (const auto& roi : roieval::extract_rois(text, *config)) {
            rois.push_back(roieval::extracted_to_json(roi));
        }
        total += rois.size();
        output.push_back({{"report_id", item["report_id"]},
                          {"report_text", text},
                          {"rois", std::move(rois)}});
    }
    write_json_output(args.out_path, output);
    std::cout << "extracted " << total << " RoIs from " << input.size() << " reports\n";
    return 0;
}

int cmd_parse_gt(const std::string& in_path) {
    const auto corpus = roieval::load_ground_truth_file(in_path);
    std::size_t total = 0;
    for (const auto& report : corpus) {
        std::cout << report.report_id << ": " << report.rois.size() << " RoIs\n";
        total += report.rois.size();
    }
    std::cout << "OK: " << corpus.size() << " reports, " << total << " RoIs\n";
    return 0;
}

struct SplitArgs {
    int slices = 0;
    roieval::SplitConfig config;
};

int cmd_split(const SplitArgs& args) {
    const roieval::RegionSplit split = roieval::compute_region_ranges(args.slices, args.config);
    nlohmann::json doc;
    doc["total_slices"] = split.total_slices;
    doc["config"] = {{"overlap_slices", split.overlap_slices},
                     {"head_fraction", split.head_fraction},
                     {"chest_end_fraction", split.chest_end_fraction}};
    auto range_json = [](const roieval::SliceRange& r) {
        return nlohmann::json{{"begin", r.begin}, {"end", r.end}};
    };
    doc["regions"] = {{"head_neck", range_json(split.head_neck)},
                      {"chest", range_json(split.chest)},
                      {"abdomen_pelvis", range_json(split.abdomen_pelvis)}};
    std::cout << doc.dump(2) << "\n";
    return 0;
}

struct GraphArgs {
    std::string nodes_path, out_path;
    roieval::GraphConfig config;
};

int cmd_graph(const GraphArgs& args) {
    const nlohmann::json doc = roieval::read_json_file(args.nodes_path);
    const std::string dir = std::filesystem::path(args.nodes_path).parent_path().string();
    const auto nodes = roieval::load_nodes_json(doc, dir);
    const roieval::RoIGraph graph = roieval::build_graph(nodes, args.config);
    write_json_output(args.out_path, roieval::graph_to_json(graph));
    std::cout << "graph: " << graph.nodes.size() << " nodes, " << graph.edges.size()
              << " directed edges\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RoI-grounded report evaluation toolkit"};
    app.require_subcommand(1);

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions against ground truth");
    eval_cmd->add_option("--gt", eval_args.gt_path, "Ground-truth corpus JSON")->required();
    eval_cmd->add_option("--pred", eval_args.pred_path, "Predictions JSON")->required();
    eval_cmd->add_option("--tau", eval_args.tau, "Match validity threshold");
    eval_cmd->add_option("--out", eval_args.out_path, "Output report path")->required();
    eval_cmd->add_option("--parallelism", eval_args.parallelism, "Worker threads");
    add_embedder_options(eval_cmd, eval_args.embedder);
    add_extractor_options(eval_cmd, eval_args.extractor, false);

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate across a tau grid");
    sweep_cmd->add_option("--gt", sweep_args.base.gt_path, "Ground-truth corpus JSON")->required();
    sweep_cmd->add_option("--pred", sweep_args.base.pred_path, "Predictions JSON")->required();
    sweep_cmd->add_option("--grid-min", sweep_args.grid.min, "Lowest tau");
    sweep_cmd->add_option("--grid-max", sweep_args.grid.max, "Highest tau");
    sweep_cmd->add_option("--grid-step", sweep_args.grid.step, "Grid step");
    sweep_cmd->add_option("--out", sweep_args.base.out_path, "Output table path")->required();
    sweep_cmd->add_option("--parallelism", sweep_args.base.parallelism, "Worker threads");
    add_embedder_options(sweep_cmd, sweep_args.base.embedder);
    add_extractor_options(sweep_cmd, sweep_args.base.extractor, false);

    ExtractArgs extract_args;
    auto* extract_cmd = app.add_subcommand("extract", "Extract RoIs from report text");
    add_extractor_options(extract_cmd, extract_args.extractor, true);
    extract_cmd->add_option("--in", extract_args.in_path, "Input reports JSON")->required();
    extract_cmd->add_option("--out", extract_args.out_path, "Output JSON")->required();

    std::string parse_gt_in;
    auto* parse_cmd = app.add_subcommand("parse-gt", "Validate a ground-truth corpus file");
    parse_cmd->add_option("--in", parse_gt_in, "Ground-truth corpus JSON")->required();

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Compute physical-region slice ranges");
    split_cmd->add_option("--slices", split_args.slices, "Total axial slices")->required();
    split_cmd->add_option("--overlap", split_args.config.overlap_slices, "Overlap slices");
    split_cmd->add_option("--head-frac", split_args.config.head_fraction, "Head-neck fraction");
    split_cmd->add_option("--chest-end-frac", split_args.config.chest_end_fraction,
                          "Chest end fraction");

    GraphArgs graph_args;
    auto* graph_cmd = app.add_subcommand("graph", "Build the RoI relational graph");
    graph_cmd->add_option("--nodes", graph_args.nodes_path, "Node-list JSON")->required();
    graph_cmd->add_option("--tau-d", graph_args.config.tau_d, "Distance threshold")->required();
    graph_cmd->add_option("--tau-s", graph_args.config.tau_s, "Similarity threshold")->required();
    graph_cmd->add_option("--out", graph_args.out_path, "Output graph JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(eval_cmd)) return cmd_evaluate(eval_args);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep_args);
        if (app.got_subcommand(extract_cmd)) return cmd_extract(extract_args);
        if (app.got_subcommand(parse_cmd)) return cmd_parse_gt(parse_gt_in);
        if (app.got_subcommand(split_cmd)) return cmd_split(split_args);
        if (app.got_subcommand(graph_cmd)) return cmd_graph(graph_args);
    } catch (const roieval::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const roieval::TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const roieval::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
