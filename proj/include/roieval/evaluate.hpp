// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// The evaluation pipeline: pairs a ground-truth corpus with a predictions
// file (pre-extracted records or raw report text), runs matching and
// scoring per report under a bounded worker pool, and aggregates into one
// reproducible EvaluationReport. Workers write into index-addressed slots,
// so any parallelism level yields the same output as a serial run.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roieval/corpus.hpp"
#include "roieval/embedding.hpp"
#include "roieval/errors.hpp"
#include "roieval/extraction.hpp"
#include "roieval/matching.hpp"
#include "roieval/metrics.hpp"
#include "roieval/version.hpp"

namespace roieval {

/// One entry of a predictions file: either pre-extracted RoIs, raw report
/// text for online extraction, or both (then the RoIs win and the text
/// still feeds the text metrics).
struct PredictionRecord {
    std::string report_id;
    std::string report_text;
    std::optional<std::vector<ExtractedRoI>> rois;
};

/// Predictions file: a JSON array of {"report_id", "report_text"?, "rois"?}.
inline std::vector<PredictionRecord> load_predictions(const nlohmann::json& doc) {
    if (!doc.is_array()) throw ValidationError("predictions file must be a JSON array");
    std::vector<PredictionRecord> records;
    std::set<std::string> seen;
    for (const auto& item : doc) {
        if (!item.is_object()) throw ValidationError("each prediction must be a JSON object");
        PredictionRecord record;
        auto id_it = item.find("report_id");
        if (id_it == item.end() || !id_it->is_string()) {
            throw ValidationError("prediction record needs a string \"report_id\"");
        }
        record.report_id = id_it->get<std::string>();
        if (!seen.insert(record.report_id).second) {
            throw ValidationError("duplicate prediction report_id \"" + record.report_id + "\"");
        }
        if (auto it = item.find("report_text"); it != item.end()) {
            if (!it->is_string()) throw ValidationError("\"report_text\" must be a string");
            record.report_text = it->get<std::string>();
        }
        if (auto it = item.find("rois"); it != item.end()) {
            if (!it->is_array()) throw ValidationError("\"rois\" must be an array");
            std::vector<ExtractedRoI> rois;
            for (const auto& roi : *it) rois.push_back(validate_extracted(roi));
            record.rois = std::move(rois);
        }
        for (const auto& [key, value] : item.items()) {
            (void)value;
            if (key != "report_id" && key != "report_text" && key != "rois") {
                throw ValidationError("prediction record carries unknown key \"" + key + "\"");
            }
        }
        records.push_back(std::move(record));
    }
    return records;
}

inline std::vector<PredictionRecord> load_predictions_file(const std::string& path) {
    return load_predictions(read_json_file(path));
}

struct EvaluateOptions {
    double tau = kDefaultTau;
    EmbedderConfig embedder;
    std::optional<ExtractorConfig> extractor;  // required when any record lacks "rois"
    std::size_t parallelism = 1;
    // When set, used instead of make_embedder(embedder); lets callers supply
    // a custom or pre-warmed backend.
    std::shared_ptr<Embedder> embedder_override;
};

struct PipelineResult {
    EvaluationReport report;
    // Pre-threshold assignments (one per report, corpus order) so sweeps
    // re-threshold without re-solving.
    std::vector<ReportAssignment> assignments;
};

namespace detail {

// Strict pairing: prediction ids and ground-truth ids must coincide as sets.
inline std::vector<const PredictionRecord*> align_predictions(
    const std::vector<ReportRecord>& ground_truth, const std::vector<PredictionRecord>& predictions) {
    std::map<std::string, const PredictionRecord*> by_id;
    for (const auto& p : predictions) by_id.emplace(p.report_id, &p);
    std::vector<const PredictionRecord*> aligned;
    aligned.reserve(ground_truth.size());
    for (const auto& gt : ground_truth) {
        auto it = by_id.find(gt.report_id);
        if (it == by_id.end()) {
            throw ValidationError("no prediction for report \"" + gt.report_id + "\"");
        }
        aligned.push_back(it->second);
        by_id.erase(it);
    }
    if (!by_id.empty()) {
        throw ValidationError("prediction for unknown report \"" + by_id.begin()->first + "\"");
    }
    return aligned;
}

struct ReportSlot {
    PerReportResult result;
    ReportAssignment assignment;
};

}  // namespace detail

/// Runs matching + scoring for every report and aggregates. `ground_truth`
/// order defines output order; predictions are looked up by report_id and
/// must cover exactly the same ids.
inline PipelineResult run_pipeline(const std::vector<ReportRecord>& ground_truth,
                                   const std::vector<PredictionRecord>& predictions,
                                   const EvaluateOptions& options) {
    if (ground_truth.empty()) throw ValidationError("ground-truth corpus is empty");
    if (!(options.tau >= 0.0 && options.tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
    const auto aligned = detail::align_predictions(ground_truth, predictions);

    const bool all_have_rois = std::all_of(predictions.begin(), predictions.end(),
                                           [](const PredictionRecord& p) { return p.rois.has_value(); });
    if (!all_have_rois) {
        const bool any_rois = std::any_of(predictions.begin(), predictions.end(),
                                          [](const PredictionRecord& p) { return p.rois.has_value(); });
        if (any_rois) {
            throw ValidationError(
                "predictions mix pre-extracted and raw-text records; supply one kind");
        }
        if (!options.extractor) {
            throw ValidationError("raw-text predictions require an extractor configuration");
        }
        options.extractor->validate();
    }

    std::shared_ptr<Embedder> embedder =
        options.embedder_override ? options.embedder_override : make_embedder(options.embedder);
    // Extraction backends are constructed once and shared; both are
    // stateless per call.
    std::optional<RulesExtractor> rules;
    std::optional<RemoteLlmExtractor> remote;
    if (!all_have_rois) {
        if (options.extractor->backend == ExtractorConfig::Backend::kRules) {
            rules.emplace(load_lexicon_file(options.extractor->lexicon_path));
        } else {
            remote.emplace(*options.extractor);
        }
    }

    std::vector<detail::ReportSlot> slots(ground_truth.size());
    std::vector<std::exception_ptr> failures(ground_truth.size());
    std::atomic<std::size_t> next{0};

    auto process_report = [&](std::size_t index) {
        const ReportRecord& gt = ground_truth[index];
        const PredictionRecord& pred = *aligned[index];
        std::vector<ExtractedRoI> rois;
        if (pred.rois) {
            rois = *pred.rois;
        } else if (trim(pred.report_text).empty()) {
            // no text, no findings
        } else if (rules) {
            rois = rules->extract(pred.report_text);
        } else {
            rois = remote->extract(pred.report_text);
        }

        const SimilarityMatrix matrix = build_similarity_matrix(rois, gt.rois, *embedder);
        detail::ReportSlot& slot = slots[index];
        slot.assignment.report_id = gt.report_id;
        slot.assignment.pred_count = rois.size();
        slot.assignment.gt_count = gt.rois.size();
        slot.assignment.assignment = hungarian_assign(matrix);
        for (const auto& pair : slot.assignment.assignment) {
            const AttributeSimilarities& attrs = matrix.at(pair.pred, pair.gt).attributes;
            slot.assignment.pair_attributes.push_back(attrs);
            slot.assignment.pair_roiq.push_back(roiq(attrs));
        }

        const MatchResult match =
            match_with_threshold(slot.assignment.assignment, rois.size(), gt.rois.size(), options.tau);
        slot.result.report_id = gt.report_id;
        slot.result.coverage = coverage(match);
        double roiq_sum = 0.0;
        for (std::size_t k = 0; k < slot.assignment.assignment.size(); ++k) {
            const AssignedPair& pair = slot.assignment.assignment[k];
            if (pair.score < options.tau) continue;
            slot.result.pairs.push_back({pair.pred, pair.gt, pair.score,
                                         slot.assignment.pair_roiq[k],
                                         slot.assignment.pair_attributes[k]});
            roiq_sum += slot.assignment.pair_roiq[k];
        }
        slot.result.mean_roiq = slot.result.pairs.empty()
                                    ? 0.0
                                    : roiq_sum / static_cast<double>(slot.result.pairs.size());
    };

    const std::size_t workers =
        std::max<std::size_t>(1, std::min(options.parallelism, ground_truth.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < ground_truth.size(); ++i) process_report(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < slots.size(); i = next.fetch_add(1)) {
                    try {
                        process_report(i);
                    } catch (...) {
                        failures[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    PipelineResult out;
    out.report.per_report.reserve(slots.size());
    out.assignments.reserve(slots.size());
    for (auto& slot : slots) {
        out.report.per_report.push_back(std::move(slot.result));
        out.assignments.push_back(std::move(slot.assignment));
    }
    out.report.corpus = aggregate_corpus(out.report.per_report);

    // Text metrics over reports where both sides carry text.
    BleuAccumulator corpus_bleu;
    double bleu_sum = 0.0, rouge1_sum = 0.0, rougeL_sum = 0.0;
    double embed_p_sum = 0.0, embed_r_sum = 0.0, embed_f_sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t i = 0; i < ground_truth.size(); ++i) {
        const std::string& candidate = aligned[i]->report_text;
        const std::string& reference = ground_truth[i].report_text;
        if (tokenize(candidate).empty() || tokenize(reference).empty()) continue;
        corpus_bleu.add(tokenize(candidate), tokenize(reference));
        bleu_sum += bleu4(candidate, reference);
        const RougeScores r = rouge(candidate, reference);
        rouge1_sum += r.rouge1;
        rougeL_sum += r.rougeL;
        const EmbedScore e = embed_score(candidate, reference, *embedder);
        embed_p_sum += e.precision;
        embed_r_sum += e.recall;
        embed_f_sum += e.f1;
        ++scored;
    }
    if (scored > 0) {
        NlpMetrics nlp;
        const auto n = static_cast<double>(scored);
        nlp.bleu4 = corpus_bleu.score();
        nlp.bleu4_sentence_mean = bleu_sum / n;
        nlp.rouge1 = rouge1_sum / n;
        nlp.rougeL = rougeL_sum / n;
        nlp.embed = {embed_p_sum / n, embed_r_sum / n, embed_f_sum / n};
        nlp.scored_reports = scored;
        out.report.nlp = nlp;
    }

    out.report.config.tau = options.tau;
    out.report.config.embedder = embedder->descriptor();
    out.report.config.extractor =
        all_have_rois || !options.extractor ? "" : extractor_descriptor(*options.extractor);
    out.report.config.predictions_source = all_have_rois ? "pre-extracted" : "extracted-from-text";
    out.report.config.toolkit_version = kVersion;
    return out;
}

/// Sweep output with the same config block as an evaluation report.
inline nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows, const SweepGrid& grid,
                                    const RunInfo& config) {
    nlohmann::json doc;
    doc["config"] = config;
    doc["config"]["grid"] = {{"min", grid.min}, {"max", grid.max}, {"step", grid.step}};
    doc["rows"] = rows;
    return doc;
}

}  // namespace roieval
