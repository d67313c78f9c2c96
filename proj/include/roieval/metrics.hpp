// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scoring: RoI coverage (precision/recall/F1), the RoI quality index over
// matched pairs, n-gram text metrics (BLEU-4, ROUGE-1, ROUGE-L), a greedy
// embedding-based text score, and corpus aggregation.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roieval/embedding.hpp"
#include "roieval/errors.hpp"
#include "roieval/matching.hpp"
#include "roieval/text.hpp"

namespace roieval {

struct CoverageMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// P/R/F1 from raw counts. A report with neither predictions nor ground
/// truths is vacuously perfect (all 1.0); otherwise missing denominators
/// score 0.
inline CoverageMetrics coverage_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    CoverageMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.fn = fn;
    if (tp + fp + fn == 0) {
        m.precision = m.recall = m.f1 = 1.0;
        return m;
    }
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = m.precision + m.recall == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

inline CoverageMetrics coverage(const MatchResult& match) {
    return coverage_from_counts(match.tp, match.fp, match.fn);
}

/// Quality index of one matched pair: the geometric mean of the two core
/// attribute similarities, scaled by the mean of whichever descriptor
/// similarities are present (factor 1 when none are).
inline double roiq(const AttributeSimilarities& sims) {
    const double core = std::sqrt(sims.s_region * sims.s_lesion);
    double sum = 0.0;
    int present = 0;
    for (const auto& s : {sims.s_density, sims.s_morphology, sims.s_uptake}) {
        if (s) {
            sum += *s;
            ++present;
        }
    }
    return present == 0 ? core : core * (sum / present);
}

// ---------------------------------------------------------------------------
// Text metrics. All share tokenize(): NFC, lowercase, word-character runs.

namespace detail {

inline std::map<std::string, std::uint64_t> ngram_counts(const std::vector<std::string>& tokens,
                                                         std::size_t n) {
    std::map<std::string, std::uint64_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (std::size_t k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace detail

/// Corpus-style BLEU-4 state: clipped n-gram matches and totals for
/// n = 1..4 plus the length totals for the brevity penalty. Feed every
/// candidate/reference pair, then read score() once.
class BleuAccumulator {
  public:
    void add(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
        candidate_length_ += candidate.size();
        reference_length_ += reference.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto cand = detail::ngram_counts(candidate, n);
            const auto ref = detail::ngram_counts(reference, n);
            for (const auto& [gram, count] : cand) {
                total_[n - 1] += count;
                auto it = ref.find(gram);
                if (it != ref.end()) matched_[n - 1] += std::min(count, it->second);
            }
        }
    }

    /// BLEU-4 in [0, 100]; 0 when any modified precision is 0 (no smoothing).
    double score() const {
        if (candidate_length_ == 0) return 0.0;
        double log_sum = 0.0;
        for (std::size_t n = 0; n < 4; ++n) {
            if (matched_[n] == 0 || total_[n] == 0) return 0.0;
            log_sum += 0.25 * std::log(static_cast<double>(matched_[n]) /
                                       static_cast<double>(total_[n]));
        }
        double brevity = 1.0;
        if (candidate_length_ < reference_length_) {
            brevity = std::exp(1.0 - static_cast<double>(reference_length_) /
                                         static_cast<double>(candidate_length_));
        }
        return 100.0 * brevity * std::exp(log_sum);
    }

  private:
    std::array<std::uint64_t, 4> matched_{};
    std::array<std::uint64_t, 4> total_{};
    std::uint64_t candidate_length_ = 0;
    std::uint64_t reference_length_ = 0;
};

inline double bleu4(std::string_view candidate, std::string_view reference) {
    BleuAccumulator acc;
    acc.add(tokenize(candidate), tokenize(reference));
    return acc.score();
}

struct RougeScores {
    double rouge1 = 0.0;
    double rougeL = 0.0;
};

namespace detail {

inline double f1_percentage(double overlap, std::size_t cand_len, std::size_t ref_len) {
    if (cand_len == 0 || ref_len == 0 || overlap == 0.0) return 0.0;
    const double p = overlap / static_cast<double>(cand_len);
    const double r = overlap / static_cast<double>(ref_len);
    return 100.0 * 2.0 * p * r / (p + r);
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

/// ROUGE-1 (clipped unigram F1) and ROUGE-L (LCS F1), both in [0, 100].
inline RougeScores rouge(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    RougeScores scores;
    if (cand.empty() || ref.empty()) return scores;

    const auto cand_counts = detail::ngram_counts(cand, 1);
    const auto ref_counts = detail::ngram_counts(ref, 1);
    std::uint64_t overlap = 0;
    for (const auto& [token, count] : cand_counts) {
        auto it = ref_counts.find(token);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    scores.rouge1 = detail::f1_percentage(static_cast<double>(overlap), cand.size(), ref.size());
    scores.rougeL = detail::f1_percentage(static_cast<double>(detail::lcs_length(cand, ref)),
                                          cand.size(), ref.size());
    return scores;
}

struct EmbedScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy token-embedding matching (no IDF weighting): precision is the
/// mean over candidate tokens of the best clamped cosine against any
/// reference token; recall is symmetric; all three in [0, 100].
inline EmbedScore embed_score(std::string_view candidate, std::string_view reference,
                              Embedder& embedder) {
    const auto cand = tokenize(candidate);
    const auto ref = tokenize(reference);
    if (cand.empty() || ref.empty()) {
        throw ValidationError("embed_score requires non-empty candidate and reference text");
    }
    std::vector<EmbeddingVector> cand_vecs, ref_vecs;
    cand_vecs.reserve(cand.size());
    ref_vecs.reserve(ref.size());
    for (const auto& t : cand) cand_vecs.push_back(embedder.embed(t));
    for (const auto& t : ref) ref_vecs.push_back(embedder.embed(t));

    auto greedy_mean = [](const std::vector<EmbeddingVector>& from,
                          const std::vector<EmbeddingVector>& to) {
        double sum = 0.0;
        for (const auto& u : from) {
            double best = 0.0;
            for (const auto& v : to) best = std::max(best, std::max(0.0, cosine(u, v)));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    EmbedScore score;
    score.precision = 100.0 * greedy_mean(cand_vecs, ref_vecs);
    score.recall = 100.0 * greedy_mean(ref_vecs, cand_vecs);
    score.f1 = score.precision + score.recall == 0.0
                   ? 0.0
                   : 2.0 * score.precision * score.recall / (score.precision + score.recall);
    return score;
}

// ---------------------------------------------------------------------------
// Corpus aggregation.

/// One matched pair as reported: assignment indices, aggregate similarity,
/// and the quality index computed from the matching-time field cosines.
struct MatchedPairReport {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double score = 0.0;
    double roiq = 0.0;
    AttributeSimilarities attributes;
};

struct PerReportResult {
    std::string report_id;
    CoverageMetrics coverage;
    std::vector<MatchedPairReport> pairs;
    double mean_roiq = 0.0;  // over this report's matched pairs; 0 when none
};

struct CorpusMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_roiq = 0.0;  // unweighted over all matched pairs in the corpus
    std::size_t matched_pair_count = 0;
};

/// Micro-aggregation: sum TP/FP/FN over reports, then compute P/R/F1 once;
/// mean RoIQ averages over matched pairs (unmatched RoIs affect counts
/// only). Empty input is an error.
inline CorpusMetrics aggregate_corpus(const std::vector<PerReportResult>& reports) {
    if (reports.empty()) throw ValidationError("cannot aggregate an empty corpus");
    CorpusMetrics corpus;
    double roiq_sum = 0.0;
    for (const auto& report : reports) {
        corpus.tp += report.coverage.tp;
        corpus.fp += report.coverage.fp;
        corpus.fn += report.coverage.fn;
        for (const auto& pair : report.pairs) {
            roiq_sum += pair.roiq;
            ++corpus.matched_pair_count;
        }
    }
    const CoverageMetrics c = coverage_from_counts(corpus.tp, corpus.fp, corpus.fn);
    corpus.precision = c.precision;
    corpus.recall = c.recall;
    corpus.f1 = c.f1;
    corpus.mean_roiq =
        corpus.matched_pair_count == 0 ? 0.0 : roiq_sum / static_cast<double>(corpus.matched_pair_count);
    return corpus;
}

// ---------------------------------------------------------------------------
// Threshold sweeps: assignments are solved once per report; each grid row
// just re-applies its tau.

/// Pre-threshold assignment for one report; pair_roiq and pair_attributes
/// are aligned index-for-index with `assignment`.
struct ReportAssignment {
    std::string report_id;
    std::size_t pred_count = 0;
    std::size_t gt_count = 0;
    std::vector<AssignedPair> assignment;
    std::vector<double> pair_roiq;
    std::vector<AttributeSimilarities> pair_attributes;
};

struct SweepRow {
    double tau = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mean_roiq = 0.0;
    std::size_t matched_pair_count = 0;
};

inline SweepRow sweep_row_at(const std::vector<ReportAssignment>& reports, double tau) {
    SweepRow row;
    row.tau = tau;
    double roiq_sum = 0.0;
    for (const auto& report : reports) {
        const MatchResult match =
            match_with_threshold(report.assignment, report.pred_count, report.gt_count, tau);
        row.tp += match.tp;
        row.fp += match.fp;
        row.fn += match.fn;
        for (std::size_t k = 0; k < report.assignment.size(); ++k) {
            if (report.assignment[k].score >= tau) {
                roiq_sum += report.pair_roiq[k];
                ++row.matched_pair_count;
            }
        }
    }
    const CoverageMetrics c = coverage_from_counts(row.tp, row.fp, row.fn);
    row.precision = c.precision;
    row.recall = c.recall;
    row.f1 = c.f1;
    row.mean_roiq =
        row.matched_pair_count == 0 ? 0.0 : roiq_sum / static_cast<double>(row.matched_pair_count);
    return row;
}

/// One row per grid value, ascending in tau.
inline std::vector<SweepRow> sweep_thresholds(const std::vector<ReportAssignment>& reports,
                                              const SweepGrid& grid) {
    std::vector<SweepRow> rows;
    for (const double tau : grid.values()) rows.push_back(sweep_row_at(reports, tau));
    return rows;
}

// ---------------------------------------------------------------------------
// Evaluation report: the full output of one evaluate run.

struct NlpMetrics {
    double bleu4 = 0.0;
    double bleu4_sentence_mean = 0.0;
    double rouge1 = 0.0;
    double rougeL = 0.0;
    EmbedScore embed;
    std::size_t scored_reports = 0;
};

struct RunInfo {
    double tau = kDefaultTau;
    std::string embedder;
    std::string extractor;  // empty when predictions came pre-extracted
    std::string predictions_source;  // "pre-extracted" or "extracted-from-text"
    std::string toolkit_version;
};

struct EvaluationReport {
    std::vector<PerReportResult> per_report;
    CorpusMetrics corpus;
    std::optional<NlpMetrics> nlp;  // absent when report texts were unavailable
    RunInfo config;
};

inline void to_json(nlohmann::json& j, const AttributeSimilarities& sims) {
    j = nlohmann::json{{"s_region", sims.s_region}, {"s_lesion", sims.s_lesion}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    put("s_density", sims.s_density);
    put("s_morphology", sims.s_morphology);
    put("s_uptake", sims.s_uptake);
}

inline void to_json(nlohmann::json& j, const CoverageMetrics& m) {
    j = nlohmann::json{{"tp", m.tp},
                       {"fp", m.fp},
                       {"fn", m.fn},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1}};
}

inline void to_json(nlohmann::json& j, const MatchedPairReport& p) {
    j = nlohmann::json{{"pred_index", p.pred_index},
                       {"gt_index", p.gt_index},
                       {"score", p.score},
                       {"roiq", p.roiq},
                       {"attributes", p.attributes}};
}

inline void to_json(nlohmann::json& j, const PerReportResult& r) {
    j = nlohmann::json{{"report_id", r.report_id},
                       {"coverage", r.coverage},
                       {"pairs", r.pairs},
                       {"mean_roiq", r.mean_roiq}};
}

inline void to_json(nlohmann::json& j, const CorpusMetrics& m) {
    j = nlohmann::json{{"tp", m.tp},
                       {"fp", m.fp},
                       {"fn", m.fn},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"mean_roiq", m.mean_roiq},
                       {"matched_pair_count", m.matched_pair_count}};
}

inline void to_json(nlohmann::json& j, const NlpMetrics& m) {
    j = nlohmann::json{{"bleu4", m.bleu4},
                       {"bleu4_sentence_mean", m.bleu4_sentence_mean},
                       {"rouge1", m.rouge1},
                       {"rougeL", m.rougeL},
                       {"embed_score", nlohmann::json{{"precision", m.embed.precision},
                                                      {"recall", m.embed.recall},
                                                      {"f1", m.embed.f1}}},
                       {"scored_reports", m.scored_reports}};
}

inline void to_json(nlohmann::json& j, const RunInfo& c) {
    j = nlohmann::json{{"tau", c.tau},
                       {"embedder", c.embedder},
                       {"extractor", c.extractor},
                       {"predictions_source", c.predictions_source},
                       {"toolkit_version", c.toolkit_version}};
}

inline void to_json(nlohmann::json& j, const EvaluationReport& r) {
    j = nlohmann::json{{"config", r.config}, {"corpus", r.corpus}, {"per_report", r.per_report}};
    j["nlp"] = r.nlp ? nlohmann::json(*r.nlp) : nlohmann::json(nullptr);
}

inline void to_json(nlohmann::json& j, const SweepRow& row) {
    j = nlohmann::json{{"tau", row.tau},
                       {"tp", row.tp},
                       {"fp", row.fp},
                       {"fn", row.fn},
                       {"precision", row.precision},
                       {"recall", row.recall},
                       {"f1", row.f1},
                       {"mean_roiq", row.mean_roiq},
                       {"matched_pair_count", row.matched_pair_count}};
}

namespace detail {

inline std::string two_decimals(double value) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << value;
    return out.str();
}

}  // namespace detail

/// Plain-text summary; percentages carry two decimals.
inline std::string render_text_summary(const EvaluationReport& report) {
    std::ostringstream out;
    const auto& c = report.corpus;
    out << "reports evaluated : " << report.per_report.size() << "\n";
    out << "tau               : " << detail::two_decimals(report.config.tau) << "\n";
    out << "embedder          : " << report.config.embedder << "\n";
    if (!report.config.extractor.empty()) {
        out << "extractor         : " << report.config.extractor << "\n";
    }
    out << "predictions       : " << report.config.predictions_source << "\n";
    out << "TP / FP / FN      : " << c.tp << " / " << c.fp << " / " << c.fn << "\n";
    out << "precision         : " << detail::two_decimals(100.0 * c.precision) << "\n";
    out << "recall            : " << detail::two_decimals(100.0 * c.recall) << "\n";
    out << "f1                : " << detail::two_decimals(100.0 * c.f1) << "\n";
    out << "mean RoIQ         : " << detail::two_decimals(100.0 * c.mean_roiq) << " ("
        << c.matched_pair_count << " matched pairs)\n";
    if (report.nlp) {
        out << "BLEU-4            : " << detail::two_decimals(report.nlp->bleu4) << "\n";
        out << "BLEU-4 (sentence) : " << detail::two_decimals(report.nlp->bleu4_sentence_mean)
            << "\n";
        out << "ROUGE-1           : " << detail::two_decimals(report.nlp->rouge1) << "\n";
        out << "ROUGE-L           : " << detail::two_decimals(report.nlp->rougeL) << "\n";
        out << "embed_score F1    : " << detail::two_decimals(report.nlp->embed.f1) << "\n";
    }
    return out.str();
}

inline std::string render_sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "  tau      TP      FP      FN   precision   recall       f1   meanRoIQ\n";
    for (const auto& row : rows) {
        out << std::setw(5) << detail::two_decimals(row.tau) << std::setw(8) << row.tp
            << std::setw(8) << row.fp << std::setw(8) << row.fn << std::setw(12)
            << detail::two_decimals(100.0 * row.precision) << std::setw(9)
            << detail::two_decimals(100.0 * row.recall) << std::setw(9)
            << detail::two_decimals(100.0 * row.f1) << std::setw(11)
            << detail::two_decimals(100.0 * row.mean_roiq) << "\n";
    }
    return out.str();
}

}  // namespace roieval
