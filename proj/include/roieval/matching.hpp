// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Pairs predicted RoIs with ground-truth RoIs: per-field embedding cosines,
// a maximum-similarity one-to-one assignment (Hungarian, cubic time), and
// threshold gating into TP/FP/FN counts.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roieval/corpus.hpp"
#include "roieval/embedding.hpp"
#include "roieval/errors.hpp"
#include "roieval/extraction.hpp"

namespace roieval {

inline constexpr double kDefaultTau = 0.70;

/// Clamped per-field cosines for one (pred, gt) pair.
///
/// s_region / s_lesion are always present (0 when either side is empty).
/// The three descriptor similarities are keyed on the ground truth: absent
/// when the ground-truth descriptor is empty, otherwise 0 when only the
/// prediction is empty. This is exactly the masking the quality index needs,
/// so those scores are computed once here and never recomputed downstream.
struct AttributeSimilarities {
    double s_region = 0.0;
    double s_lesion = 0.0;
    std::optional<double> s_density;
    std::optional<double> s_morphology;
    std::optional<double> s_uptake;
};

namespace detail {

// max(0, cos) over one field; nullopt when either side is empty.
inline std::optional<double> field_cosine(std::string_view pred_text, std::string_view gt_text,
                                          Embedder& embedder) {
    if (trim(pred_text).empty() || trim(gt_text).empty()) return std::nullopt;
    const double c = cosine(embedder.embed(pred_text), embedder.embed(gt_text));
    return std::max(0.0, c);
}

}  // namespace detail

/// Everything matching and quality scoring need to know about one pair.
struct PairSimilarity {
    double score = 0.0;  // mean over mutually non-empty fields, 0 if none comparable
    AttributeSimilarities attributes;
};

inline PairSimilarity pair_field_similarities(const ExtractedRoI& p, const GroundTruthRoI& g,
                                              Embedder& embedder) {
    const std::optional<double> region =
        detail::field_cosine(p.anatomic_region, g.anatomic_region, embedder);
    const std::optional<double> lesion = detail::field_cosine(p.lesion_type, g.lesion_type, embedder);
    const std::optional<double> density = detail::field_cosine(p.density, g.density, embedder);
    const std::optional<double> morphology =
        detail::field_cosine(p.morphology, g.morphology, embedder);
    const std::optional<double> uptake = detail::field_cosine(p.fdg_uptake, g.fdg_uptake, embedder);

    PairSimilarity out;
    double sum = 0.0;
    int comparable = 0;
    for (const auto& sim : {region, lesion, density, morphology, uptake}) {
        if (sim) {
            sum += *sim;
            ++comparable;
        }
    }
    out.score = comparable == 0 ? 0.0 : sum / comparable;

    out.attributes.s_region = region.value_or(0.0);
    out.attributes.s_lesion = lesion.value_or(0.0);
    auto descriptor = [](const std::optional<double>& sim, std::string_view gt_text) {
        std::optional<double> v;
        if (!trim(gt_text).empty()) v = sim.value_or(0.0);
        return v;
    };
    out.attributes.s_density = descriptor(density, g.density);
    out.attributes.s_morphology = descriptor(morphology, g.morphology);
    out.attributes.s_uptake = descriptor(uptake, g.fdg_uptake);
    return out;
}

inline double pair_similarity(const ExtractedRoI& p, const GroundTruthRoI& g, Embedder& embedder) {
    return pair_field_similarities(p, g, embedder).score;
}

/// |P| x |G| grid of pair similarities, row-major over predictions.
struct SimilarityMatrix {
    std::size_t pred_count = 0;
    std::size_t gt_count = 0;
    std::vector<PairSimilarity> cells;  // pred_count * gt_count entries

    const PairSimilarity& at(std::size_t pred, std::size_t gt) const {
        return cells[pred * gt_count + gt];
    }
    double score_at(std::size_t pred, std::size_t gt) const { return at(pred, gt).score; }
};

inline SimilarityMatrix build_similarity_matrix(const std::vector<ExtractedRoI>& preds,
                                                const std::vector<GroundTruthRoI>& gts,
                                                Embedder& embedder) {
    SimilarityMatrix m;
    m.pred_count = preds.size();
    m.gt_count = gts.size();
    m.cells.reserve(preds.size() * gts.size());
    for (const auto& p : preds) {
        for (const auto& g : gts) {
            m.cells.push_back(pair_field_similarities(p, g, embedder));
        }
    }
    return m;
}

struct AssignedPair {
    std::size_t pred = 0;
    std::size_t gt = 0;
    double score = 0.0;
};

namespace detail {

inline constexpr double kSentinelScore = -1.0;

// Hungarian algorithm with potentials (shortest augmenting paths) on a
// square cost matrix; minimizes. Returns row -> column.
inline std::vector<int> solve_min_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
    }
    return row_to_col;
}

// Canonicalizes an optimal assignment: among equal-total 2-swaps, prefer
// the one whose list of real (pred, gt) pairs is lexicographically smaller.
inline void canonicalize_assignment(const std::vector<std::vector<double>>& score, std::size_t rows,
                                    std::size_t cols, std::vector<int>& col_of) {
    const std::size_t n = col_of.size();
    auto real_pairs = [&] {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i < rows && i < n; ++i) {
            if (col_of[i] >= 0 && static_cast<std::size_t>(col_of[i]) < cols) {
                pairs.emplace_back(i, static_cast<std::size_t>(col_of[i]));
            }
        }
        return pairs;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i1 = 0; i1 < n; ++i1) {
            for (std::size_t i2 = i1 + 1; i2 < n; ++i2) {
                const int j1 = col_of[i1], j2 = col_of[i2];
                if (j1 < 0 || j2 < 0) continue;
                const double kept = score[i1][j1] + score[i2][j2];
                const double swapped = score[i1][j2] + score[i2][j1];
                if (std::abs(kept - swapped) > 1e-12) continue;
                const auto before = real_pairs();
                std::swap(col_of[i1], col_of[i2]);
                if (real_pairs() < before) {
                    changed = true;
                } else {
                    std::swap(col_of[i1], col_of[i2]);
                }
            }
        }
    }
}

}  // namespace detail

/// Maximum-total-score one-to-one assignment. Rectangular inputs are padded
/// to square with a sentinel score of -1; sentinel pairs are discarded, so
/// exactly min(|P|, |G|) pairs come back (none when either side is empty).
/// Ties prefer lexicographically smaller (pred, gt) index pairs.
inline std::vector<AssignedPair> hungarian_assign(const std::vector<std::vector<double>>& scores,
                                                  std::size_t pred_count, std::size_t gt_count) {
    if (pred_count == 0 || gt_count == 0) return {};
    const std::size_t n = std::max(pred_count, gt_count);
    std::vector<std::vector<double>> padded(n, std::vector<double>(n, detail::kSentinelScore));
    for (std::size_t i = 0; i < pred_count; ++i) {
        for (std::size_t j = 0; j < gt_count; ++j) {
            padded[i][j] = scores[i][j];
        }
    }
    std::vector<std::vector<double>> cost(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i][j] = -padded[i][j];
    }
    std::vector<int> col_of = detail::solve_min_assignment(cost);
    detail::canonicalize_assignment(padded, pred_count, gt_count, col_of);

    std::vector<AssignedPair> pairs;
    for (std::size_t i = 0; i < pred_count; ++i) {
        const int j = col_of[i];
        if (j >= 0 && static_cast<std::size_t>(j) < gt_count) {
            pairs.push_back({i, static_cast<std::size_t>(j), scores[i][j]});
        }
    }
    return pairs;
}

inline std::vector<AssignedPair> hungarian_assign(const SimilarityMatrix& matrix) {
    std::vector<std::vector<double>> scores(matrix.pred_count,
                                            std::vector<double>(matrix.gt_count, 0.0));
    for (std::size_t i = 0; i < matrix.pred_count; ++i) {
        for (std::size_t j = 0; j < matrix.gt_count; ++j) scores[i][j] = matrix.score_at(i, j);
    }
    return hungarian_assign(scores, matrix.pred_count, matrix.gt_count);
}

/// Assignment pairs that cleared tau, plus the derived counts.
struct MatchResult {
    std::vector<AssignedPair> pairs;
    double tau = kDefaultTau;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Keeps assigned pairs with score >= tau (at-threshold inclusive) and
/// counts TP = |pairs|, FP = |P| - TP, FN = |G| - TP.
inline MatchResult match_with_threshold(const std::vector<AssignedPair>& assignment,
                                        std::size_t pred_count, std::size_t gt_count, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw ValidationError("tau must lie in [0, 1]");
    }
    MatchResult result;
    result.tau = tau;
    for (const auto& pair : assignment) {
        if (pair.score >= tau) result.pairs.push_back(pair);
    }
    result.tp = result.pairs.size();
    result.fp = pred_count - result.tp;
    result.fn = gt_count - result.tp;
    return result;
}

/// Threshold grid for sweeps; values are min, min+step, ... up to max.
struct SweepGrid {
    double min = 0.50;
    double max = 0.95;
    double step = 0.05;

    void validate() const {
        if (step <= 0.0) throw ValidationError("sweep grid step must be positive");
        if (min > max) throw ValidationError("sweep grid min exceeds max");
        if (min < 0.0 || max > 1.0) throw ValidationError("sweep grid bounds must lie in [0, 1]");
    }

    std::vector<double> values() const {
        validate();
        const auto count = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
        std::vector<double> taus;
        taus.reserve(count);
        for (std::size_t k = 0; k < count; ++k) taus.push_back(min + static_cast<double>(k) * step);
        return taus;
    }
};

}  // namespace roieval
