// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth data model: the 11-field bracketed RoI annotation grammar,
// anatomical region splitting with a fixed overlap band, and corpus JSON I/O.
#pragma once

#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "roieval/detail/io.hpp"
#include "roieval/errors.hpp"
#include "roieval/text.hpp"

namespace roieval {

enum class PhysicalRegion : int {
    kHeadNeck = 1,
    kChest = 2,
    kAbdomenPelvis = 3,
};

inline PhysicalRegion physical_region_from_int(int value) {
    if (value < 1 || value > 3) {
        throw ValidationError("physical region must be 1, 2 or 3, got " + std::to_string(value));
    }
    return static_cast<PhysicalRegion>(value);
}

struct BoundingBox3D {
    double x_min = 0, y_min = 0, z_min = 0;
    double x_max = 0, y_max = 0, z_max = 0;

    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max) || !(z_min < z_max)) {
            throw ValidationError("bounding box mins must be strictly below maxes");
        }
        if (x_min < 0 || y_min < 0 || z_min < 0) {
            throw ValidationError("bounding box coordinates must be non-negative");
        }
    }
};

/// One annotated RoI. SUVmax keeps both the raw annotation text and, when
/// that text is a plain number, the parsed value; non-numeric SUVmax entries
/// (ranges, "Unclear") simply leave the decimal unset.
struct GroundTruthRoI {
    std::string anatomic_region;
    std::string lesion_type;
    std::string size;
    std::string suv_max_text;
    std::optional<double> suv_max;
    std::string density;
    std::string morphology;
    std::string fdg_uptake;
    std::vector<std::string> top3_diseases;      // at most 3, order-preserving
    std::vector<std::string> top3_examinations;  // at most 3, order-preserving
    PhysicalRegion physical_region = PhysicalRegion::kHeadNeck;
    std::string note;
    std::optional<BoundingBox3D> bbox;
};

struct ReportRecord {
    std::string report_id;
    PhysicalRegion physical_region = PhysicalRegion::kHeadNeck;
    std::string report_text;
    std::vector<GroundTruthRoI> rois;
};

namespace detail {

inline std::optional<double> parse_decimal(std::string_view text) {
    const std::string s{trim(text)};
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double value = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return value;
}

/// Splits on commas that sit outside any (), [] or {} nesting; items are
/// whitespace-normalized and empty items are dropped.
inline std::vector<std::string> split_list_field(std::string_view text) {
    std::vector<std::string> items;
    int depth = 0;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::string item = normalize_spaces(text.substr(start, end - start));
        if (!item.empty()) items.push_back(std::move(item));
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '(' || c == '[' || c == '{') {
            ++depth;
        } else if (c == ')' || c == ']' || c == '}') {
            if (depth > 0) --depth;
        } else if (c == ',' && depth == 0) {
            flush(i);
            start = i + 1;
        }
    }
    flush(text.size());
    return items;
}

}  // namespace detail

/// Parses one bracketed annotation line:
///
///   [Anatomic Region] - [Lesion Type] - [Size] - [SUVmax] - [Density] -
///   [Morphology] - [FDG Uptake] - [Top-3 Diagnoses] - [Top-3 Examinations] -
///   [Physical Region ID] - [Note]
///
/// Fields are mapped positionally; brackets may nest inside a field. Errors
/// carry the field index and byte offset of the failure.
inline GroundTruthRoI parse_annotation(std::string_view line) {
    std::vector<std::string> fields;
    std::vector<std::size_t> field_offsets;
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < line.size() && static_cast<unsigned char>(line[pos]) <= ' ') ++pos;
    };

    skip_ws();
    while (pos < line.size()) {
        if (line[pos] != '[') {
            throw ParseError("expected '[' to open field", fields.size(), pos);
        }
        const std::size_t open = pos;
        int depth = 0;
        std::size_t end = std::string_view::npos;
        for (std::size_t i = pos; i < line.size(); ++i) {
            if (line[i] == '[') {
                ++depth;
            } else if (line[i] == ']') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string_view::npos) {
            throw ParseError("unbalanced brackets", fields.size(), open);
        }
        field_offsets.push_back(open);
        fields.push_back(normalize_spaces(line.substr(open + 1, end - open - 1)));
        pos = end + 1;
        skip_ws();
        if (pos >= line.size()) break;
        if (line[pos] != '-') {
            throw ParseError("expected '-' separator between fields", fields.size(), pos);
        }
        ++pos;
        skip_ws();
        if (pos >= line.size()) {
            throw ParseError("dangling separator at end of line", fields.size(), pos);
        }
    }
    if (fields.size() != 11) {
        throw ParseError("expected 11 bracketed fields, got " + std::to_string(fields.size()),
                         fields.size(), pos);
    }

    GroundTruthRoI roi;
    roi.anatomic_region = fields[0];
    roi.lesion_type = fields[1];
    roi.size = fields[2];
    roi.suv_max_text = fields[3];
    roi.suv_max = detail::parse_decimal(fields[3]);
    roi.density = fields[4];
    roi.morphology = fields[5];
    roi.fdg_uptake = fields[6];
    roi.top3_diseases = detail::split_list_field(fields[7]);
    roi.top3_examinations = detail::split_list_field(fields[8]);
    if (roi.top3_diseases.size() > 3) {
        throw ParseError("top-3 diagnoses list has more than 3 items", 7, field_offsets[7]);
    }
    if (roi.top3_examinations.size() > 3) {
        throw ParseError("top-3 examinations list has more than 3 items", 8, field_offsets[8]);
    }
    int region = 0;
    const auto region_text = fields[9];
    auto [ptr, ec] =
        std::from_chars(region_text.data(), region_text.data() + region_text.size(), region);
    if (ec != std::errc{} || ptr != region_text.data() + region_text.size() || region < 1 ||
        region > 3) {
        throw ParseError("physical region must be 1, 2 or 3, got \"" + region_text + "\"", 9,
                         field_offsets[9]);
    }
    roi.physical_region = static_cast<PhysicalRegion>(region);
    roi.note = fields[10];
    return roi;
}

/// Canonical bracketed form: fields in " - "-separated brackets, list fields
/// comma-joined, internal whitespace collapsed to single spaces.
inline std::string serialize_annotation(const GroundTruthRoI& roi) {
    auto join = [](const std::vector<std::string>& items) {
        std::string out;
        for (const auto& item : items) {
            const std::string norm = normalize_spaces(item);
            if (norm.empty()) continue;
            if (!out.empty()) out += ", ";
            out += norm;
        }
        return out;
    };
    const std::string fields[11] = {
        normalize_spaces(roi.anatomic_region),
        normalize_spaces(roi.lesion_type),
        normalize_spaces(roi.size),
        normalize_spaces(roi.suv_max_text),
        normalize_spaces(roi.density),
        normalize_spaces(roi.morphology),
        normalize_spaces(roi.fdg_uptake),
        join(roi.top3_diseases),
        join(roi.top3_examinations),
        std::to_string(static_cast<int>(roi.physical_region)),
        normalize_spaces(roi.note),
    };
    std::string out;
    for (int i = 0; i < 11; ++i) {
        if (i > 0) out += " - ";
        out += '[';
        out += fields[i];
        out += ']';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Anatomical region splitting.

struct SliceRange {
    int begin = 0;  // inclusive
    int end = 0;    // exclusive

    int length() const { return end - begin; }
    bool contains(double z_min, double z_max) const { return z_min >= begin && z_max < end; }
};

struct SplitConfig {
    int overlap_slices = 15;
    double head_fraction = 0.25;
    double chest_end_fraction = 0.60;
};

struct RegionSplit {
    int total_slices = 0;
    SliceRange head_neck;
    SliceRange chest;
    SliceRange abdomen_pelvis;
    int overlap_slices = 15;
    double head_fraction = 0.25;
    double chest_end_fraction = 0.60;

    const SliceRange& range(PhysicalRegion region) const {
        switch (region) {
            case PhysicalRegion::kHeadNeck: return head_neck;
            case PhysicalRegion::kChest: return chest;
            default: return abdomen_pelvis;
        }
    }
};

/// Splits [0, total_slices) into head-neck / chest / abdomen-pelvis ranges.
/// Head-neck covers the first head_fraction of slices; each consecutive pair
/// of ranges overlaps in exactly overlap_slices slices. Boundaries round
/// down, so ranges never over-run the volume.
inline RegionSplit compute_region_ranges(int total_slices, const SplitConfig& config = {}) {
    if (config.overlap_slices < 0) {
        throw ValidationError("overlap must be non-negative");
    }
    if (total_slices < 4 * config.overlap_slices || total_slices <= 0) {
        throw ValidationError("too few slices: need at least " +
                              std::to_string(4 * config.overlap_slices) + ", got " +
                              std::to_string(total_slices));
    }
    if (!(config.head_fraction > 0.0) || !(config.head_fraction < config.chest_end_fraction) ||
        !(config.chest_end_fraction < 1.0)) {
        throw ValidationError("fractions must satisfy 0 < head < chest-end < 1");
    }
    const int head_end = static_cast<int>(config.head_fraction * total_slices);
    const int chest_end = static_cast<int>(config.chest_end_fraction * total_slices);
    if (head_end < config.overlap_slices) {
        throw ValidationError("head-neck range shorter than the overlap band");
    }
    if (chest_end - config.overlap_slices < head_end - config.overlap_slices + 1 ||
        chest_end <= head_end) {
        throw ValidationError("chest range collapses under this configuration");
    }

    RegionSplit split;
    split.total_slices = total_slices;
    split.overlap_slices = config.overlap_slices;
    split.head_fraction = config.head_fraction;
    split.chest_end_fraction = config.chest_end_fraction;
    split.head_neck = {0, head_end};
    split.chest = {head_end - config.overlap_slices, chest_end};
    split.abdomen_pelvis = {chest_end - config.overlap_slices, total_slices};
    return split;
}

/// Region whose slice range fully contains the box's z-extent; failing that,
/// the region with maximal z-overlap, ties toward the lower region index.
inline PhysicalRegion assign_roi_to_region(const BoundingBox3D& bbox, const RegionSplit& split) {
    bbox.validate();
    if (bbox.z_max < 0 || bbox.z_min >= split.total_slices) {
        throw ValidationError("bounding box z-extent lies outside [0, total_slices)");
    }
    const SliceRange* ranges[3] = {&split.head_neck, &split.chest, &split.abdomen_pelvis};
    for (int r = 0; r < 3; ++r) {
        if (ranges[r]->contains(bbox.z_min, bbox.z_max)) {
            return static_cast<PhysicalRegion>(r + 1);
        }
    }
    int best = 0;
    double best_overlap = -1.0;
    for (int r = 0; r < 3; ++r) {
        const double lo = std::max(bbox.z_min, static_cast<double>(ranges[r]->begin));
        const double hi = std::min(bbox.z_max, static_cast<double>(ranges[r]->end));
        const double overlap = hi - lo;
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = r;
        }
    }
    return static_cast<PhysicalRegion>(best + 1);
}

// ---------------------------------------------------------------------------
// Corpus JSON I/O.

inline void to_json(nlohmann::json& j, const BoundingBox3D& b) {
    j = nlohmann::json::array({b.x_min, b.y_min, b.z_min, b.x_max, b.y_max, b.z_max});
}

inline void from_json(const nlohmann::json& j, BoundingBox3D& b) {
    if (!j.is_array() || j.size() != 6) {
        throw ValidationError("bounding box must be an array of 6 numbers");
    }
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError("bounding box must be an array of 6 numbers");
    }
    b = BoundingBox3D{j[0], j[1], j[2], j[3], j[4], j[5]};
    b.validate();
}

inline void to_json(nlohmann::json& j, const GroundTruthRoI& roi) {
    j = nlohmann::json{
        {"anatomic_region", roi.anatomic_region},
        {"lesion_type", roi.lesion_type},
        {"size", roi.size},
        {"suv_max", roi.suv_max_text},
        {"density", roi.density},
        {"morphology", roi.morphology},
        {"fdg_uptake", roi.fdg_uptake},
        {"top3_diseases", roi.top3_diseases},
        {"top3_examinations", roi.top3_examinations},
        {"physical_region", static_cast<int>(roi.physical_region)},
        {"note", roi.note},
    };
    if (roi.suv_max) j["suv_max_value"] = *roi.suv_max;
    if (roi.bbox) j["bbox"] = *roi.bbox;
}

inline GroundTruthRoI gt_roi_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        return parse_annotation(j.get<std::string>());
    }
    if (!j.is_object()) {
        throw ValidationError("RoI must be a bracketed string or a structured object");
    }
    GroundTruthRoI roi;
    auto text_field = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return "";
        if (!it->is_string()) {
            throw ValidationError(std::string("RoI field \"") + key + "\" must be a string");
        }
        return normalize_spaces(it->get<std::string>());
    };
    roi.anatomic_region = text_field("anatomic_region");
    roi.lesion_type = text_field("lesion_type");
    roi.size = text_field("size");
    roi.density = text_field("density");
    roi.morphology = text_field("morphology");
    roi.fdg_uptake = text_field("fdg_uptake");
    roi.note = text_field("note");
    if (auto it = j.find("suv_max"); it != j.end() && !it->is_null()) {
        if (it->is_number()) {
            roi.suv_max = it->get<double>();
            roi.suv_max_text = nlohmann::json(*roi.suv_max).dump();
        } else if (it->is_string()) {
            roi.suv_max_text = normalize_spaces(it->get<std::string>());
            roi.suv_max = detail::parse_decimal(roi.suv_max_text);
        } else {
            throw ValidationError("RoI field \"suv_max\" must be a number or string");
        }
    }
    auto list_field = [&](const char* key) -> std::vector<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return {};
        if (!it->is_array()) {
            throw ValidationError(std::string("RoI field \"") + key + "\" must be an array");
        }
        std::vector<std::string> items;
        for (const auto& v : *it) {
            if (!v.is_string()) {
                throw ValidationError(std::string("RoI field \"") + key +
                                      "\" must contain strings");
            }
            std::string norm = normalize_spaces(v.get<std::string>());
            if (!norm.empty()) items.push_back(std::move(norm));
        }
        if (items.size() > 3) {
            throw ValidationError(std::string("RoI field \"") + key + "\" has more than 3 items");
        }
        return items;
    };
    roi.top3_diseases = list_field("top3_diseases");
    roi.top3_examinations = list_field("top3_examinations");
    if (auto it = j.find("physical_region"); it != j.end() && it->is_number_integer()) {
        roi.physical_region = physical_region_from_int(it->get<int>());
    } else {
        throw ValidationError("structured RoI requires integer \"physical_region\"");
    }
    if (auto it = j.find("bbox"); it != j.end() && !it->is_null()) {
        roi.bbox = it->get<BoundingBox3D>();
    }
    return roi;
}

/// Loads a ground-truth corpus: a JSON array of report records. Each record's
/// "rois" entries may be bracketed annotation strings or structured objects;
/// an optional "bboxes" array (parallel to "rois", null entries allowed)
/// attaches 3D boxes.
inline std::vector<ReportRecord> load_ground_truth(const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw ValidationError("ground-truth corpus must be a JSON array of report records");
    }
    std::vector<ReportRecord> corpus;
    corpus.reserve(doc.size());
    std::vector<std::string> seen_ids;
    for (std::size_t idx = 0; idx < doc.size(); ++idx) {
        const auto& rec = doc[idx];
        const std::string where = "report record " + std::to_string(idx);
        if (!rec.is_object()) throw ValidationError(where + ": expected an object");
        ReportRecord report;
        try {
            report.report_id = rec.at("report_id").get<std::string>();
            report.physical_region = physical_region_from_int(rec.at("physical_region").get<int>());
            report.report_text = rec.value("report_text", std::string{});
            const auto& rois = rec.at("rois");
            if (!rois.is_array()) throw ValidationError("\"rois\" must be an array");
            for (const auto& roi_json : rois) {
                report.rois.push_back(gt_roi_from_json(roi_json));
            }
            if (auto it = rec.find("bboxes"); it != rec.end() && !it->is_null()) {
                if (!it->is_array() || it->size() != report.rois.size()) {
                    throw ValidationError("\"bboxes\" must be an array parallel to \"rois\"");
                }
                for (std::size_t r = 0; r < report.rois.size(); ++r) {
                    if (!(*it)[r].is_null()) {
                        report.rois[r].bbox = (*it)[r].get<BoundingBox3D>();
                    }
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        for (const auto& id : seen_ids) {
            if (id == report.report_id) {
                throw ValidationError(where + ": duplicate report_id \"" + report.report_id +
                                      "\"");
            }
        }
        seen_ids.push_back(report.report_id);
        corpus.push_back(std::move(report));
    }
    return corpus;
}

inline std::vector<ReportRecord> load_ground_truth_file(const std::string& path) {
    return load_ground_truth(read_json_file(path));
}

}  // namespace roieval
