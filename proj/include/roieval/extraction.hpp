// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Turns free-text reports into structured RoI records. Two backends share
// one contract: a remote LLM extraction service, and a deterministic
// rule-based extractor (sentence segmentation + lexicon lookup) that serves
// as the offline oracle in tests.
#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "roieval/detail/http.hpp"
#include "roieval/detail/io.hpp"
#include "roieval/errors.hpp"
#include "roieval/text.hpp"

namespace roieval {

/// One extracted finding. Attribute fields may be empty; absent and empty
/// are the same thing downstream.
struct ExtractedRoI {
    std::string extraction_text;  // verbatim source sentence
    std::string anatomic_region;
    std::string lesion_type;
    std::string density;
    std::string morphology;
    std::string fdg_uptake;
};

inline constexpr const char* kExtractionFields[5] = {
    "anatomic_region", "lesion_type", "density", "morphology", "fdg_uptake",
};

struct ExtractorConfig {
    enum class Backend { kRemoteLlm, kRules };

    Backend backend = Backend::kRules;
    std::string endpoint;
    std::string model_name;
    std::string prompt_template =
        "Extract every region-of-interest finding from the report as JSON objects "
        "with keys extraction_text, anatomic_region, lesion_type, density, "
        "morphology, fdg_uptake.";
    int max_retries = 2;
    std::chrono::milliseconds timeout{30000};
    std::string lexicon_path;

    void validate() const {
        if (backend == Backend::kRemoteLlm) {
            if (endpoint.empty()) throw ValidationError("remote extractor requires an endpoint");
            if (model_name.empty()) {
                throw ValidationError("remote extractor requires a model name");
            }
        } else if (lexicon_path.empty()) {
            throw ValidationError("rules extractor requires a lexicon file");
        }
        if (max_retries < 0) throw ValidationError("max_retries must be non-negative");
    }
};

/// Strict schema check for one raw extraction object: exactly the six known
/// keys are allowed, extraction_text is mandatory, values must be strings.
/// Absent attribute fields become empty strings; nothing is repaired.
inline ExtractedRoI validate_extracted(const nlohmann::json& record) {
    if (!record.is_object()) {
        throw ValidationError("extracted RoI must be a JSON object");
    }
    for (const auto& [key, value] : record.items()) {
        const bool known = key == "extraction_text" ||
                           std::any_of(std::begin(kExtractionFields), std::end(kExtractionFields),
                                       [&](const char* f) { return key == f; });
        if (!known) {
            throw ValidationError("extracted RoI carries unknown key \"" + key + "\"");
        }
        if (!value.is_string()) {
            throw ValidationError("extracted RoI field \"" + key + "\" must be a string");
        }
    }
    auto text_it = record.find("extraction_text");
    if (text_it == record.end()) {
        throw ValidationError("extracted RoI is missing \"extraction_text\"");
    }
    ExtractedRoI roi;
    roi.extraction_text = text_it->get<std::string>();
    auto field = [&](const char* key) -> std::string {
        auto it = record.find(key);
        return it == record.end() ? std::string{} : std::string(trim(it->get<std::string>()));
    };
    roi.anatomic_region = field("anatomic_region");
    roi.lesion_type = field("lesion_type");
    roi.density = field("density");
    roi.morphology = field("morphology");
    roi.fdg_uptake = field("fdg_uptake");
    return roi;
}

inline nlohmann::json extracted_to_json(const ExtractedRoI& roi) {
    return nlohmann::json{
        {"extraction_text", roi.extraction_text}, {"anatomic_region", roi.anatomic_region},
        {"lesion_type", roi.lesion_type},         {"density", roi.density},
        {"morphology", roi.morphology},           {"fdg_uptake", roi.fdg_uptake},
    };
}

/// Maps a lexicon surface form to the extraction field it fills.
struct LexiconEntry {
    std::string surface;
    std::string field;  // one of kExtractionFields
};

using Lexicon = std::vector<LexiconEntry>;

/// Lexicon file format: a JSON object mapping surface form -> field name.
inline Lexicon parse_lexicon(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ValidationError("lexicon must be a JSON object mapping surface form to field");
    }
    Lexicon lexicon;
    for (const auto& [surface, field] : doc.items()) {
        if (!field.is_string()) {
            throw ValidationError("lexicon entry \"" + surface + "\" must map to a field name");
        }
        const std::string name = field.get<std::string>();
        const bool known = std::any_of(std::begin(kExtractionFields), std::end(kExtractionFields),
                                       [&](const char* f) { return name == f; });
        if (!known) {
            throw ValidationError("lexicon entry \"" + surface + "\" maps to unknown field \"" +
                                  name + "\"");
        }
        if (trim(surface).empty()) throw ValidationError("lexicon contains an empty surface form");
        lexicon.push_back({surface, name});
    }
    if (lexicon.empty()) throw ValidationError("empty lexicon");
    return lexicon;
}

namespace detail {

struct Sentence {
    std::size_t offset;  // byte offset into the source report
    std::size_t length;
};

/// Sentences end at newlines, or at '.', '!', '?' when followed by
/// whitespace or end-of-text (so decimal points never split a sentence).
inline std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> sentences;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        std::string_view raw = text.substr(start, end - start);
        const std::string_view trimmed = trim(raw);
        if (!trimmed.empty()) {
            sentences.push_back({start + static_cast<std::size_t>(trimmed.data() - raw.data()),
                                 trimmed.size()});
        }
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            flush(i + 1);
        } else if (c == '.' || c == '!' || c == '?') {
            const bool at_end = i + 1 == text.size();
            if (at_end || static_cast<unsigned char>(text[i + 1]) <= ' ') {
                flush(i + 1);
            }
        }
    }
    flush(text.size());
    return sentences;
}

}  // namespace detail

/// Deterministic extractor: per sentence, each field takes the longest
/// lexicon surface found in the sentence (case-insensitive, NFC-folded,
/// word-boundary aligned); ties prefer the lexicographically smaller
/// surface. A sentence yields a record only if some field matched.
class RulesExtractor {
  public:
    explicit RulesExtractor(Lexicon lexicon) {
        if (lexicon.empty()) throw ValidationError("empty lexicon");
        for (auto& entry : lexicon) {
            entries_.push_back({fold_codepoints(entry.surface), std::move(entry.surface),
                                std::move(entry.field)});
        }
        // longest first, then lexicographic, so the first hit per field wins
        std::sort(entries_.begin(), entries_.end(), [](const Compiled& a, const Compiled& b) {
            if (a.folded.size() != b.folded.size()) return a.folded.size() > b.folded.size();
            return a.surface < b.surface;
        });
    }

    std::vector<ExtractedRoI> extract(std::string_view report_text) const {
        std::vector<ExtractedRoI> out;
        for (const auto& sentence : detail::split_sentences(report_text)) {
            const std::string_view raw = report_text.substr(sentence.offset, sentence.length);
            const std::u32string folded = fold_codepoints(raw);
            ExtractedRoI roi;
            roi.extraction_text = std::string(raw);
            bool any = false;
            for (const char* field : kExtractionFields) {
                for (const auto& entry : entries_) {
                    if (entry.field != field) continue;
                    if (contains_at_word_boundary(folded, entry.folded)) {
                        field_ref(roi, field) = entry.surface;
                        any = true;
                        break;
                    }
                }
            }
            if (any) out.push_back(std::move(roi));
        }
        return out;
    }

  private:
    struct Compiled {
        std::u32string folded;
        std::string surface;
        std::string field;
    };

    static std::string& field_ref(ExtractedRoI& roi, std::string_view field) {
        if (field == "anatomic_region") return roi.anatomic_region;
        if (field == "lesion_type") return roi.lesion_type;
        if (field == "density") return roi.density;
        if (field == "morphology") return roi.morphology;
        return roi.fdg_uptake;
    }

    static bool contains_at_word_boundary(const std::u32string& haystack,
                                          const std::u32string& needle) {
        if (needle.empty() || needle.size() > haystack.size()) return false;
        for (std::size_t pos = 0;; ++pos) {
            pos = haystack.find(needle, pos);
            if (pos == std::u32string::npos) return false;
            const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
            const std::size_t end = pos + needle.size();
            const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
            if (left_ok && right_ok) return true;
        }
    }

    std::vector<Compiled> entries_;
};

/// Client for a remote LLM extraction service speaking
///   POST {"model": ..., "prompt": ..., "report_text": ...}
/// and answering with a JSON array of extraction objects. Transport
/// failures are retried up to max_retries; schema-invalid responses are
/// rejected outright, never repaired.
class RemoteLlmExtractor {
  public:
    explicit RemoteLlmExtractor(const ExtractorConfig& config)
        : config_(config), api_key_(detail::env_or("EXTRACTOR_API_KEY", "")) {
        config_.validate();
    }

    std::vector<ExtractedRoI> extract(std::string_view report_text) const {
        const nlohmann::json body = {
            {"model", config_.model_name},
            {"prompt", config_.prompt_template},
            {"report_text", std::string(report_text)},
        };
        nlohmann::json reply;
        for (int attempt = 0;; ++attempt) {
            try {
                reply = detail::post_json(config_.endpoint, body, api_key_, config_.timeout);
                break;
            } catch (const TransportError&) {
                if (attempt >= config_.max_retries) throw;
                std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
            }
        }
        if (!reply.is_array()) {
            throw ValidationError("extraction response must be a JSON array");
        }
        std::vector<ExtractedRoI> out;
        out.reserve(reply.size());
        for (const auto& record : reply) {
            ExtractedRoI roi = validate_extracted(record);
            if (report_text.find(roi.extraction_text) == std::string_view::npos) {
                throw ValidationError("extraction_text is not a substring of the source report: \"" +
                                      roi.extraction_text + "\"");
            }
            out.push_back(std::move(roi));
        }
        return out;
    }

  private:
    ExtractorConfig config_;
    std::string api_key_;
};

inline Lexicon load_lexicon_file(const std::string& path) {
    return parse_lexicon(read_json_file(path));
}

/// Dispatches to the configured backend. An empty (or whitespace-only)
/// report yields an empty list without touching any backend.
inline std::vector<ExtractedRoI> extract_rois(std::string_view report_text,
                                              const ExtractorConfig& config) {
    config.validate();
    if (trim(report_text).empty()) return {};
    if (config.backend == ExtractorConfig::Backend::kRules) {
        return RulesExtractor(load_lexicon_file(config.lexicon_path)).extract(report_text);
    }
    return RemoteLlmExtractor(config).extract(report_text);
}

inline std::string extractor_descriptor(const ExtractorConfig& config) {
    if (config.backend == ExtractorConfig::Backend::kRules) {
        return "rules(lexicon=" + config.lexicon_path + ")";
    }
    return "remote-llm(model=" + config.model_name + ",endpoint=" + config.endpoint + ")";
}

}  // namespace roieval
