// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// UTF-8 handling, Unicode canonical composition (NFC), lowercasing and
// tokenization. All scoring in this library runs on top of this exact
// normalization recipe so that results are reproducible across platforms:
//
//   fold:     decode UTF-8 -> NFC -> per-codepoint lowercase
//   tokenize: fold, then split into maximal runs of word characters
//             (Unicode categories L*, M*, N*); everything else separates
//
// Hangul composition is algorithmic; all other data comes from the frozen
// tables in detail/unicode_tables.hpp.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "roieval/detail/unicode_tables.hpp"

namespace roieval {

inline constexpr char32_t kReplacementChar = 0xFFFD;

namespace detail {

inline std::uint8_t combining_class(char32_t cp) {
    auto it = std::lower_bound(std::begin(kCombiningClass), std::end(kCombiningClass), cp,
                               [](const CccEntry& e, char32_t c) { return e.cp < c; });
    return (it != std::end(kCombiningClass) && it->cp == cp) ? it->ccc : 0;
}

inline const DecompEntry* find_decomposition(char32_t cp) {
    auto it = std::lower_bound(std::begin(kCanonicalDecomp), std::end(kCanonicalDecomp), cp,
                               [](const DecompEntry& e, char32_t c) { return e.cp < c; });
    return (it != std::end(kCanonicalDecomp) && it->cp == cp) ? &*it : nullptr;
}

// Hangul syllable arithmetic per the Unicode standard, chapter 3.12.
inline constexpr char32_t kHangulSBase = 0xAC00;
inline constexpr char32_t kHangulLBase = 0x1100;
inline constexpr char32_t kHangulVBase = 0x1161;
inline constexpr char32_t kHangulTBase = 0x11A7;
inline constexpr int kHangulLCount = 19, kHangulVCount = 21, kHangulTCount = 28;
inline constexpr int kHangulNCount = kHangulVCount * kHangulTCount;
inline constexpr int kHangulSCount = kHangulLCount * kHangulNCount;

inline bool is_hangul_syllable(char32_t cp) {
    return cp >= kHangulSBase && cp < kHangulSBase + kHangulSCount;
}

inline void decompose_into(char32_t cp, std::u32string& out) {
    if (is_hangul_syllable(cp)) {
        int s = static_cast<int>(cp - kHangulSBase);
        out.push_back(kHangulLBase + s / kHangulNCount);
        out.push_back(kHangulVBase + (s % kHangulNCount) / kHangulTCount);
        if (s % kHangulTCount != 0) out.push_back(kHangulTBase + s % kHangulTCount);
        return;
    }
    if (const DecompEntry* d = find_decomposition(cp)) {
        decompose_into(d->first, out);
        if (d->second != 0) decompose_into(d->second, out);
        return;
    }
    out.push_back(cp);
}

inline char32_t compose_pair(char32_t a, char32_t b) {
    // Hangul LV and LVT composition.
    if (a >= kHangulLBase && a < kHangulLBase + kHangulLCount && b >= kHangulVBase &&
        b < kHangulVBase + kHangulVCount) {
        return kHangulSBase +
               (static_cast<int>(a - kHangulLBase) * kHangulVCount +
                static_cast<int>(b - kHangulVBase)) *
                   kHangulTCount;
    }
    if (is_hangul_syllable(a) && (a - kHangulSBase) % kHangulTCount == 0 && b > kHangulTBase &&
        b < kHangulTBase + kHangulTCount) {
        return a + (b - kHangulTBase);
    }
    auto it = std::lower_bound(std::begin(kPrimaryComposites), std::end(kPrimaryComposites),
                               std::pair<char32_t, char32_t>{a, b},
                               [](const ComposeEntry& e, const std::pair<char32_t, char32_t>& k) {
                                   return e.first != k.first ? e.first < k.first
                                                             : e.second < k.second;
                               });
    if (it != std::end(kPrimaryComposites) && it->first == a && it->second == b) {
        return it->composite;
    }
    return 0;
}

}  // namespace detail

/// Decodes UTF-8, replacing malformed sequences with U+FFFD.
inline std::u32string utf8_decode(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto b0 = static_cast<unsigned char>(text[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        bool ok = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto b = static_cast<unsigned char>(text[i + k]);
            if ((b & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (b & 0x3F);
        }
        static constexpr char32_t kMinByLen[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF) || cp < kMinByLen[len]) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(std::u32string_view cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) utf8_append(out, cp);
    return out;
}

/// Canonical composition (NFC): full canonical decomposition, canonical
/// ordering of combining marks, then canonical composition.
inline std::u32string to_nfc(std::u32string_view in) {
    std::u32string buf;
    buf.reserve(in.size());
    for (char32_t cp : in) detail::decompose_into(cp, buf);

    // Canonical ordering: bubble adjacent non-starters into ascending ccc.
    for (std::size_t i = 1; i < buf.size(); ++i) {
        const std::uint8_t ccc = detail::combining_class(buf[i]);
        if (ccc == 0) continue;
        std::size_t j = i;
        while (j > 0) {
            const std::uint8_t prev = detail::combining_class(buf[j - 1]);
            if (prev == 0 || prev <= ccc) break;
            std::swap(buf[j - 1], buf[j]);
            --j;
        }
    }

    if (buf.empty()) return buf;
    std::u32string out;
    out.reserve(buf.size());
    out.push_back(buf[0]);
    std::ptrdiff_t last_starter = detail::combining_class(buf[0]) == 0 ? 0 : -1;
    for (std::size_t i = 1; i < buf.size(); ++i) {
        const char32_t c = buf[i];
        const std::uint8_t ccc = detail::combining_class(c);
        if (last_starter >= 0) {
            const bool blocked =
                static_cast<std::ptrdiff_t>(out.size()) - 1 > last_starter &&
                detail::combining_class(out.back()) >= ccc;
            if (!blocked) {
                if (char32_t comp = detail::compose_pair(out[last_starter], c)) {
                    out[static_cast<std::size_t>(last_starter)] = comp;
                    continue;
                }
            }
        }
        out.push_back(c);
        if (ccc == 0) last_starter = static_cast<std::ptrdiff_t>(out.size()) - 1;
    }
    return out;
}

inline char32_t to_lower(char32_t cp) {
    using detail::kLowercase;
    auto it = std::lower_bound(std::begin(kLowercase), std::end(kLowercase), cp,
                               [](const detail::CaseEntry& e, char32_t c) { return e.from < c; });
    return (it != std::end(kLowercase) && it->from == cp) ? it->to : cp;
}

inline bool is_word_char(char32_t cp) {
    using detail::kWordRanges;
    auto it = std::upper_bound(std::begin(kWordRanges), std::end(kWordRanges), cp,
                               [](char32_t c, const detail::CpRange& r) { return c < r.lo; });
    return it != std::begin(kWordRanges) && cp <= std::prev(it)->hi;
}

inline bool is_space_char(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

/// NFC + lowercase over codepoints.
inline std::u32string fold_codepoints(std::string_view text) {
    std::u32string cps = to_nfc(utf8_decode(text));
    for (char32_t& cp : cps) cp = to_lower(cp);
    return cps;
}

/// NFC + lowercase, re-encoded as UTF-8.
inline std::string fold_text(std::string_view text) { return utf8_encode(fold_codepoints(text)); }

/// Folds, then splits into maximal runs of word characters. Whitespace and
/// punctuation separate tokens and are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
    const std::u32string cps = fold_codepoints(text);
    std::vector<std::string> tokens;
    std::string current;
    for (char32_t cp : cps) {
        if (is_word_char(cp)) {
            utf8_append(current, cp);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (static_cast<unsigned char>(s.front()) <= ' ')) s.remove_prefix(1);
    while (!s.empty() && (static_cast<unsigned char>(s.back()) <= ' ')) s.remove_suffix(1);
    return s;
}

/// Collapses runs of ASCII whitespace to single spaces and trims the ends.
inline std::string normalize_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char ch : s) {
        const auto u = static_cast<unsigned char>(ch);
        if (u == ' ' || u == '\t' || u == '\n' || u == '\r' || u == '\f' || u == '\v') {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(ch);
        }
    }
    return out;
}

/// 64-bit FNV-1a with the standard offset basis and prime. This is the one
/// hash used for bucketing character n-grams, fixed so vectors are identical
/// across platforms.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : bytes) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace roieval
