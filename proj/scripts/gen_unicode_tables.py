#!/usr/bin/env python3
"""Regenerates include/roieval/detail/unicode_tables.hpp from the Unicode
Character Database shipped with CPython (via the unicodedata module).

The emitted tables drive canonical decomposition, canonical ordering,
canonical composition (NFC), per-codepoint lowercasing, and word-character
classification. Hangul syllables are handled algorithmically at runtime and
are therefore excluded here.

Usage: python3 scripts/gen_unicode_tables.py > include/roieval/detail/unicode_tables.hpp
"""

import sys
import unicodedata

MAX_CP = 0x110000
HANGUL_FIRST, HANGUL_LAST = 0xAC00, 0xD7A3


def canonical_decompositions():
    rows = []
    for cp in range(MAX_CP):
        if HANGUL_FIRST <= cp <= HANGUL_LAST:
            continue
        raw = unicodedata.decomposition(chr(cp))
        if not raw or raw.startswith("<"):
            continue  # no decomposition, or a compatibility one
        parts = [int(p, 16) for p in raw.split()]
        if len(parts) == 1:
            rows.append((cp, parts[0], 0))
        elif len(parts) == 2:
            rows.append((cp, parts[0], parts[1]))
    return rows


def combining_classes():
    return [
        (cp, unicodedata.combining(chr(cp)))
        for cp in range(MAX_CP)
        if unicodedata.combining(chr(cp)) != 0
    ]


def primary_composites(decomp_rows):
    rows = []
    for cp, a, b in decomp_rows:
        if b == 0:
            continue
        if unicodedata.normalize("NFC", chr(a) + chr(b)) == chr(cp):
            rows.append((a, b, cp))
    rows.sort()
    return rows


def simple_lowercase():
    rows = []
    for cp in range(MAX_CP):
        low = chr(cp).lower()
        if len(low) == 1 and ord(low) != cp:
            rows.append((cp, ord(low)))
    return rows


def word_ranges():
    """Codepoints that continue a token: letters, digits, combining marks."""
    ranges = []
    start = None
    for cp in range(MAX_CP):
        cat = unicodedata.category(chr(cp))
        is_word = cat[0] in ("L", "N", "M")
        if is_word and start is None:
            start = cp
        elif not is_word and start is not None:
            ranges.append((start, cp - 1))
            start = None
    if start is not None:
        ranges.append((start, MAX_CP - 1))
    return ranges


def emit(out):
    decomp = canonical_decompositions()
    ccc = combining_classes()
    comp = primary_composites(decomp)
    lower = simple_lowercase()
    words = word_ranges()

    w = out.write
    w("// Copyright 2026 The roieval Authors\n")
    w("// SPDX-License-Identifier: Apache-2.0\n")
    w("//\n")
    w("// Generated by scripts/gen_unicode_tables.py from the Unicode %s\n"
      % unicodedata.unidata_version)
    w("// Character Database. Do not edit by hand.\n")
    w("#pragma once\n\n")
    w("#include <cstdint>\n\n")
    w("namespace roieval::detail {\n\n")

    w("struct DecompEntry { char32_t cp; char32_t first; char32_t second; };\n")
    w("struct CccEntry { char32_t cp; std::uint8_t ccc; };\n")
    w("struct ComposeEntry { char32_t first; char32_t second; char32_t composite; };\n")
    w("struct CaseEntry { char32_t from; char32_t to; };\n")
    w("struct CpRange { char32_t lo; char32_t hi; };\n\n")

    w("// Canonical decompositions (one level), sorted by codepoint; second == 0\n")
    w("// marks a singleton decomposition.\n")
    w("inline constexpr DecompEntry kCanonicalDecomp[] = {\n")
    for cp, a, b in decomp:
        w("    {0x%X, 0x%X, 0x%X},\n" % (cp, a, b))
    w("};\n\n")

    w("// Nonzero canonical combining classes, sorted by codepoint.\n")
    w("inline constexpr CccEntry kCombiningClass[] = {\n")
    for cp, c in ccc:
        w("    {0x%X, %d},\n" % (cp, c))
    w("};\n\n")

    w("// Primary composites, sorted by (first, second).\n")
    w("inline constexpr ComposeEntry kPrimaryComposites[] = {\n")
    for a, b, c in comp:
        w("    {0x%X, 0x%X, 0x%X},\n" % (a, b, c))
    w("};\n\n")

    w("// Single-codepoint lowercase mappings, sorted by source codepoint.\n")
    w("inline constexpr CaseEntry kLowercase[] = {\n")
    for f, t in lower:
        w("    {0x%X, 0x%X},\n" % (f, t))
    w("};\n\n")

    w("// Inclusive codepoint ranges of word characters (categories L*, M*, N*),\n")
    w("// sorted by lower bound.\n")
    w("inline constexpr CpRange kWordRanges[] = {\n")
    for lo, hi in words:
        w("    {0x%X, 0x%X},\n" % (lo, hi))
    w("};\n\n")

    w("}  // namespace roieval::detail\n")


if __name__ == "__main__":
    emit(sys.stdout)
