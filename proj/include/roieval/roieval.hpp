// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.
#pragma once

#include "roieval/corpus.hpp"
#include "roieval/embedding.hpp"
#include "roieval/errors.hpp"
#include "roieval/evaluate.hpp"
#include "roieval/extraction.hpp"
#include "roieval/matching.hpp"
#include "roieval/metrics.hpp"
#include "roieval/roigraph.hpp"
#include "roieval/text.hpp"
#include "roieval/version.hpp"
