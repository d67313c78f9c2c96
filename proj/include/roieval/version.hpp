// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace roieval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace roieval
