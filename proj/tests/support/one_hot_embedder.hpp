// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test double: every distinct folded text gets its own basis vector, so
// cosine is exactly 1 for equal texts and exactly 0 for different ones.
#pragma once

#include <map>
#include <mutex>
#include <string>
#include <string_view>

#include <roieval/embedding.hpp>
#include <roieval/text.hpp>

namespace roieval::testing {

class OneHotEmbedder final : public Embedder {
  public:
    explicit OneHotEmbedder(std::size_t dimension = 4096) : dimension_(dimension) {}

    EmbeddingVector embed(std::string_view text) override {
        detail::require_nonempty(text);
        const std::string key = fold_text(text);
        std::size_t index;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto [it, inserted] = indices_.try_emplace(key, indices_.size());
            index = it->second;
        }
        if (index >= dimension_) throw ValidationError("one-hot test embedder ran out of axes");
        EmbeddingVector vec(dimension_, 0.0);
        vec[index] = 1.0;
        return vec;
    }

    std::string descriptor() const override {
        return "one-hot-test(dim=" + std::to_string(dimension_) + ")";
    }

  private:
    std::size_t dimension_;
    std::mutex mutex_;
    std::map<std::string, std::size_t> indices_;
};

}  // namespace roieval::testing
