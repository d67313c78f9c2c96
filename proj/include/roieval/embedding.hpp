// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Text-to-vector embedding behind one interface: a remote embedding-service
// client and a deterministic local embedder (hashed character n-grams), plus
// cosine similarity and a thread-safe LRU cache wrapper.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "roieval/detail/http.hpp"
#include "roieval/errors.hpp"
#include "roieval/text.hpp"

namespace roieval {

using EmbeddingVector = std::vector<double>;

/// cos(u, v) = dot / (|u| |v|), clamped into [-1, 1] against rounding.
inline double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.size() != v.size()) {
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                              std::to_string(v.size()) + ")");
    }
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) {
        throw ValidationError("cosine: zero vector");
    }
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

struct EmbedderConfig {
    enum class Provider { kRemote, kLocalHash };

    Provider provider = Provider::kLocalHash;
    std::string endpoint;      // remote
    std::string model_name;    // remote
    std::size_t dimension = 256;   // local-hash bucket count; 0 lets a remote
                                   // provider pick, otherwise enforced
    std::size_t ngram_size = 3;
    std::size_t cache_capacity = 4096;  // 0 disables the cache wrapper
    std::size_t max_batch = 32;

    void validate() const {
        if (provider == Provider::kRemote) {
            if (endpoint.empty()) throw ValidationError("remote embedder requires an endpoint");
            if (model_name.empty()) throw ValidationError("remote embedder requires a model name");
        } else {
            if (dimension < 2) throw ValidationError("embedding dimension must be at least 2");
            if (ngram_size < 1) throw ValidationError("n-gram size must be at least 1");
        }
        if (provider == Provider::kRemote && dimension == 1) {
            throw ValidationError("embedding dimension must be at least 2");
        }
    }
};

/// Embedding backend. Implementations must be safe for concurrent callers
/// and deterministic per (descriptor, text).
class Embedder {
  public:
    virtual ~Embedder() = default;

    /// Unit-norm vector for non-empty text; throws ValidationError on text
    /// that is empty after trimming.
    virtual EmbeddingVector embed(std::string_view text) = 0;

    /// Stable identity string (provider + model + parameters), used for
    /// cache keying and echoed into output config blocks.
    virtual std::string descriptor() const = 0;
};

namespace detail {

inline void require_nonempty(std::string_view text) {
    if (trim(text).empty()) throw ValidationError("cannot embed empty text");
}

inline void l2_normalize(EmbeddingVector& v) {
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) throw TransportError("embedding provider returned a zero vector");
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
}

}  // namespace detail

/// Deterministic local embedder: lowercased, canonically composed (NFC)
/// character n-grams hashed into `dimension` count buckets with 64-bit
/// FNV-1a, then L2-normalized. Runs of whitespace collapse to one space
/// before n-gram extraction; a text shorter than the n-gram size contributes
/// the whole text as its single gram.
class HashedNgramEmbedder final : public Embedder {
  public:
    explicit HashedNgramEmbedder(std::size_t dimension = 256, std::size_t ngram_size = 3)
        : dimension_(dimension), ngram_size_(ngram_size) {
        if (dimension_ < 2) throw ValidationError("embedding dimension must be at least 2");
        if (ngram_size_ < 1) throw ValidationError("n-gram size must be at least 1");
    }

    EmbeddingVector embed(std::string_view text) override {
        detail::require_nonempty(text);
        std::u32string cps = fold_codepoints(text);
        // collapse whitespace runs and trim
        std::u32string cleaned;
        cleaned.reserve(cps.size());
        for (char32_t cp : cps) {
            if (is_space_char(cp)) {
                if (!cleaned.empty() && cleaned.back() != U' ') cleaned.push_back(U' ');
            } else {
                cleaned.push_back(cp);
            }
        }
        while (!cleaned.empty() && cleaned.back() == U' ') cleaned.pop_back();
        if (cleaned.empty()) throw ValidationError("cannot embed empty text");

        EmbeddingVector vec(dimension_, 0.0);
        const std::size_t n = cleaned.size();
        if (n <= ngram_size_) {
            vec[bucket_of(cleaned)] += 1.0;
        } else {
            for (std::size_t i = 0; i + ngram_size_ <= n; ++i) {
                vec[bucket_of(cleaned.substr(i, ngram_size_))] += 1.0;
            }
        }
        detail::l2_normalize(vec);
        return vec;
    }

    std::string descriptor() const override {
        return "local-hash(dim=" + std::to_string(dimension_) +
               ",ngram=" + std::to_string(ngram_size_) + ")";
    }

    std::size_t bucket_of(std::u32string_view gram) const {
        return static_cast<std::size_t>(fnv1a64(utf8_encode(gram)) % dimension_);
    }

  private:
    std::size_t dimension_;
    std::size_t ngram_size_;
};

/// Client for a remote embedding service speaking
///   POST {"model": ..., "texts": [...]}  ->  {"vectors": [[...], ...]}
/// with requests batched up to max_batch texts. The API key comes from
/// EMBEDDER_API_KEY. Returned vectors are re-normalized to unit length.
class RemoteEmbedder final : public Embedder {
  public:
    explicit RemoteEmbedder(const EmbedderConfig& config)
        : endpoint_(config.endpoint),
          model_(config.model_name),
          expected_dimension_(config.dimension),
          max_batch_(std::max<std::size_t>(1, config.max_batch)),
          api_key_(detail::env_or("EMBEDDER_API_KEY", "")) {
        if (endpoint_.empty() || model_.empty()) {
            throw ValidationError("remote embedder requires endpoint and model name");
        }
    }

    EmbeddingVector embed(std::string_view text) override {
        return embed_batch({std::string(text)}).front();
    }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) {
        for (const auto& t : texts) detail::require_nonempty(t);
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (std::size_t start = 0; start < texts.size(); start += max_batch_) {
            const std::size_t count = std::min(max_batch_, texts.size() - start);
            nlohmann::json body = {
                {"model", model_},
                {"texts", std::vector<std::string>(texts.begin() + start,
                                                   texts.begin() + start + count)},
            };
            nlohmann::json reply =
                detail::post_json(endpoint_, body, api_key_, std::chrono::milliseconds(30000));
            const auto vectors = reply.find("vectors");
            if (vectors == reply.end() || !vectors->is_array() || vectors->size() != count) {
                throw TransportError("embedding response lacks a \"vectors\" array of size " +
                                     std::to_string(count));
            }
            for (const auto& row : *vectors) {
                if (!row.is_array() || row.empty()) {
                    throw TransportError("embedding response row is not a numeric array");
                }
                EmbeddingVector vec;
                vec.reserve(row.size());
                for (const auto& x : row) {
                    if (!x.is_number()) {
                        throw TransportError("embedding response row is not a numeric array");
                    }
                    vec.push_back(x.get<double>());
                }
                if (expected_dimension_ != 0 && vec.size() != expected_dimension_) {
                    throw ValidationError("embedding dimension mismatch: configured " +
                                          std::to_string(expected_dimension_) + ", got " +
                                          std::to_string(vec.size()));
                }
                detail::l2_normalize(vec);
                out.push_back(std::move(vec));
            }
        }
        return out;
    }

    std::string descriptor() const override {
        return "remote(model=" + model_ + ",endpoint=" + endpoint_ + ")";
    }

  private:
    std::string endpoint_;
    std::string model_;
    std::size_t expected_dimension_;
    std::size_t max_batch_;
    std::string api_key_;
};

/// LRU cache in front of another embedder, keyed by text (the wrapped
/// embedder's descriptor fixes provider and model). Concurrent requests for
/// the same key are coalesced into a single inner fetch; every caller gets
/// the identical stored vector.
class CachingEmbedder final : public Embedder {
  public:
    CachingEmbedder(std::shared_ptr<Embedder> inner, std::size_t capacity)
        : inner_(std::move(inner)), capacity_(std::max<std::size_t>(1, capacity)) {}

    EmbeddingVector embed(std::string_view text) override {
        const std::string key(text);
        std::shared_future<EmbeddingVector> future;
        std::promise<EmbeddingVector> promise;
        bool owner = false;
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = entries_.find(key);
            if (it != entries_.end()) {
                order_.splice(order_.begin(), order_, it->second.position);
                future = it->second.value;
            } else {
                future = promise.get_future().share();
                order_.push_front(key);
                entries_.emplace(key, Entry{future, order_.begin()});
                owner = true;
                if (entries_.size() > capacity_) {
                    entries_.erase(order_.back());
                    order_.pop_back();
                }
            }
        }
        if (owner) {
            try {
                promise.set_value(inner_->embed(text));
            } catch (...) {
                promise.set_exception(std::current_exception());
                std::lock_guard<std::mutex> lock(mutex_);
                auto it = entries_.find(key);
                if (it != entries_.end()) {
                    order_.erase(it->second.position);
                    entries_.erase(it);
                }
            }
        }
        return future.get();
    }

    std::string descriptor() const override { return inner_->descriptor(); }

  private:
    struct Entry {
        std::shared_future<EmbeddingVector> value;
        std::list<std::string>::iterator position;
    };

    std::shared_ptr<Embedder> inner_;
    std::size_t capacity_;
    std::mutex mutex_;
    std::list<std::string> order_;
    std::unordered_map<std::string, Entry> entries_;
};

inline std::shared_ptr<Embedder> make_embedder(const EmbedderConfig& config) {
    config.validate();
    std::shared_ptr<Embedder> inner;
    if (config.provider == EmbedderConfig::Provider::kLocalHash) {
        inner = std::make_shared<HashedNgramEmbedder>(config.dimension, config.ngram_size);
    } else {
        inner = std::make_shared<RemoteEmbedder>(config);
    }
    if (config.cache_capacity == 0) return inner;
    return std::make_shared<CachingEmbedder>(std::move(inner), config.cache_capacity);
}

}  // namespace roieval
