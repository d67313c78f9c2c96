// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include <httplib.h>
#include <json.hpp>

#include "roieval/errors.hpp"

namespace roieval::detail {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // leading '/', defaults to "/"
};

inline SplitUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw ValidationError("endpoint URL must include a scheme: " + std::string(url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) {
        return {std::string(url), "/"};
    }
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

/// One POST of a JSON body, expecting a JSON body back. Each call uses its
/// own connection, so concurrent callers never share socket state.
inline nlohmann::json post_json(const std::string& endpoint, const nlohmann::json& body,
                                const std::string& api_key, std::chrono::milliseconds timeout) {
    const SplitUrl url = split_url(endpoint);
    httplib::Client client(url.base);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (!api_key.empty()) {
        client.set_default_headers({{"Authorization", "Bearer " + api_key}});
    }
    auto res = client.Post(url.path, body.dump(), "application/json");
    if (!res) {
        throw TransportError("request to " + endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("request to " + endpoint + " returned HTTP " +
                             std::to_string(res->status));
    }
    nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
        throw TransportError("response from " + endpoint + " is not valid JSON");
    }
    return parsed;
}

inline std::string env_or(const char* name, std::string_view fallback) {
    const char* value = std::getenv(name);
    return value != nullptr ? std::string(value) : std::string(fallback);
}

}  // namespace roieval::detail
