// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic RoI relational graph: nodes derived from 3-D bounding boxes
// plus externally supplied feature vectors, edges gated by spatial proximity
// or feature similarity, with raw spatial/morphological edge features. The
// learned stages that would consume these features are out of scope; the
// export carries the raw concatenated inputs instead.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roieval/corpus.hpp"
#include "roieval/embedding.hpp"
#include "roieval/errors.hpp"

namespace roieval {

/// Regular voxel grid clipped to one bounding box.
struct Subvolume {
    std::array<std::size_t, 3> shape{};  // nx, ny, nz
    std::vector<double> voxels;          // nx*ny*nz values

    void validate() const {
        const std::size_t count = shape[0] * shape[1] * shape[2];
        if (count == 0) throw ValidationError("subvolume has an empty shape");
        if (voxels.size() != count) {
            throw ValidationError("subvolume voxel count does not match its shape");
        }
    }

    double mean() const {
        validate();
        double sum = 0.0;
        for (const double v : voxels) sum += v;
        return sum / static_cast<double>(voxels.size());
    }
};

struct RoINode {
    EmbeddingVector feature;  // opaque, externally supplied
    BoundingBox3D bbox;
    std::array<double, 3> centroid{};
    double volume = 0.0;
    double mean_intensity_ct = 0.0;
    double mean_intensity_pet = 0.0;
};

struct RoIEdge {
    std::size_t i = 0;
    std::size_t j = 0;
    double distance = 0.0;
    std::array<double, 3> direction{};  // unit vector from i toward j
    bool degenerate_direction = false;  // coincident centroids: zero direction
    double volume_ratio = 0.0;          // v_i / v_j
    double feature_similarity = 0.0;    // unclamped cosine in [-1, 1]
    std::array<double, 5> spatial_features{};        // [d, r(3), v_i/v_j]
    std::array<double, 5> morphological_features{};  // [s, Ii_ct, Ii_pet, Ij_ct, Ij_pet]
};

/// Both thresholds are mandatory configuration — there are no sensible
/// universal defaults — and are echoed into every export.
struct GraphConfig {
    double tau_d = 0.0;
    double tau_s = 0.0;

    void validate() const {
        if (!(tau_d > 0.0)) throw ValidationError("tau_d must be positive");
        if (!(tau_s >= -1.0 && tau_s <= 1.0)) throw ValidationError("tau_s must lie in [-1, 1]");
    }
};

struct RoIGraph {
    std::vector<RoINode> nodes;
    std::vector<RoIEdge> edges;  // both directions stored, sorted by (i, j)
    GraphConfig config;
};

/// Centroid = bbox midpoint, volume = product of extents; intensity means
/// come from the optional subvolumes (0 without volume data), whose shapes
/// must match the bbox extents.
inline RoINode derive_node(const BoundingBox3D& bbox, EmbeddingVector feature,
                           const std::optional<Subvolume>& ct = std::nullopt,
                           const std::optional<Subvolume>& pet = std::nullopt) {
    bbox.validate();
    RoINode node;
    node.bbox = bbox;
    node.feature = std::move(feature);
    const std::array<double, 3> extent = {bbox.x_max - bbox.x_min, bbox.y_max - bbox.y_min,
                                          bbox.z_max - bbox.z_min};
    node.centroid = {bbox.x_min + extent[0] / 2.0, bbox.y_min + extent[1] / 2.0,
                     bbox.z_min + extent[2] / 2.0};
    node.volume = extent[0] * extent[1] * extent[2];
    auto check_extent = [&](const Subvolume& sub, const char* name) {
        sub.validate();
        for (std::size_t axis = 0; axis < 3; ++axis) {
            if (std::abs(static_cast<double>(sub.shape[axis]) - extent[axis]) > 1e-9) {
                throw ValidationError(std::string(name) + " subvolume extent does not match bbox");
            }
        }
    };
    if (ct) {
        check_extent(*ct, "CT");
        node.mean_intensity_ct = ct->mean();
    }
    if (pet) {
        check_extent(*pet, "PET");
        node.mean_intensity_pet = pet->mean();
    }
    return node;
}

/// Raw edge features for the ordered pair (a, b). Coincident centroids give
/// a zero direction (flagged via RoIEdge, not an error — duplicate
/// annotations happen).
inline RoIEdge edge_between(const std::vector<RoINode>& nodes, std::size_t i, std::size_t j) {
    if (i == j) throw ValidationError("self-loops are not part of the graph");
    if (i >= nodes.size() || j >= nodes.size()) throw ValidationError("edge index out of range");
    const RoINode& a = nodes[i];
    const RoINode& b = nodes[j];
    if (!(a.volume > 0.0) || !(b.volume > 0.0)) {
        throw ValidationError("edge features require positive node volumes");
    }
    RoIEdge edge;
    edge.i = i;
    edge.j = j;
    const std::array<double, 3> delta = {b.centroid[0] - a.centroid[0],
                                         b.centroid[1] - a.centroid[1],
                                         b.centroid[2] - a.centroid[2]};
    edge.distance = std::sqrt(delta[0] * delta[0] + delta[1] * delta[1] + delta[2] * delta[2]);
    if (edge.distance > 0.0) {
        edge.direction = {delta[0] / edge.distance, delta[1] / edge.distance,
                          delta[2] / edge.distance};
    } else {
        edge.direction = {0.0, 0.0, 0.0};
        edge.degenerate_direction = true;
    }
    edge.volume_ratio = a.volume / b.volume;
    edge.feature_similarity = cosine(a.feature, b.feature);
    edge.spatial_features = {edge.distance, edge.direction[0], edge.direction[1],
                             edge.direction[2], edge.volume_ratio};
    edge.morphological_features = {edge.feature_similarity, a.mean_intensity_ct,
                                   a.mean_intensity_pet, b.mean_intensity_ct,
                                   b.mean_intensity_pet};
    return edge;
}

inline std::pair<std::array<double, 5>, std::array<double, 5>> edge_features(
    const std::vector<RoINode>& nodes, std::size_t i, std::size_t j) {
    const RoIEdge edge = edge_between(nodes, i, j);
    return {edge.spatial_features, edge.morphological_features};
}

/// An undirected edge exists when distance < tau_d or similarity > tau_s
/// (strict on both); it is stored as both ordered directions, each with its
/// own direction vector and volume ratio. Edges come back sorted by (i, j).
inline RoIGraph build_graph(const std::vector<RoINode>& nodes, const GraphConfig& config) {
    config.validate();
    if (nodes.empty()) throw ValidationError("graph needs at least one node");
    const std::size_t dim = nodes.front().feature.size();
    for (const auto& node : nodes) {
        if (node.feature.size() != dim) {
            throw ValidationError("all node features must share one dimension");
        }
    }
    RoIGraph graph;
    graph.nodes = nodes;
    graph.config = config;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
            const RoIEdge forward = edge_between(nodes, i, j);
            if (forward.distance < config.tau_d || forward.feature_similarity > config.tau_s) {
                graph.edges.push_back(forward);
                graph.edges.push_back(edge_between(nodes, j, i));
            }
        }
    }
    std::sort(graph.edges.begin(), graph.edges.end(), [](const RoIEdge& a, const RoIEdge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return graph;
}

// ---------------------------------------------------------------------------
// Export / sidecar I/O.

namespace detail {

template <std::size_t N>
nlohmann::json array_json(const std::array<double, N>& values) {
    return nlohmann::json(std::vector<double>(values.begin(), values.end()));
}

}  // namespace detail

/// JSON export. Each edge also carries the raw concatenation
/// [h_i | h_j | spatial | morphological] for downstream learned consumers.
inline nlohmann::json graph_to_json(const RoIGraph& graph) {
    nlohmann::json doc;
    doc["config"] = {{"tau_d", graph.config.tau_d}, {"tau_s", graph.config.tau_s}};
    auto& nodes = doc["nodes"] = nlohmann::json::array();
    for (std::size_t idx = 0; idx < graph.nodes.size(); ++idx) {
        const RoINode& n = graph.nodes[idx];
        nodes.push_back({{"index", idx},
                         {"bbox", n.bbox},
                         {"centroid", detail::array_json(n.centroid)},
                         {"volume", n.volume},
                         {"mean_intensity_ct", n.mean_intensity_ct},
                         {"mean_intensity_pet", n.mean_intensity_pet},
                         {"feature", n.feature}});
    }
    auto& edges = doc["edges"] = nlohmann::json::array();
    for (const RoIEdge& e : graph.edges) {
        std::vector<double> concat;
        const auto& hi = graph.nodes[e.i].feature;
        const auto& hj = graph.nodes[e.j].feature;
        concat.reserve(hi.size() + hj.size() + 10);
        concat.insert(concat.end(), hi.begin(), hi.end());
        concat.insert(concat.end(), hj.begin(), hj.end());
        concat.insert(concat.end(), e.spatial_features.begin(), e.spatial_features.end());
        concat.insert(concat.end(), e.morphological_features.begin(),
                      e.morphological_features.end());
        edges.push_back({{"i", e.i},
                         {"j", e.j},
                         {"distance", e.distance},
                         {"direction", detail::array_json(e.direction)},
                         {"degenerate_direction", e.degenerate_direction},
                         {"volume_ratio", e.volume_ratio},
                         {"feature_similarity", e.feature_similarity},
                         {"spatial_features", detail::array_json(e.spatial_features)},
                         {"morphological_features", detail::array_json(e.morphological_features)},
                         {"concat_features", concat}});
    }
    return doc;
}

namespace detail {

inline std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>(v >> 8 & 0xff),
        static_cast<unsigned char>(v >> 16 & 0xff), static_cast<unsigned char>(v >> 24 & 0xff)};
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

}  // namespace detail

/// Sidecar layout: uint32 vector count, uint32 dimension, then count*dim
/// little-endian float32 values.
inline std::vector<EmbeddingVector> load_feature_sidecar(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file: " + path);
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 8) throw ValidationError("feature file too short for its header: " + path);
    const std::uint32_t count = detail::read_u32_le(raw.data());
    const std::uint32_t dim = detail::read_u32_le(raw.data() + 4);
    const std::size_t expected = 8 + static_cast<std::size_t>(count) * dim * 4;
    if (raw.size() != expected) {
        throw ValidationError("feature file size does not match its header: " + path);
    }
    static_assert(sizeof(float) == 4);
    std::vector<EmbeddingVector> vectors(count, EmbeddingVector(dim));
    const unsigned char* p = raw.data() + 8;
    for (std::uint32_t v = 0; v < count; ++v) {
        for (std::uint32_t d = 0; d < dim; ++d, p += 4) {
            const std::uint32_t bits = detail::read_u32_le(p);
            float value;
            std::memcpy(&value, &bits, 4);
            vectors[v][d] = static_cast<double>(value);
        }
    }
    return vectors;
}

inline void write_feature_sidecar(const std::string& path,
                                  const std::vector<EmbeddingVector>& vectors) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open feature file for writing: " + path);
    const std::uint32_t dim = vectors.empty() ? 0 : static_cast<std::uint32_t>(vectors[0].size());
    detail::write_u32_le(out, static_cast<std::uint32_t>(vectors.size()));
    detail::write_u32_le(out, dim);
    for (const auto& vec : vectors) {
        if (vec.size() != dim) throw ValidationError("sidecar vectors must share one dimension");
        for (const double value : vec) {
            const float f = static_cast<float>(value);
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::write_u32_le(out, bits);
        }
    }
    if (!out) throw IoError("error while writing feature file: " + path);
}

/// Node-list file for the CLI: {"nodes": [...], "feature_file": optional}.
/// Each node needs a 6-number bbox; features come inline ("feature") or
/// from the sidecar, and intensity means may be given directly or as
/// subvolumes ({"shape": [3], "voxels": [...]}).
inline std::vector<RoINode> load_nodes_json(const nlohmann::json& doc,
                                            const std::string& sidecar_dir = "") {
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
        throw ValidationError("node file must be an object with a \"nodes\" array");
    }
    std::vector<EmbeddingVector> sidecar;
    bool has_sidecar = false;
    if (doc.contains("feature_file")) {
        if (!doc["feature_file"].is_string()) {
            throw ValidationError("\"feature_file\" must be a path string");
        }
        std::string path = doc["feature_file"].get<std::string>();
        if (!sidecar_dir.empty() && !path.empty() && path.front() != '/') {
            path = sidecar_dir + "/" + path;
        }
        sidecar = load_feature_sidecar(path);
        has_sidecar = true;
    }
    auto parse_subvolume = [](const nlohmann::json& j) {
        Subvolume sub;
        if (!j.is_object() || !j.contains("shape") || !j.contains("voxels")) {
            throw ValidationError("subvolume needs \"shape\" and \"voxels\"");
        }
        const auto shape = j["shape"].get<std::vector<std::size_t>>();
        if (shape.size() != 3) throw ValidationError("subvolume shape must have 3 entries");
        sub.shape = {shape[0], shape[1], shape[2]};
        sub.voxels = j["voxels"].get<std::vector<double>>();
        return sub;
    };
    std::vector<RoINode> nodes;
    const auto& items = doc["nodes"];
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
        const auto& item = items[idx];
        if (!item.is_object() || !item.contains("bbox")) {
            throw ValidationError("node " + std::to_string(idx) + " needs a \"bbox\"");
        }
        BoundingBox3D bbox = item["bbox"].get<BoundingBox3D>();
        EmbeddingVector feature;
        if (has_sidecar) {
            if (idx >= sidecar.size()) {
                throw ValidationError("feature file has fewer vectors than nodes");
            }
            feature = sidecar[idx];
        } else if (item.contains("feature")) {
            feature = item["feature"].get<EmbeddingVector>();
        } else {
            throw ValidationError("node " + std::to_string(idx) +
                                  " has no feature and no feature file was given");
        }
        std::optional<Subvolume> ct, pet;
        if (item.contains("ct_subvolume")) ct = parse_subvolume(item["ct_subvolume"]);
        if (item.contains("pet_subvolume")) pet = parse_subvolume(item["pet_subvolume"]);
        RoINode node = derive_node(bbox, std::move(feature), ct, pet);
        if (item.contains("mean_intensity_ct")) {
            node.mean_intensity_ct = item["mean_intensity_ct"].get<double>();
        }
        if (item.contains("mean_intensity_pet")) {
            node.mean_intensity_pet = item["mean_intensity_pet"].get<double>();
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

}  // namespace roieval
