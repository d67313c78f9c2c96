// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <roieval/roigraph.hpp>

using namespace roieval;

namespace {

BoundingBox3D box(double x0, double y0, double z0, double x1, double y1, double z1) {
    return {x0, y0, z0, x1, y1, z1};
}

RoINode plain_node(std::array<double, 3> centroid, double volume, double ct, double pet,
                   EmbeddingVector feature) {
    RoINode node;
    node.centroid = centroid;
    node.volume = volume;
    node.mean_intensity_ct = ct;
    node.mean_intensity_pet = pet;
    node.feature = std::move(feature);
    return node;
}

class TempDir {
  public:
    TempDir() {
        path_ = std::filesystem::temp_directory_path() /
                ("roieval-graph-" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string dir() const { return path_.string(); }

  private:
    std::filesystem::path path_;
};

}  // namespace

TEST_CASE("subvolume shape checks and mean") {
    Subvolume sub;
    sub.shape = {2, 2, 1};
    sub.voxels = {1.0, 2.0, 3.0, 4.0};
    CHECK(sub.mean() == Catch::Approx(2.5).margin(1e-12));

    sub.voxels.pop_back();
    CHECK_THROWS_AS(sub.validate(), ValidationError);
    sub.shape = {0, 2, 1};
    sub.voxels = {};
    CHECK_THROWS_AS(sub.validate(), ValidationError);
}

TEST_CASE("node derivation from a bounding box") {
    SECTION("centroid is the midpoint and volume the extent product") {
        const RoINode node = derive_node(box(0, 0, 0, 2, 3, 4), {1.0, 0.0});
        CHECK(node.centroid[0] == 1.0);
        CHECK(node.centroid[1] == 1.5);
        CHECK(node.centroid[2] == 2.0);
        CHECK(node.volume == 24.0);
        CHECK(node.mean_intensity_ct == 0.0);  // no volume data supplied
        CHECK(node.mean_intensity_pet == 0.0);
    }
    SECTION("intensity means come from matching subvolumes") {
        Subvolume ct;
        ct.shape = {2, 3, 4};
        ct.voxels.assign(24, 5.0);
        Subvolume pet;
        pet.shape = {2, 3, 4};
        pet.voxels.assign(24, 0.0);
        pet.voxels[0] = 24.0;  // mean 1
        const RoINode node = derive_node(box(0, 0, 0, 2, 3, 4), {1.0}, ct, pet);
        CHECK(node.mean_intensity_ct == Catch::Approx(5.0).margin(1e-12));
        CHECK(node.mean_intensity_pet == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("subvolume extents must match the box") {
        Subvolume ct;
        ct.shape = {2, 3, 3};
        ct.voxels.assign(18, 1.0);
        CHECK_THROWS_AS(derive_node(box(0, 0, 0, 2, 3, 4), {1.0}, ct), ValidationError);
    }
    SECTION("degenerate or negative boxes are rejected") {
        CHECK_THROWS_AS(derive_node(box(1, 0, 0, 1, 2, 2), {1.0}), ValidationError);
        CHECK_THROWS_AS(derive_node(box(3, 0, 0, 2, 2, 2), {1.0}), ValidationError);
    }
}

TEST_CASE("edge features for a hand-worked node pair") {
    const std::vector<RoINode> nodes = {
        plain_node({0.0, 0.0, 0.0}, 8.0, 2.0, 3.0, {3.0, 4.0}),
        plain_node({3.0, 4.0, 0.0}, 2.0, 1.0, 4.0, {5.0, 0.0}),
    };
    const RoIEdge edge = edge_between(nodes, 0, 1);
    CHECK(edge.distance == 5.0);
    CHECK(edge.spatial_features[0] == 5.0);
    CHECK(edge.spatial_features[1] == 0.6);
    CHECK(edge.spatial_features[2] == 0.8);
    CHECK(edge.spatial_features[3] == 0.0);
    CHECK(edge.spatial_features[4] == 4.0);  // v_i / v_j = 8 / 2
    CHECK_FALSE(edge.degenerate_direction);

    // cos((3,4), (5,0)) = 15 / 25, exactly representable
    CHECK(edge.morphological_features[0] == 0.6);
    CHECK(edge.morphological_features[1] == 2.0);
    CHECK(edge.morphological_features[2] == 3.0);
    CHECK(edge.morphological_features[3] == 1.0);
    CHECK(edge.morphological_features[4] == 4.0);

    const auto [spatial, morphological] = edge_features(nodes, 0, 1);
    CHECK(spatial == edge.spatial_features);
    CHECK(morphological == edge.morphological_features);
}

TEST_CASE("ordered edges are antisymmetric and reciprocal") {
    const std::vector<RoINode> nodes = {
        plain_node({1.0, 2.0, 3.0}, 6.0, 1.5, 2.5, {1.0, 2.0, 0.5}),
        plain_node({4.0, 0.0, 1.0}, 1.5, 0.5, 7.0, {0.25, 1.0, 1.0}),
    };
    const RoIEdge fwd = edge_between(nodes, 0, 1);
    const RoIEdge rev = edge_between(nodes, 1, 0);
    CHECK(fwd.distance == Catch::Approx(rev.distance).margin(1e-12));
    for (int axis = 0; axis < 3; ++axis) {
        CHECK(fwd.direction[axis] == Catch::Approx(-rev.direction[axis]).margin(1e-12));
    }
    CHECK(fwd.volume_ratio * rev.volume_ratio == Catch::Approx(1.0).margin(1e-12));
    CHECK(fwd.feature_similarity == Catch::Approx(rev.feature_similarity).margin(1e-12));
    // intensity block swaps endpoint order
    CHECK(fwd.morphological_features[1] == rev.morphological_features[3]);
    CHECK(fwd.morphological_features[2] == rev.morphological_features[4]);

    const double norm = std::sqrt(fwd.direction[0] * fwd.direction[0] +
                                  fwd.direction[1] * fwd.direction[1] +
                                  fwd.direction[2] * fwd.direction[2]);
    CHECK(norm == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("edge construction rejects bad inputs") {
    const std::vector<RoINode> nodes = {
        plain_node({0, 0, 0}, 1.0, 0, 0, {1.0}),
        plain_node({1, 1, 1}, 0.0, 0, 0, {1.0}),  // zero volume
    };
    CHECK_THROWS_AS(edge_between(nodes, 0, 0), ValidationError);
    CHECK_THROWS_AS(edge_between(nodes, 0, 5), ValidationError);
    CHECK_THROWS_AS(edge_between(nodes, 0, 1), ValidationError);
}

TEST_CASE("coincident centroids flag a degenerate direction") {
    const std::vector<RoINode> nodes = {
        plain_node({2, 2, 2}, 1.0, 0, 0, {1.0, 0.0}),
        plain_node({2, 2, 2}, 4.0, 0, 0, {1.0, 0.0}),
    };
    const RoIEdge edge = edge_between(nodes, 0, 1);
    CHECK(edge.distance == 0.0);
    CHECK(edge.degenerate_direction);
    CHECK(edge.direction == std::array<double, 3>{0.0, 0.0, 0.0});
    CHECK(edge.volume_ratio == 0.25);
}

TEST_CASE("graph construction applies the distance-or-similarity criterion") {
    // (0,1) close but dissimilar; (0,2) far but similar; (1,2) neither.
    const std::vector<RoINode> nodes = {
        plain_node({0, 0, 0}, 1.0, 0, 0, {1.0, 0.0}),
        plain_node({1, 0, 0}, 1.0, 0, 0, {0.0, 1.0}),
        plain_node({40, 0, 0}, 1.0, 0, 0, {1.0, 0.0}),
    };
    GraphConfig config;
    config.tau_d = 2.0;
    config.tau_s = 0.9;
    const RoIGraph graph = build_graph(nodes, config);
    REQUIRE(graph.edges.size() == 4);
    CHECK(graph.edges[0].i == 0);
    CHECK(graph.edges[0].j == 1);
    CHECK(graph.edges[1].i == 0);
    CHECK(graph.edges[1].j == 2);
    CHECK(graph.edges[2].i == 1);
    CHECK(graph.edges[2].j == 0);
    CHECK(graph.edges[3].i == 2);
    CHECK(graph.edges[3].j == 0);
}

TEST_CASE("both edge thresholds are strict") {
    const std::vector<RoINode> nodes = {
        plain_node({0, 0, 0}, 1.0, 0, 0, {3.0, 4.0}),
        plain_node({3, 4, 0}, 1.0, 0, 0, {5.0, 0.0}),  // d = 5, s = 0.6
    };
    GraphConfig config;
    config.tau_d = 5.0;
    config.tau_s = 0.6;
    CHECK(build_graph(nodes, config).edges.empty());
    config.tau_d = 5.0 + 1e-9;
    CHECK(build_graph(nodes, config).edges.size() == 2);
    config.tau_d = 5.0;
    config.tau_s = 0.6 - 1e-9;
    CHECK(build_graph(nodes, config).edges.size() == 2);
}

TEST_CASE("graph construction input validation") {
    GraphConfig config;
    config.tau_d = 1.0;
    CHECK_THROWS_AS(build_graph({}, config), ValidationError);

    const std::vector<RoINode> mismatched = {
        plain_node({0, 0, 0}, 1.0, 0, 0, {1.0, 0.0}),
        plain_node({1, 0, 0}, 1.0, 0, 0, {1.0, 0.0, 0.0}),
    };
    CHECK_THROWS_AS(build_graph(mismatched, config), ValidationError);

    const std::vector<RoINode> single = {plain_node({0, 0, 0}, 1.0, 0, 0, {1.0})};
    CHECK(build_graph(single, config).edges.empty());

    GraphConfig bad;
    bad.tau_d = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.tau_d = 1.0;
    bad.tau_s = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("random graphs satisfy the construction invariants") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> coord(0.0, 20.0);
    std::uniform_real_distribution<double> extent(0.5, 5.0);
    std::uniform_real_distribution<double> component(0.1, 1.0);
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 2 + rng() % 7;
        std::vector<RoINode> nodes;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = coord(rng), y = coord(rng), z = coord(rng);
            EmbeddingVector feature(4);
            for (auto& f : feature) f = component(rng);
            nodes.push_back(
                derive_node(box(x, y, z, x + extent(rng), y + extent(rng), z + extent(rng)),
                            std::move(feature)));
        }
        GraphConfig config;
        config.tau_d = 1.0 + coord(rng);
        config.tau_s = component(rng);
        const RoIGraph graph = build_graph(nodes, config);

        std::set<std::pair<std::size_t, std::size_t>> present;
        for (const auto& e : graph.edges) present.insert({e.i, e.j});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const RoIEdge probe = edge_between(nodes, i, j);
                const bool expected = probe.distance < config.tau_d ||
                                      probe.feature_similarity > config.tau_s;
                CHECK(present.count({i, j}) == (expected ? 1 : 0));
                CHECK(present.count({j, i}) == (expected ? 1 : 0));
            }
        }
        for (std::size_t k = 1; k < graph.edges.size(); ++k) {
            const auto& prev = graph.edges[k - 1];
            const auto& cur = graph.edges[k];
            CHECK((prev.i < cur.i || (prev.i == cur.i && prev.j < cur.j)));
        }
        for (const auto& e : graph.edges) {
            if (e.degenerate_direction) continue;
            const double norm = std::sqrt(e.direction[0] * e.direction[0] +
                                          e.direction[1] * e.direction[1] +
                                          e.direction[2] * e.direction[2]);
            CHECK(norm == Catch::Approx(1.0).margin(1e-9));
        }
    }
}

TEST_CASE("feature sidecar round trip") {
    TempDir tmp;
    const std::string path = tmp.file("features.bin");
    const std::vector<EmbeddingVector> vectors = {
        {0.5, -1.25, 3.0}, {0.0, 0.0, 0.0}, {127.5, -0.0625, 2.0}};
    write_feature_sidecar(path, vectors);
    const auto loaded = load_feature_sidecar(path);
    REQUIRE(loaded.size() == 3);
    for (std::size_t v = 0; v < 3; ++v) {
        REQUIRE(loaded[v].size() == 3);
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(loaded[v][d] == vectors[v][d]);  // chosen exactly representable in float32
        }
    }

    write_feature_sidecar(path, {});
    CHECK(load_feature_sidecar(path).empty());
}

TEST_CASE("feature sidecar corruption is detected") {
    TempDir tmp;
    CHECK_THROWS_AS(load_feature_sidecar(tmp.file("missing.bin")), IoError);

    const std::string truncated = tmp.file("truncated.bin");
    std::ofstream(truncated, std::ios::binary) << "abc";
    CHECK_THROWS_AS(load_feature_sidecar(truncated), ValidationError);

    const std::string padded = tmp.file("padded.bin");
    write_feature_sidecar(padded, {{1.0, 2.0}});
    std::ofstream(padded, std::ios::binary | std::ios::app) << "x";
    CHECK_THROWS_AS(load_feature_sidecar(padded), ValidationError);

    CHECK_THROWS_AS(write_feature_sidecar(tmp.file("ragged.bin"), {{1.0, 2.0}, {1.0}}),
                    ValidationError);
}

TEST_CASE("node list files") {
    SECTION("inline features with direct intensity means") {
        const nlohmann::json doc = {
            {"nodes",
             {{{"bbox", {0, 0, 0, 2, 2, 2}},
               {"feature", {1.0, 0.0}},
               {"mean_intensity_ct", 2.5},
               {"mean_intensity_pet", 7.0}}}}};
        const auto nodes = load_nodes_json(doc);
        REQUIRE(nodes.size() == 1);
        CHECK(nodes[0].volume == 8.0);
        CHECK(nodes[0].mean_intensity_ct == 2.5);
        CHECK(nodes[0].mean_intensity_pet == 7.0);
    }
    SECTION("sidecar features resolve relative to the given directory") {
        TempDir tmp;
        write_feature_sidecar(tmp.file("f.bin"), {{1.0, 0.0}, {0.0, 1.0}});
        nlohmann::json doc;
        doc["feature_file"] = "f.bin";
        doc["nodes"] = nlohmann::json::array();
        for (int k = 0; k < 2; ++k) {
            doc["nodes"].push_back({{"bbox", {k, 0, 0, k + 1, 1, 1}}});
        }
        const auto nodes = load_nodes_json(doc, tmp.dir());
        REQUIRE(nodes.size() == 2);
        CHECK(nodes[0].feature == EmbeddingVector{1.0, 0.0});
        CHECK(nodes[1].feature == EmbeddingVector{0.0, 1.0});

        doc["nodes"].push_back(doc["nodes"][0]);  // three nodes, two vectors
        CHECK_THROWS_AS(load_nodes_json(doc, tmp.dir()), ValidationError);
    }
    SECTION("subvolumes in the node file") {
        nlohmann::json doc;
        doc["nodes"] = {{{"bbox", {0, 0, 0, 1, 1, 2}},
                         {"feature", {1.0}},
                         {"ct_subvolume", {{"shape", {1, 1, 2}}, {"voxels", {2.0, 4.0}}}}}};
        const auto nodes = load_nodes_json(doc);
        CHECK(nodes[0].mean_intensity_ct == 3.0);
    }
    SECTION("malformed documents") {
        CHECK_THROWS_AS(load_nodes_json(nlohmann::json::array()), ValidationError);
        CHECK_THROWS_AS(load_nodes_json(nlohmann::json{{"nodes", 3}}), ValidationError);
        const nlohmann::json no_feature = {{"nodes", {{{"bbox", {0, 0, 0, 1, 1, 1}}}}}};
        CHECK_THROWS_AS(load_nodes_json(no_feature), ValidationError);
    }
}

TEST_CASE("graph json export carries concatenated edge features") {
    const std::vector<RoINode> nodes = {
        plain_node({0, 0, 0}, 1.0, 1.0, 2.0, {1.0, 0.0}),
        plain_node({1, 0, 0}, 2.0, 3.0, 4.0, {0.0, 1.0}),
    };
    GraphConfig config;
    config.tau_d = 10.0;
    config.tau_s = 0.99;
    const nlohmann::json doc = graph_to_json(build_graph(nodes, config));
    CHECK(doc["config"]["tau_d"] == 10.0);
    CHECK(doc["config"]["tau_s"] == 0.99);
    REQUIRE(doc["nodes"].size() == 2);
    CHECK(doc["nodes"][1]["index"] == 1);
    CHECK(doc["nodes"][1]["volume"] == 2.0);
    REQUIRE(doc["edges"].size() == 2);
    const auto& concat = doc["edges"][0]["concat_features"];
    CHECK(concat.size() == 2 + 2 + 5 + 5);
    // layout: h_i, h_j, spatial, morphological
    CHECK(concat[0] == 1.0);
    CHECK(concat[3] == 1.0);
    CHECK(concat[4] == doc["edges"][0]["distance"]);
    CHECK(concat[9] == doc["edges"][0]["feature_similarity"]);
}
