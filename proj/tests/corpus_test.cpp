// Copyright 2026 The roieval Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include <roieval/corpus.hpp>

using namespace roieval;

namespace {

const char* kCecumLine =
    "[Cecum] - [Focal hypermetabolism] - [Unclear] - [12.3] - [Soft tissue density] - [Focal] - "
    "[Very intense hypermetabolism] - [Colon cancer (cecum), Inflammatory bowel disease (Crohn's "
    "disease), Appendicitis/Abscess] - [Colonoscopy and biopsy, Abdominal MRI/CT, Blood tests] - "
    "[3] - [Very intense focal FDG uptake (SUVmax 12.3) in the cecum. Highly suggestive of colon "
    "cancer...]";

// Random annotation whose fields stay clear of the format's separators.
GroundTruthRoI random_roi(std::mt19937& rng) {
    auto word = [&] {
        static const std::vector<std::string> pool = {
            "gan",      "phổi",   "hạch",     "u",        "nốt",      "tổn thương",
            "thận",     "lách",   "đại tràng", "tuyến giáp", "nang",    "di căn",
            "hypodense", "focal", "diffuse",  "intense",  "mild",     "soft tissue"};
        return pool[rng() % pool.size()];
    };
    auto phrase = [&] {
        std::string s = word();
        if (rng() % 2) s += " " + word();
        return s;
    };
    auto list = [&] {
        std::vector<std::string> items;
        const std::size_t n = 1 + rng() % 3;
        for (std::size_t i = 0; i < n; ++i) items.push_back(phrase() + " " + std::to_string(i));
        return items;
    };
    GroundTruthRoI roi;
    roi.anatomic_region = phrase();
    roi.lesion_type = phrase();
    roi.size = rng() % 2 ? std::to_string(rng() % 90 + 5) + "x" + std::to_string(rng() % 40 + 3) + " mm"
                         : "Unclear";
    if (rng() % 2) {
        const double v = static_cast<double>(rng() % 300) / 10.0;
        roi.suv_max = v;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", v);
        roi.suv_max_text = buf;
    } else {
        roi.suv_max_text = "Unclear";
    }
    roi.density = rng() % 3 ? phrase() : "";
    roi.morphology = rng() % 3 ? phrase() : "";
    roi.fdg_uptake = phrase();
    roi.top3_diseases = list();
    roi.top3_examinations = list();
    roi.physical_region = physical_region_from_int(static_cast<int>(rng() % 3) + 1);
    roi.note = phrase() + ". " + phrase() + ".";
    return roi;
}

}  // namespace

TEST_CASE("the cecum reference annotation parses field by field") {
    const GroundTruthRoI roi = parse_annotation(kCecumLine);
    CHECK(roi.anatomic_region == "Cecum");
    CHECK(roi.lesion_type == "Focal hypermetabolism");
    CHECK(roi.size == "Unclear");
    REQUIRE(roi.suv_max.has_value());
    CHECK(*roi.suv_max == Catch::Approx(12.3).margin(1e-12));
    CHECK(roi.density == "Soft tissue density");
    CHECK(roi.morphology == "Focal");
    CHECK(roi.fdg_uptake == "Very intense hypermetabolism");
    REQUIRE(roi.top3_diseases.size() == 3);
    CHECK(roi.top3_diseases[0] == "Colon cancer (cecum)");
    CHECK(roi.top3_diseases[1] == "Inflammatory bowel disease (Crohn's disease)");
    CHECK(roi.top3_diseases[2] == "Appendicitis/Abscess");
    REQUIRE(roi.top3_examinations.size() == 3);
    CHECK(roi.top3_examinations[1] == "Abdominal MRI/CT");
    CHECK(roi.physical_region == PhysicalRegion::kAbdomenPelvis);
    CHECK(roi.note.starts_with("Very intense focal FDG uptake"));
}

TEST_CASE("serialize then parse is the identity") {
    std::mt19937 rng(2026);
    for (int round = 0; round < 300; ++round) {
        const GroundTruthRoI roi = random_roi(rng);
        const std::string line = serialize_annotation(roi);
        const GroundTruthRoI back = parse_annotation(line);
        CHECK(back.anatomic_region == roi.anatomic_region);
        CHECK(back.lesion_type == roi.lesion_type);
        CHECK(back.size == roi.size);
        CHECK(back.suv_max_text == roi.suv_max_text);
        CHECK(back.suv_max == roi.suv_max);
        CHECK(back.density == roi.density);
        CHECK(back.morphology == roi.morphology);
        CHECK(back.fdg_uptake == roi.fdg_uptake);
        CHECK(back.top3_diseases == roi.top3_diseases);
        CHECK(back.top3_examinations == roi.top3_examinations);
        CHECK(back.physical_region == roi.physical_region);
        CHECK(back.note == roi.note);
        // and serialization of the round-tripped record is byte-identical
        CHECK(serialize_annotation(back) == line);
    }
}

TEST_CASE("annotation parse errors carry field and byte positions") {
    SECTION("unbracketed field") {
        try {
            parse_annotation("[a] - b - [c]");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.field_index() == 1);
            CHECK(std::string(e.what()).find("field 1") != std::string::npos);
        }
    }
    SECTION("wrong field count") {
        CHECK_THROWS_AS(parse_annotation("[a] - [b] - [c]"), ParseError);
    }
    SECTION("unbalanced bracket") {
        CHECK_THROWS_AS(
            parse_annotation("[a] - [b] - [c] - [1] - [d] - [e] - [f] - [g] - [h] - [1] - [note"),
            ParseError);
    }
    SECTION("list field with four items") {
        CHECK_THROWS_AS(
            parse_annotation("[a] - [b] - [c] - [1] - [d] - [e] - [f] - [w, x, y, z] - [h] - [1] "
                             "- [note]"),
            ParseError);
    }
    SECTION("physical region outside 1..3") {
        CHECK_THROWS_AS(
            parse_annotation("[a] - [b] - [c] - [1] - [d] - [e] - [f] - [g] - [h] - [7] - [note]"),
            ParseError);
    }
}

TEST_CASE("list fields split only on top-level commas") {
    const auto items = detail::split_list_field("Colon cancer (cecum, distal), B [x, y], C");
    REQUIRE(items.size() == 3);
    CHECK(items[0] == "Colon cancer (cecum, distal)");
    CHECK(items[1] == "B [x, y]");
    CHECK(items[2] == "C");
}

TEST_CASE("ground-truth corpus loads from JSON") {
    const nlohmann::json doc = nlohmann::json::parse(R"([
      {
        "report_id": "case-1",
        "physical_region": 3,
        "report_text": "Very intense focal FDG uptake in the cecum.",
        "rois": [
          "[Cecum] - [Focal hypermetabolism] - [Unclear] - [12.3] - [Soft tissue density] - [Focal] - [Very intense hypermetabolism] - [Colon cancer] - [Colonoscopy] - [3] - [note]"
        ]
      },
      {
        "report_id": "case-2",
        "physical_region": 1,
        "report_text": "",
        "rois": [
          {
            "anatomic_region": "tuyến giáp",
            "lesion_type": "nốt giảm âm",
            "size": "8 mm",
            "suv_max": "Unclear",
            "density": "",
            "morphology": "khu trú",
            "fdg_uptake": "tăng chuyển hóa nhẹ",
            "top3_diseases": ["viêm giáp"],
            "top3_examinations": ["siêu âm"],
            "physical_region": 1,
            "note": "theo dõi"
          }
        ]
      }
    ])");
    const auto corpus = load_ground_truth(doc);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].report_id == "case-1");
    REQUIRE(corpus[0].rois.size() == 1);
    CHECK(corpus[0].rois[0].suv_max == 12.3);
    CHECK(corpus[1].rois[0].anatomic_region == "tuyến giáp");
    CHECK(corpus[1].rois[0].suv_max == std::nullopt);

    SECTION("duplicate report ids are rejected") {
        nlohmann::json dup = doc;
        dup[1]["report_id"] = "case-1";
        CHECK_THROWS_AS(load_ground_truth(dup), ValidationError);
    }
}

TEST_CASE("region ranges use floor boundaries and a fixed overlap") {
    const RegionSplit split = compute_region_ranges(313);
    CHECK(split.head_neck.begin == 0);
    CHECK(split.head_neck.end == 78);
    CHECK(split.chest.begin == 63);
    CHECK(split.chest.end == 187);
    CHECK(split.abdomen_pelvis.begin == 172);
    CHECK(split.abdomen_pelvis.end == 313);

    for (const int total : {60, 100, 313, 1000}) {
        const RegionSplit s = compute_region_ranges(total);
        CHECK(s.head_neck.begin == 0);
        CHECK(s.head_neck.end == total / 4);
        CHECK(s.head_neck.end - s.chest.begin == 15);
        CHECK(s.chest.end - s.abdomen_pelvis.begin == 15);
        CHECK(s.abdomen_pelvis.end == total);
    }
}

TEST_CASE("region ranges reject degenerate inputs") {
    CHECK_THROWS_AS(compute_region_ranges(0), ValidationError);
    CHECK_THROWS_AS(compute_region_ranges(59), ValidationError);  // < 4x overlap
    SplitConfig config;
    config.head_fraction = 0.7;
    config.chest_end_fraction = 0.6;
    CHECK_THROWS_AS(compute_region_ranges(313, config), ValidationError);
}

TEST_CASE("roi-to-region assignment prefers containment, then overlap") {
    const RegionSplit split = compute_region_ranges(313);
    auto box = [](double z_min, double z_max) {
        BoundingBox3D b;
        b.x_min = 0;
        b.y_min = 0;
        b.x_max = 10;
        b.y_max = 10;
        b.z_min = z_min;
        b.z_max = z_max;
        return b;
    };
    // fully inside head-neck
    CHECK(assign_roi_to_region(box(5, 40), split) == PhysicalRegion::kHeadNeck);
    // inside the head/chest overlap zone: contained in both, lower index wins
    CHECK(assign_roi_to_region(box(64, 70), split) == PhysicalRegion::kHeadNeck);
    // straddles the head/chest boundary: only chest contains it
    CHECK(assign_roi_to_region(box(70, 80), split) == PhysicalRegion::kChest);
    // contained nowhere: maximum z-overlap decides (chest 112 vs head 3)
    CHECK(assign_roi_to_region(box(75, 190), split) == PhysicalRegion::kChest);
    // overlap tie (head 30, chest 30): lower region index wins
    CHECK(assign_roi_to_region(box(48, 93), split) == PhysicalRegion::kHeadNeck);
    // outside the volume entirely
    CHECK_THROWS_AS(assign_roi_to_region(box(400, 410), split), ValidationError);
}
