#include <doctest.h>

#include "textspot/json_io.hpp"
#include "textspot/synthgen.hpp"

using namespace textspot;

TEST_SUITE("synthgen") {

TEST_CASE("instance count range [0,0] gives an empty scene") {
  SynthConfig cfg;
  cfg.min_instances = 0;
  cfg.max_instances = 0;
  SynthResult r = generate_scene(cfg, 0);
  CHECK(r.scene.instances.empty());
  CHECK(r.placement_failures == 0);
}

TEST_CASE("fixed seed reproduces the annotation byte for byte") {
  SynthConfig cfg;
  cfg.seed = 99;
  std::string a = annotation_to_json(generate_scene(cfg, 3).scene).dump(2);
  std::string b = annotation_to_json(generate_scene(cfg, 3).scene).dump(2);
  CHECK(a == b);
  cfg.seed = 100;
  std::string c = annotation_to_json(generate_scene(cfg, 3).scene).dump(2);
  CHECK(a != c);
}

TEST_CASE("same config generates identical corpora") {
  SynthConfig cfg;
  cfg.seed = 5;
  auto c1 = generate_corpus(cfg, 5);
  auto c2 = generate_corpus(cfg, 5);
  REQUIRE(c1.size() == c2.size());
  for (size_t i = 0; i < c1.size(); ++i) {
    CHECK(annotation_to_json(c1[i].scene) == annotation_to_json(c2[i].scene));
  }
}

TEST_CASE("every word carries exactly length-many char boxes that overlap it") {
  Charset cs;
  SynthConfig cfg;
  cfg.seed = 31;
  for (auto& r : generate_corpus(cfg, 20)) {
    for (const SceneInstance& inst : r.scene.instances) {
      if (inst.dont_care) {
        CHECK_FALSE(inst.chars.has_value());
        continue;
      }
      REQUIRE(inst.chars.has_value());
      CHECK(inst.chars->size() == cs.normalize(inst.transcript).length());
      for (const CharBoxLabel& c : *inst.chars) {
        CHECK(iou(Shape(c.box), inst.shape) > 0.0);
      }
    }
  }
}

TEST_CASE("instances are pairwise disjoint; chars overlap only their own instance") {
  SynthConfig cfg;
  cfg.seed = 47;
  for (auto& r : generate_corpus(cfg, 30)) {
    const auto& instances = r.scene.instances;
    for (size_t i = 0; i < instances.size(); ++i) {
      for (size_t j = i + 1; j < instances.size(); ++j) {
        CHECK(iou(instances[i].shape, instances[j].shape) == 0.0);
      }
      if (!instances[i].chars.has_value()) continue;
      for (const CharBoxLabel& c : *instances[i].chars) {
        for (size_t j = 0; j < instances.size(); ++j) {
          double v = iou(Shape(c.box), instances[j].shape);
          if (j == i) {
            CHECK(v > 0.0);
          } else {
            CHECK(v == 0.0);
          }
        }
      }
    }
  }
}

TEST_CASE("100 scenes pass full annotation validation") {
  Charset cs;
  SynthConfig cfg;
  cfg.seed = 2024;
  for (auto& r : generate_corpus(cfg, 100)) {
    CHECK_NOTHROW(r.scene.validate(cs));
    CHECK(r.scene.width == cfg.image_width);
    for (const SceneInstance& inst : r.scene.instances) {
      Aabb bb = aabb_of(inst.shape);
      CHECK(bb.min_x >= 0.0);
      CHECK(bb.min_y >= 0.0);
      CHECK(bb.max_x <= cfg.image_width);
      CHECK(bb.max_y <= cfg.image_height);
    }
  }
}

TEST_CASE("curved instances are polygons with tangent-rotated characters") {
  SynthConfig cfg;
  cfg.seed = 8;
  cfg.curved_fraction = 1.0;
  cfg.min_word_len = 4;
  cfg.max_word_len = 6;
  cfg.dont_care_fraction = 0.0;
  int curved_seen = 0;
  for (auto& r : generate_corpus(cfg, 10)) {
    for (const SceneInstance& inst : r.scene.instances) {
      if (!std::holds_alternative<Polygon>(inst.shape)) continue;
      ++curved_seen;
      const auto& chars = *inst.chars;
      // consecutive characters turn by a consistent small step
      for (size_t i = 1; i + 1 < chars.size(); ++i) {
        double d1 = normalize_angle(chars[i].box.theta - chars[i - 1].box.theta);
        double d2 = normalize_angle(chars[i + 1].box.theta - chars[i].box.theta);
        CHECK(std::abs(d1 - d2) < 1e-6);
        CHECK(std::abs(d1) > 1e-4);
        CHECK(std::abs(d1) < 0.5);
      }
    }
  }
  CHECK(curved_seen > 0);
}

TEST_CASE("bad configs are rejected") {
  SynthConfig cfg;
  cfg.min_instances = 5;
  cfg.max_instances = 2;
  CHECK_THROWS_AS(generate_scene(cfg, 0), std::invalid_argument);
  SynthConfig cfg2;
  cfg2.curved_fraction = 1.5;
  CHECK_THROWS_AS(generate_scene(cfg2, 0), std::invalid_argument);
}

}  // TEST_SUITE
