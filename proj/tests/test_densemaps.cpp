#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/postprocess.hpp"
#include "textspot/rng.hpp"

using namespace textspot;

namespace {

// A valid one-instance annotation: axis-aligned word with `n` square chars.
SceneAnnotation simple_word(int n, double char_size = 24.0, double theta = 0.0) {
  SceneAnnotation ann;
  ann.image_id = "fixture";
  ann.width = 512;
  ann.height = 512;
  Charset cs;
  Point center{256, 256};
  RotatedBox word(center, n * char_size + 8, 1.2 * char_size, theta);
  Point axis = word.axis();
  SceneInstance inst;
  inst.shape = word;
  std::vector<CharBoxLabel> chars;
  for (int i = 0; i < n; ++i) {
    double off = (i + 0.5) * char_size - n * char_size / 2;
    inst.transcript.push_back(cs.symbol_of(i % 26));
    chars.push_back({RotatedBox(center + axis * off, 0.8 * char_size, 0.9 * char_size, theta),
                     i % 26});
  }
  inst.chars = std::move(chars);
  ann.instances.push_back(std::move(inst));
  return ann;
}

}  // namespace

TEST_SUITE("densemaps") {

TEST_CASE("map cell centers") {
  CHECK(map_cell_to_image_point(0, 0, 4).x == doctest::Approx(2.0));
  CHECK(map_cell_to_image_point(0, 0, 4).y == doctest::Approx(2.0));
  CHECK(map_cell_to_image_point(10, 10, 4).x == doctest::Approx(42.0));
  CHECK(map_cell_to_image_point(10, 10, 4).y == doctest::Approx(42.0));
  CHECK(map_cell_to_image_point(3, 7, 1).x == doctest::Approx(3.5));
  CHECK(map_cell_to_image_point(3, 7, 1).y == doctest::Approx(7.5));
  CHECK_THROWS_AS(map_cell_to_image_point(-1, 0, 4), std::out_of_range);
  DenseMapStack m = DenseMapStack::zeros(4, 4);
  CHECK_THROWS_AS(m.cell_center(4, 0), std::out_of_range);
}

TEST_CASE("decode_geometry: centered axis-aligned code") {
  RotatedBox b = decode_geometry({2, 2}, {2, 2, 2, 2, 0});
  CHECK(b.center.x == doctest::Approx(2.0));
  CHECK(b.center.y == doctest::Approx(2.0));
  CHECK(b.width == doctest::Approx(4.0));
  CHECK(b.height == doctest::Approx(4.0));
}

TEST_CASE("decode_geometry: off-center axis-aligned code") {
  // top 1, bottom 3, left 2, right 2 from (10,4): box (8,3)-(12,7)
  RotatedBox b = decode_geometry({10, 4}, {1, 3, 2, 2, 0});
  CHECK(b.center.x == doctest::Approx(10.0));
  CHECK(b.center.y == doctest::Approx(5.0));
  CHECK(b.width == doctest::Approx(4.0));
  CHECK(b.height == doctest::Approx(4.0));
}

TEST_CASE("decode_geometry: same distances rotated by pi/2 about the point") {
  RotatedBox b = decode_geometry({10, 4}, {1, 3, 2, 2, kPi / 2});
  // rotate the theta=0 offsets about p=(10,4) by pi/2: center lands at (9,4)
  CHECK(b.center.x == doctest::Approx(9.0));
  CHECK(b.center.y == doctest::Approx(4.0));
  CHECK(b.width == doctest::Approx(4.0));
  CHECK(b.height == doctest::Approx(4.0));
  CHECK(b.theta == doctest::Approx(kPi / 2));
}

TEST_CASE("decode_geometry rejects degenerate codes") {
  CHECK_THROWS_AS(decode_geometry({0, 0}, {0, 0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(decode_geometry({0, 0}, {1, 1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(decode_geometry({0, 0}, {-1, 2, 1, 1, 0}), std::invalid_argument);
}

TEST_CASE("encode_geometry: symmetric and shifted cases") {
  GeometryCode g = encode_geometry({0, 0}, RotatedBox({0, 0}, 4, 2, 0));
  CHECK(g.d_top == doctest::Approx(1.0));
  CHECK(g.d_bottom == doctest::Approx(1.0));
  CHECK(g.d_left == doctest::Approx(2.0));
  CHECK(g.d_right == doctest::Approx(2.0));

  GeometryCode h = encode_geometry({8.5, 3.5}, RotatedBox({10, 5}, 4, 4, 0));
  CHECK(h.d_top == doctest::Approx(0.5));
  CHECK(h.d_bottom == doctest::Approx(3.5));
  CHECK(h.d_left == doctest::Approx(0.5));
  CHECK(h.d_right == doctest::Approx(3.5));

  CHECK_THROWS_AS(encode_geometry({100, 100}, RotatedBox({0, 0}, 4, 2, 0)),
                  std::invalid_argument);
}

TEST_CASE("decode is the exact inverse of encode on 1e4 random pairs") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    RotatedBox b = oracle::random_box(rng, 500.0);
    // random point strictly inside
    Point local{rng.uniform(-0.49, 0.49) * b.width, rng.uniform(-0.49, 0.49) * b.height};
    Point p = b.center + rotated(local, b.theta);
    RotatedBox back = decode_geometry(p, encode_geometry(p, b));
    CHECK(std::abs(back.center.x - b.center.x) < 1e-6);
    CHECK(std::abs(back.center.y - b.center.y) < 1e-6);
    CHECK(std::abs(back.width - b.width) < 1e-6);
    CHECK(std::abs(back.height - b.height) < 1e-6);
    CHECK(std::abs(back.theta - b.theta) < 1e-6);
  }
}

TEST_CASE("empty annotation encodes to an all-background stack") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "empty";
  ann.width = 64;
  ann.height = 64;
  EncodedScene enc = encode_ground_truth(ann, cs);
  enc.stack.validate();
  CHECK(decode_word_candidates(enc.stack).empty());
  CHECK(decode_char_candidates(enc.stack).empty());
}

TEST_CASE("single word round trip: boxes at IoU >= 0.99 with one-hot labels") {
  Charset cs;
  SceneAnnotation ann = simple_word(3, 24.0, 0.35);
  EncodedScene enc = encode_ground_truth(ann, cs);
  enc.stack.validate();

  auto words = nms(decode_word_candidates(enc.stack), 0.5);
  REQUIRE(words.size() == 1);
  CHECK(iou(words[0].box, std::get<RotatedBox>(ann.instances[0].shape)) >= 0.99);

  auto chars = nms(decode_char_candidates(enc.stack), 0.5);
  REQUIRE(chars.size() == 3);
  const auto& gt_chars = *ann.instances[0].chars;
  for (const CharDetection& det : chars) {
    double best = 0;
    int best_label = -1;
    for (const CharBoxLabel& g : gt_chars) {
      double v = iou(det.box, g.box);
      if (v > best) {
        best = v;
        best_label = g.class_id;
      }
    }
    CHECK(best >= 0.99);
    CHECK(det.label == best_label);
    CHECK(det.class_scores[static_cast<size_t>(det.label)] == doctest::Approx(1.0));
  }
}

TEST_CASE("shrink rule: 8x8 char at stride 4 keeps only the central 3.2px region") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "shrink";
  ann.width = 16;
  ann.height = 16;
  SceneInstance inst;
  inst.transcript = "A";

  SUBCASE("box centered on a cell center: exactly one positive cell") {
    inst.shape = RotatedBox({6, 6}, 8, 8, 0);
    inst.chars = std::vector<CharBoxLabel>{{RotatedBox({6, 6}, 8, 8, 0), 0}};
    ann.instances = {inst};
    EncodedScene enc = encode_ground_truth(ann, cs, 4, 0.3);
    size_t hw = enc.stack.cell_count();
    int positives = 0;
    for (int y = 0; y < enc.stack.height; ++y) {
      for (int x = 0; x < enc.stack.width; ++x) {
        if (enc.stack.char_seg[hw + static_cast<size_t>(y) * enc.stack.width + x] > 0.5f) {
          ++positives;
          CHECK(x == 1);
          CHECK(y == 1);  // cell center (6,6)
        }
      }
    }
    CHECK(positives == 1);
  }

  SUBCASE("box centered between cells: central region misses every center") {
    inst.shape = RotatedBox({4, 4}, 8, 8, 0);
    inst.chars = std::vector<CharBoxLabel>{{RotatedBox({4, 4}, 8, 8, 0), 0}};
    ann.instances = {inst};
    EncodedScene enc = encode_ground_truth(ann, cs, 4, 0.3);
    size_t hw = enc.stack.cell_count();
    for (size_t cell = 0; cell < hw; ++cell) CHECK(enc.stack.char_seg[hw + cell] == 0.0f);
  }
}

TEST_CASE("overlapping instances: the cell goes to the smaller one") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "tie";
  ann.width = 64;
  ann.height = 64;
  RotatedBox big({20, 20}, 40, 40, 0);
  RotatedBox small({20, 20}, 12, 12, 0);
  for (const RotatedBox& b : {big, small}) {
    SceneInstance inst;
    inst.shape = b;
    inst.transcript = "A";
    inst.chars = std::vector<CharBoxLabel>{{b, 0}};
    ann.instances.push_back(std::move(inst));
  }
  EncodedScene enc = encode_ground_truth(ann, cs);
  // cell (4,4) has center (18,18), inside both shrunken regions
  GeometryCode g = enc.stack.geometry_at(enc.stack.det_geo, 4, 4);
  RotatedBox owner = decode_geometry(enc.stack.cell_center(4, 4), g);
  CHECK(iou(owner, small) > 0.999);
}

TEST_CASE("dont_care regions land in the ignore mask, not the maps") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "dc";
  ann.width = 64;
  ann.height = 64;
  SceneInstance inst;
  inst.shape = RotatedBox({32, 32}, 24, 24, 0);
  inst.transcript = "###";
  inst.dont_care = true;
  ann.instances.push_back(std::move(inst));
  EncodedScene enc = encode_ground_truth(ann, cs);
  CHECK(decode_word_candidates(enc.stack).empty());
  int marked = 0;
  for (uint8_t v : enc.ignore) marked += v;
  CHECK(marked > 0);
}

TEST_CASE("annotation validation names the offending instance") {
  Charset cs;
  SceneAnnotation ann = simple_word(3);
  ann.instances[0].chars->pop_back();  // now 2 boxes for a 3-symbol transcript
  CHECK_THROWS_WITH_AS(ann.validate(cs),
                       doctest::Contains("instances[0]"), std::invalid_argument);
  CHECK_THROWS_AS(encode_ground_truth(ann, cs), std::invalid_argument);
}

TEST_CASE("gate semantics on a hand-built 4x4 stack") {
  DenseMapStack m = DenseMapStack::zeros(4, 4);
  size_t hw = m.cell_count();
  auto set_word = [&](int x, int y, float p) {
    m.det_seg[hw + static_cast<size_t>(y) * 4 + x] = p;
    m.set_geometry(m.det_geo, y, x, {3, 3, 3, 3, 0.1});
  };
  set_word(0, 0, 0.951f);
  set_word(1, 0, 0.95f);   // exactly at the gate: excluded
  set_word(2, 0, 0.9499f);
  set_word(3, 3, 0.96f);
  auto words = decode_word_candidates(m, 0.95);
  CHECK(words.size() == 2);

  SUBCASE("threshold 1.0 excludes everything") {
    CHECK(decode_word_candidates(m, 1.0).empty());
  }
  SUBCASE("single gated char cell yields exactly one candidate") {
    m.char_seg[hw + 5] = 0.96f;
    m.set_geometry(m.char_geo, 1, 1, {2, 2, 2, 2, 0});
    m.char_cls[static_cast<size_t>(7) * hw + 5] = 1.0f;
    auto chars = decode_char_candidates(m, 0.95);
    REQUIRE(chars.size() == 1);
    CHECK(chars[0].label == 7);
    CHECK(chars[0].score == doctest::Approx(0.96));
  }
}

TEST_CASE("decode candidate count is monotone non-increasing in the threshold") {
  Charset cs;
  SceneAnnotation ann = simple_word(4, 28.0, -0.4);
  EncodedScene enc = encode_ground_truth(ann, cs);
  Rng rng(3);
  size_t hw = enc.stack.cell_count();
  // jitter probabilities so thresholds bite at different cells
  for (size_t cell = 0; cell < hw; ++cell) {
    if (enc.stack.det_seg[hw + cell] > 0.5f) {
      float p = static_cast<float>(0.9 + 0.1 * rng.next_double());
      enc.stack.det_seg[hw + cell] = p;
      enc.stack.det_seg[cell] = 1.0f - p;
    }
  }
  size_t prev = decode_word_candidates(enc.stack, 0.0).size();
  CHECK(prev <= enc.stack.cell_count());
  for (double thr : {0.5, 0.9, 0.93, 0.96, 0.99, 1.0}) {
    size_t cur = decode_word_candidates(enc.stack, thr).size();
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("hostile external maps: bad geometry cells are skipped, not fatal") {
  DenseMapStack m = DenseMapStack::zeros(2, 2);
  size_t hw = m.cell_count();
  m.det_seg[hw + 0] = 0.99f;
  m.set_geometry(m.det_geo, 0, 0, {-1, 3, 3, 3, 0});  // negative distance
  m.det_seg[hw + 1] = 0.99f;
  m.set_geometry(m.det_geo, 0, 1, {std::nanf(""), 3, 3, 3, 0});
  m.det_seg[hw + 2] = 0.99f;
  m.set_geometry(m.det_geo, 1, 0, {3, 3, 3, 3, 0});  // the only sane cell
  auto words = decode_word_candidates(m, 0.95);
  REQUIRE(words.size() == 1);
  CHECK(words[0].box.center.y == doctest::Approx(6.0));
}

TEST_CASE("stack validation catches bad softmax groups") {
  DenseMapStack m = DenseMapStack::zeros(2, 2);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);  // all-zero groups don't sum to 1
  size_t hw = m.cell_count();
  std::fill(m.det_seg.begin(), m.det_seg.begin() + static_cast<std::ptrdiff_t>(hw), 1.0f);
  std::fill(m.char_seg.begin(), m.char_seg.begin() + static_cast<std::ptrdiff_t>(hw), 1.0f);
  std::fill(m.char_cls.begin(), m.char_cls.end(), 1.0f / 68);
  CHECK_NOTHROW(m.validate());
}

}  // TEST_SUITE
