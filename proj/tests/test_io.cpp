#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "textspot/icdar_io.hpp"
#include "textspot/json_io.hpp"
#include "textspot/rng.hpp"
#include "textspot/svg.hpp"
#include "textspot/synthgen.hpp"
#include "textspot/tensor_io.hpp"

using namespace textspot;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    auto tick = std::chrono::steady_clock::now().time_since_epoch().count();
    path = fs::temp_directory_path() /
           ("textspot_test_" + std::to_string(static_cast<uint64_t>(tick) % 100000000));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DenseMapStack random_stack(int h, int w, uint64_t seed) {
  DenseMapStack m = DenseMapStack::zeros(h, w);
  Rng rng(seed);
  for (auto* plane : {&m.det_seg, &m.det_geo, &m.char_seg, &m.char_geo, &m.char_cls}) {
    for (float& v : *plane) v = static_cast<float>(rng.next_double());
  }
  return m;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("tensor round trip is bit-exact") {
  TempDir tmp;
  DenseMapStack m = random_stack(8, 8, 4242);
  fs::path p = tmp.path / "stack.cnmp";
  write_stack(p, m);
  DenseMapStack back = read_stack(p);
  CHECK(back.height == m.height);
  CHECK(back.width == m.width);
  CHECK(back.det_seg == m.det_seg);
  CHECK(back.det_geo == m.det_geo);
  CHECK(back.char_seg == m.char_seg);
  CHECK(back.char_geo == m.char_geo);
  CHECK(back.char_cls == m.char_cls);
  // write -> read -> write reproduces the file byte for byte
  fs::path p2 = tmp.path / "stack2.cnmp";
  write_stack(p2, back);
  CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("bad magic is a distinct error") {
  TempDir tmp;
  fs::path p = tmp.path / "bad.cnmp";
  write_stack(p, random_stack(4, 4, 7));
  std::string bytes = slurp(p);
  bytes[0] = 'X';
  bytes[1] = 'X';
  spit(p, bytes);
  try {
    read_tensor(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::BadMagic);
  }
}

TEST_CASE("truncated payload is a distinct error") {
  TempDir tmp;
  fs::path p = tmp.path / "short.cnmp";
  write_stack(p, random_stack(4, 4, 7));
  std::string bytes = slurp(p);
  bytes.resize(bytes.size() - 4);
  spit(p, bytes);
  try {
    read_tensor(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::Truncated);
  }
}

TEST_CASE("channel-count mismatch is a distinct error") {
  TempDir tmp;
  fs::path p = tmp.path / "chan.cnmp";
  TensorFile t;
  t.channels = 3;
  t.height = 2;
  t.width = 2;
  t.planes = {{"det_seg", 0, 2}, {"extra", 2, 1}};
  t.data.assign(12, 0.5f);
  write_tensor(p, t);
  try {
    read_stack(p);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::ChannelMismatch);
  }
}

TEST_CASE("bad version and bad manifest are distinct errors") {
  TempDir tmp;
  fs::path p = tmp.path / "v.cnmp";
  write_stack(p, random_stack(4, 4, 7));
  std::string bytes = slurp(p);
  SUBCASE("version") {
    bytes[4] = 9;
    spit(p, bytes);
    try {
      read_tensor(p);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoError::Kind::BadVersion);
    }
  }
  SUBCASE("manifest channel range") {
    TensorFile t;
    t.channels = 2;
    t.height = 1;
    t.width = 1;
    t.planes = {{"p", 1, 4}};  // exceeds the 2 declared channels
    t.data.assign(2, 0.0f);
    fs::path q = tmp.path / "m.cnmp";
    CHECK_THROWS_AS(write_tensor(q, t), IoError);  // writer also validates size
    t.data.assign(2, 0.0f);
    t.planes = {{"p", 0, 2}};
    write_tensor(q, t);
    std::string mb = slurp(q);
    // corrupt the plane channel_count field (offset: 24 header + 4 len + 1 name + 4 offset)
    mb[24 + 4 + 1 + 4] = 9;
    spit(q, mb);
    try {
      read_tensor(q);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.kind() == IoError::Kind::BadManifest);
    }
  }
}

TEST_CASE("missing file is a distinct error") {
  try {
    read_tensor("/nonexistent/zzz.cnmp");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::MissingFile);
  }
}

TEST_CASE("ignore mask rides in a single-plane tensor") {
  TempDir tmp;
  std::vector<uint8_t> mask{0, 1, 1, 0};
  fs::path p = tmp.path / "ig.cnmp";
  write_ignore_mask(p, mask, 2, 2);
  TensorFile t = read_tensor(p);
  CHECK(t.channels == 1);
  CHECK(t.planes.size() == 1);
  CHECK(t.planes[0].name == "ignore");
  CHECK(t.data == std::vector<float>{0, 1, 1, 0});
}

TEST_CASE("annotation JSON round trip preserves everything") {
  Charset cs;
  SynthConfig cfg;
  cfg.seed = 77;
  SceneAnnotation ann = generate_scene(cfg, 0).scene;
  json j = annotation_to_json(ann);
  SceneAnnotation back = annotation_from_json(j, cs);
  CHECK(back.image_id == ann.image_id);
  CHECK(back.width == ann.width);
  REQUIRE(back.instances.size() == ann.instances.size());
  for (size_t i = 0; i < ann.instances.size(); ++i) {
    const SceneInstance& a = ann.instances[i];
    const SceneInstance& b = back.instances[i];
    CHECK(a.transcript == b.transcript);
    CHECK(a.dont_care == b.dont_care);
    CHECK(iou(a.shape, b.shape) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.chars.has_value() == b.chars.has_value());
    if (a.chars.has_value()) {
      REQUIRE(a.chars->size() == b.chars->size());
      for (size_t c = 0; c < a.chars->size(); ++c) {
        CHECK((*a.chars)[c].class_id == (*b.chars)[c].class_id);
        CHECK(std::abs((*a.chars)[c].box.center.x - (*b.chars)[c].box.center.x) < 1e-9);
        CHECK(std::abs((*a.chars)[c].box.theta - (*b.chars)[c].box.theta) < 1e-9);
      }
    }
  }
  // serialized form is stable
  CHECK(annotation_to_json(back) == j);
}

TEST_CASE("empty scene round trip") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "nothing";
  ann.width = 64;
  ann.height = 48;
  SceneAnnotation back = annotation_from_json(annotation_to_json(ann), cs);
  CHECK(back.image_id == "nothing");
  CHECK(back.width == 64);
  CHECK(back.height == 48);
  CHECK(back.instances.empty());
  CHECK(annotation_to_json(back) == annotation_to_json(ann));
}

TEST_CASE("dont_care round trip") {
  Charset cs;
  SceneAnnotation ann;
  ann.image_id = "dc";
  ann.width = 100;
  ann.height = 100;
  SceneInstance inst;
  inst.shape = RotatedBox({50, 50}, 30, 10, 0.2);
  inst.transcript = "###";
  inst.dont_care = true;
  ann.instances.push_back(inst);
  SceneAnnotation back = annotation_from_json(annotation_to_json(ann), cs);
  CHECK(back.instances[0].dont_care);
  CHECK(back.instances[0].transcript == "###");
}

TEST_CASE("schema violations name the offending JSON path") {
  Charset cs;
  json j{{"image_id", "x"}, {"width", 10}, {"height", 10},
         {"instances", json::array({json{{"shape", json{{"box", json{{"cx", 1}, {"cy", 1},
                                                                     {"w", 4}, {"h", 2},
                                                                     {"theta", 0}}}}},
                                         {"transcript", "AB"},
                                         {"chars", json::array()}}})}};
  try {
    annotation_from_json(j, cs);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(e.kind() == IoError::Kind::Schema);
    CHECK(std::string(e.what()).find("$.instances[0]") != std::string::npos);
  }
  json missing{{"width", 10}};
  CHECK_THROWS_AS(annotation_from_json(missing, cs), IoError);
}

TEST_CASE("config round trip and validation") {
  TempDir tmp;
  PipelineConfig cfg;
  cfg.word_gate = 0.9;
  cfg.nms_iou = 0.4;
  cfg.seed = 123;
  fs::path p = tmp.path / "cfg.json";
  write_config(p, cfg);
  PipelineConfig back = read_config(p);
  CHECK(back.word_gate == 0.9);
  CHECK(back.nms_iou == 0.4);
  CHECK(back.seed == 123);
  CHECK(back.charset_symbols == cfg.charset_symbols);

  json bad = config_to_json(cfg);
  bad["word_gate"] = 1.5;
  fs::path pb = tmp.path / "bad.json";
  write_json_file(pb, bad);
  CHECK_THROWS_AS(read_config(pb), IoError);
}

TEST_CASE("icdar text round trip") {
  std::vector<GtInstance> gts{{Shape(Polygon({{0, 0}, {40, 0}, {40, 10}, {0, 10}})), false, "WORD"},
                              {Shape(RotatedBox({100, 50}, 30, 12, 0)), true, "###"}};
  std::string text = icdar_lines(gts);
  auto back = parse_icdar(text, "mem");
  REQUIRE(back.size() == 2);
  CHECK_FALSE(back[0].dont_care);
  CHECK(back[0].transcript == "WORD");
  CHECK(back[1].dont_care);
  CHECK(iou(back[0].shape, gts[0].shape) > 0.95);  // integer rounding only
  CHECK_THROWS_AS(parse_icdar("1,2,3\n", "mem"), IoError);
}

TEST_CASE("lexicon JSON loads folded word lists per mode") {
  TempDir tmp;
  fs::path p = tmp.path / "lex.json";
  write_json_file(p, json{{"generic", {"alpha", "beta"}},
                          {"weak", {"gamma"}},
                          {"strong", {{"img1", {"delta", "DELTA"}}}}});
  LexiconSet lex = read_lexicon(p, LexiconMode::Strong);
  CHECK(lex.strong["img1"] == std::vector<std::string>{"DELTA"});
  CHECK(lex.generic == std::vector<std::string>{"ALPHA", "BETA"});
  CHECK(lex.words_for("img1").size() == 1);
  CHECK_THROWS_AS(lex.words_for("other"), std::invalid_argument);
}

TEST_CASE("svg overlay contains the boxes and labels") {
  Charset cs;
  std::vector<ScoredBox> words{{RotatedBox({50, 50}, 40, 16, 0.3), 0.99}};
  std::vector<CharDetection> chars;
  CharDetection c;
  c.box = RotatedBox({50, 50}, 12, 14, 0.3);
  c.label = 7;  // H
  chars.push_back(c);
  std::string svg = render_svg(200, 100, words, chars, cs);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polygon") != std::string::npos);
  CHECK(svg.find(">H</text>") != std::string::npos);
}

}  // TEST_SUITE
