// Command-line surface over the pipeline: synthetic corpus generation,
// ground-truth encoding, map-stack decoding, end-to-end spotting, the
// iterative harvest loop, and detection/E2E scoring.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textspot/textspot.hpp"

namespace fs = std::filesystem;
using namespace textspot;

namespace {

// sysexits-style codes so failure classes are distinguishable in scripts
constexpr int kExitUsage = 64;
constexpr int kExitDataErr = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitSoftware = 70;

struct CommonOpts {
  std::string config_path;
  PipelineConfig config;

  // explicit flags win over the config file
  std::optional<double> word_gate, char_gate, nms_iou;
  std::optional<uint64_t> seed;

  void load() {
    if (!config_path.empty()) config = read_config(config_path);
    if (word_gate) config.word_gate = *word_gate;
    if (char_gate) config.char_gate = *char_gate;
    if (nms_iou) config.nms_iou = *nms_iou;
    if (seed) config.seed = *seed;
    config.validate();
  }
};

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) {
    throw IoError(IoError::Kind::MissingFile, dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::MissingFile, "cannot open for writing: " + path.string());
  out << text;
}

std::vector<GtInstance> gt_instances_of(const SceneAnnotation& ann) {
  std::vector<GtInstance> out;
  out.reserve(ann.instances.size());
  for (const SceneInstance& inst : ann.instances) {
    out.push_back({inst.shape, inst.dont_care, inst.transcript});
  }
  return out;
}

std::vector<GtInstance> instances_as_gt(const std::vector<TextInstance>& preds) {
  std::vector<GtInstance> out;
  out.reserve(preds.size());
  for (const TextInstance& t : preds) out.push_back({t.shape, false, t.transcription});
  return out;
}

// --- synth ---------------------------------------------------------------

int cmd_synth(const CommonOpts& common, const SynthConfig& scfg, size_t count,
              const std::string& out_dir, bool with_tensors) {
  fs::create_directories(out_dir);
  Charset charset = common.config.charset();
  int failures = 0;
  for (size_t i = 0; i < count; ++i) {
    SynthResult r = generate_scene(scfg, i, charset);
    failures += r.placement_failures;
    write_annotation(fs::path(out_dir) / (r.scene.image_id + ".json"), r.scene);
    if (with_tensors) {
      EncodedScene enc = encode_ground_truth(r.scene, charset, common.config.stride,
                                             common.config.shrink);
      write_stack(fs::path(out_dir) / (r.scene.image_id + ".cnmp"), enc.stack);
    }
  }
  std::cout << "wrote " << count << " scene(s) to " << out_dir;
  if (failures > 0) std::cout << " (" << failures << " placement failure(s))";
  std::cout << "\n";
  return 0;
}

// --- encode ----------------------------------------------------------------

int cmd_encode(const CommonOpts& common, const std::string& ann_path, const std::string& out_path,
               const std::string& ignore_path) {
  Charset charset = common.config.charset();
  SceneAnnotation ann = read_annotation(ann_path, charset);
  EncodedScene enc = encode_ground_truth(ann, charset, common.config.stride, common.config.shrink);
  write_stack(out_path, enc.stack);
  if (!ignore_path.empty()) {
    write_ignore_mask(ignore_path, enc.ignore, enc.stack.height, enc.stack.width);
  }
  std::cout << "encoded " << ann.image_id << " -> " << out_path << " (" << enc.stack.width << "x"
            << enc.stack.height << " cells)\n";
  return 0;
}

// --- decode ----------------------------------------------------------------

int cmd_decode(const CommonOpts& common, const std::string& tensor_path,
               const std::string& out_path, const std::string& svg_path) {
  Charset charset = common.config.charset();
  DenseMapStack stack = read_stack(tensor_path, common.config.stride);
  std::string image_id = fs::path(tensor_path).stem().string();
  auto words = nms(decode_word_candidates(stack, common.config.word_gate), common.config.nms_iou);
  auto chars = nms(decode_char_candidates(stack, common.config.char_gate), common.config.nms_iou);
  write_json_file(out_path, detections_to_json(image_id, words, chars, charset));
  if (!svg_path.empty()) {
    write_text_file(svg_path, render_svg(stack.width * stack.stride, stack.height * stack.stride,
                                         words, chars, charset));
  }
  std::cout << image_id << ": " << words.size() << " word box(es), " << chars.size()
            << " char box(es)\n";
  return 0;
}

// --- e2e -------------------------------------------------------------------

int cmd_e2e(const CommonOpts& common, const std::string& tensor_path,
            const std::string& tensors_dir, const std::string& out_path,
            const std::string& icdar_path, int workers) {
  Charset charset = common.config.charset();
  if (!tensor_path.empty()) {
    DenseMapStack stack = read_stack(tensor_path, common.config.stride);
    std::string image_id = fs::path(tensor_path).stem().string();
    PipelineResult res = run_pipeline(stack, common.config, charset);
    write_json_file(out_path, instances_to_json(image_id, res.instances, charset));
    if (!icdar_path.empty()) write_icdar(icdar_path, instances_as_gt(res.instances));
    std::cout << image_id << ": " << res.instances.size() << " instance(s)\n";
    return 0;
  }
  std::vector<fs::path> files = sorted_files(tensors_dir, ".cnmp");
  fs::create_directories(out_path);
  if (!icdar_path.empty()) fs::create_directories(icdar_path);
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), workers, [&](size_t i) {
    try {
      DenseMapStack stack = read_stack(files[i], common.config.stride);
      std::string image_id = files[i].stem().string();
      PipelineResult res = run_pipeline(stack, common.config, charset);
      write_json_file(fs::path(out_path) / (image_id + ".json"),
                      instances_to_json(image_id, res.instances, charset));
      if (!icdar_path.empty()) {
        write_icdar(fs::path(icdar_path) / (image_id + ".txt"), instances_as_gt(res.instances));
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const std::string& err : errors) {
    if (!err.empty()) throw IoError(IoError::Kind::Schema, err);
  }
  std::cout << "processed " << files.size() << " stack(s) -> " << out_path << "\n";
  return 0;
}

// --- harvest -----------------------------------------------------------------

int cmd_harvest(const CommonOpts& common, const std::string& gt_dir, const std::string& out_dir,
                int steps, const std::string& detector_kind, const std::string& tensors_dir,
                double miss0, double spurious, double jitter_px, double size_jitter,
                const std::string& stats_path, bool no_early_stop) {
  Charset charset = common.config.charset();
  std::vector<SceneAnnotation> anns;
  for (const fs::path& p : sorted_files(gt_dir, ".json")) {
    anns.push_back(read_annotation(p, charset));
  }
  if (anns.empty()) {
    throw IoError(IoError::Kind::MissingFile, "no .json annotations under " + gt_dir);
  }
  DatasetState state = DatasetState::from_annotations(std::move(anns));

  DetectorFactory factory;
  if (detector_kind == "oracle") {
    uint64_t seed = common.config.seed;
    factory = [=](double fraction) {
      NoiseModel noise;
      noise.miss_rate = miss0 * (1.0 - fraction) * (1.0 - fraction);
      noise.spurious_rate = spurious;
      noise.center_jitter_px = jitter_px;
      noise.size_jitter_frac = size_jitter;
      return oracle_detector(noise, seed);
    };
  } else if (detector_kind == "replay") {
    if (tensors_dir.empty()) {
      throw CLI::ValidationError("--tensors is required with --detector replay");
    }
    DetectorFn det = replay_detector(tensors_dir, common.config);
    factory = [det](double) { return det; };
  } else {
    throw CLI::ValidationError("--detector must be 'oracle' or 'replay'");
  }

  HarvestOptions opts;
  opts.nms_iou = common.config.nms_iou;
  run_iterations(state, factory, steps, charset, opts, !no_early_stop);

  fs::create_directories(out_dir);
  for (size_t i = 0; i < state.images.size(); ++i) {
    SceneAnnotation out = state.images[i];
    for (size_t k = 0; k < out.instances.size(); ++k) {
      const HarvestedInstance& hi = state.harvest[i].instances[k];
      if (hi.accepted) {
        out.instances[k].chars = hi.chars;
      } else {
        out.instances[k].chars.reset();
      }
    }
    write_annotation(fs::path(out_dir) / (out.image_id + ".json"), out);
  }
  if (!stats_path.empty()) write_text_file(stats_path, stats_csv(state.stats));
  for (const StepStats& s : state.stats) {
    std::printf("step %d: %d/%d accepted (ratio %.4f)\n", s.step, s.words_accepted, s.words_total,
                s.ratio);
  }
  if (!state.skipped_images.empty()) {
    std::cout << state.skipped_images.size() << " image(s) skipped at the last step\n";
  }
  return 0;
}

// --- eval --------------------------------------------------------------------

std::map<std::string, std::vector<GtInstance>> load_gt(const std::string& path,
                                                       const Charset& charset) {
  std::map<std::string, std::vector<GtInstance>> out;
  fs::path p(path);
  if (fs::is_directory(p)) {
    for (const fs::path& f : sorted_files(p, ".json")) {
      SceneAnnotation ann = read_annotation(f, charset);
      out[ann.image_id] = gt_instances_of(ann);
    }
    for (const fs::path& f : sorted_files(p, ".txt")) {
      out[f.stem().string()] = read_icdar(f);
    }
  } else if (p.extension() == ".txt") {
    out[p.stem().string()] = read_icdar(p);
  } else {
    SceneAnnotation ann = read_annotation(p, charset);
    out[ann.image_id] = gt_instances_of(ann);
  }
  return out;
}

std::map<std::string, std::vector<TextInstance>> load_preds(const std::string& path) {
  std::map<std::string, std::vector<TextInstance>> out;
  auto add_json = [&](const fs::path& f) {
    PredictedImage img = instances_from_json(parse_json_file(f));
    out[img.image_id] = std::move(img.instances);
  };
  auto add_icdar = [&](const fs::path& f) {
    std::vector<TextInstance> insts;
    for (GtInstance& g : read_icdar(f)) {
      insts.push_back(TextInstance{std::move(g.shape), 1.0, {}, g.transcript, std::nullopt});
    }
    out[f.stem().string()] = std::move(insts);
  };
  fs::path p(path);
  if (fs::is_directory(p)) {
    for (const fs::path& f : sorted_files(p, ".json")) add_json(f);
    for (const fs::path& f : sorted_files(p, ".txt")) add_icdar(f);
  } else if (p.extension() == ".txt") {
    add_icdar(p);
  } else {
    add_json(p);
  }
  return out;
}

int cmd_eval(const CommonOpts& common, const std::string& preds_path, const std::string& gt_path,
             const std::string& mode_str, const std::string& lexicon_path, double iou_threshold,
             const std::string& kind, const std::string& out_path) {
  Charset charset = common.config.charset();
  LexiconMode mode = mode_from_letter(mode_str.empty() ? 'N' : mode_str[0]);
  LexiconSet lexicon;
  lexicon.mode = mode;
  std::string lex_file = !lexicon_path.empty() ? lexicon_path : common.config.lexicon_path;
  if (mode != LexiconMode::None) {
    if (lex_file.empty()) {
      throw CLI::ValidationError("--lexicon is required for mode " + mode_str);
    }
    lexicon = read_lexicon(lex_file, mode);
  }

  auto gts = load_gt(gt_path, charset);
  auto preds = load_preds(preds_path);

  MatchReport det_total, e2e_total;
  size_t images = 0;
  for (const auto& [image_id, gt] : gts) {
    ++images;
    static const std::vector<TextInstance> kNone;
    auto it = preds.find(image_id);
    const std::vector<TextInstance>& pred = it != preds.end() ? it->second : kNone;
    if (kind != "e2e") {
      std::vector<Shape> shapes;
      shapes.reserve(pred.size());
      for (const TextInstance& t : pred) shapes.push_back(t.shape);
      det_total += match_detections(shapes, gt, iou_threshold);
    }
    if (kind != "detection") {
      e2e_total += match_e2e(pred, gt, lexicon, image_id, charset, iou_threshold);
    }
  }
  for (const auto& [image_id, pred] : preds) {
    if (gts.count(image_id)) continue;
    // predictions with no ground-truth image count as false positives
    if (kind != "e2e") {
      MatchReport r;
      r.fp = static_cast<int>(pred.size());
      det_total += r;
    }
    if (kind != "detection") {
      MatchReport r;
      r.fp = static_cast<int>(pred.size());
      e2e_total += r;
    }
  }

  json report{{"images", images}, {"iou_threshold", iou_threshold},
              {"mode", std::string(1, mode_letter(mode))}};
  std::printf("%-10s %6s %6s %6s %8s %8s %8s\n", "task", "TP", "FP", "FN", "R", "P", "F");
  if (kind != "e2e") {
    det_total.finalize();
    report["detection"] = report_to_json(det_total);
    std::printf("%-10s %6d %6d %6d %8.4f %8.4f %8.4f\n", "detection", det_total.tp, det_total.fp,
                det_total.fn, det_total.recall, det_total.precision, det_total.f_measure);
  }
  if (kind != "detection") {
    e2e_total.finalize();
    report["e2e"] = report_to_json(e2e_total);
    std::printf("%-10s %6d %6d %6d %8.4f %8.4f %8.4f\n", "e2e", e2e_total.tp, e2e_total.fp,
                e2e_total.fn, e2e_total.recall, e2e_total.precision, e2e_total.f_measure);
  }
  if (!out_path.empty()) write_json_file(out_path, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-text spotting pipeline: dense-map encoding/decoding, NMS, grouping,"
               " lexicon correction, harvest simulation, and ICDAR-style scoring"};
  app.require_subcommand(1);

  CommonOpts common;

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic annotation corpus");
  SynthConfig scfg;
  size_t synth_n = 10;
  std::string synth_out = "corpus";
  bool synth_tensors = false;
  synth->add_option("--n", synth_n, "number of scenes");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", scfg.seed, "RNG seed");
  synth->add_option("--width", scfg.image_width, "image width (px)");
  synth->add_option("--height", scfg.image_height, "image height (px)");
  synth->add_option("--min-instances", scfg.min_instances, "min instances per scene");
  synth->add_option("--max-instances", scfg.max_instances, "max instances per scene");
  synth->add_option("--min-word-len", scfg.min_word_len, "min word length");
  synth->add_option("--max-word-len", scfg.max_word_len, "max word length");
  synth->add_option("--curved-frac", scfg.curved_fraction, "fraction of curved instances");
  synth->add_option("--dontcare-frac", scfg.dont_care_fraction, "fraction of dont_care instances");
  synth->add_flag("--tensors", synth_tensors, "also write ground-truth map stacks");
  synth->add_option("--config", common.config_path, "pipeline config JSON");

  // encode
  auto* encode = app.add_subcommand("encode", "encode an annotation into a ground-truth map stack");
  std::string enc_ann, enc_out, enc_ignore;
  encode->add_option("--ann", enc_ann, "annotation JSON")->required();
  encode->add_option("--out", enc_out, "output .cnmp tensor")->required();
  encode->add_option("--ignore-out", enc_ignore, "optional dont_care mask tensor");
  encode->add_option("--config", common.config_path, "pipeline config JSON");

  // decode
  auto* decode = app.add_subcommand("decode", "decode a map stack into word/char detections");
  std::string dec_tensor, dec_out = "detections.json", dec_svg;
  decode->add_option("--tensor", dec_tensor, "input .cnmp tensor")->required();
  decode->add_option("--out", dec_out, "output detections JSON");
  decode->add_option("--svg", dec_svg, "optional SVG overlay");
  decode->add_option("--config", common.config_path, "pipeline config JSON");
  decode->add_option("--word-gate", common.word_gate, "word confidence gate");
  decode->add_option("--char-gate", common.char_gate, "char confidence gate");
  decode->add_option("--nms-iou", common.nms_iou, "NMS IoU threshold");

  // e2e
  auto* e2e = app.add_subcommand("e2e", "decode stacks into text instances with transcriptions");
  std::string e2e_tensor, e2e_tensors, e2e_out = "instances.json", e2e_icdar;
  int e2e_workers = 1;
  e2e->add_option("--tensor", e2e_tensor, "single input .cnmp tensor");
  e2e->add_option("--tensors", e2e_tensors, "directory of .cnmp tensors");
  e2e->add_option("--out", e2e_out, "output JSON file (single) or directory");
  e2e->add_option("--icdar", e2e_icdar, "also export ICDAR-style text file(s)");
  e2e->add_option("--workers", e2e_workers, "parallel workers for directory mode");
  e2e->add_option("--config", common.config_path, "pipeline config JSON");

  // harvest
  auto* harvest = app.add_subcommand("harvest", "iterative character-label harvesting");
  std::string h_gt, h_out = "harvested", h_detector = "oracle", h_tensors, h_stats;
  int h_steps = 4;
  double h_miss0 = 0.15, h_spurious = 0.0, h_jitter = 0.0, h_size_jitter = 0.0;
  bool h_no_early_stop = false;
  harvest->add_option("--gt", h_gt, "directory of annotation JSONs")->required();
  harvest->add_option("--out", h_out, "output directory for harvested annotations");
  harvest->add_option("--steps", h_steps, "number of iterative steps");
  harvest->add_option("--detector", h_detector, "detector port: oracle|replay");
  harvest->add_option("--tensors", h_tensors, "tensor directory for --detector replay");
  harvest->add_option("--miss0", h_miss0, "oracle miss rate at zero supervision");
  harvest->add_option("--spurious", h_spurious, "oracle spurious rate per instance");
  harvest->add_option("--jitter", h_jitter, "oracle center jitter (px)");
  harvest->add_option("--size-jitter", h_size_jitter, "oracle size jitter fraction");
  harvest->add_option("--stats", h_stats, "write per-step stats CSV here");
  harvest->add_flag("--no-early-stop", h_no_early_stop, "always run all steps");
  harvest->add_option("--seed", common.seed, "oracle RNG seed");
  harvest->add_option("--config", common.config_path, "pipeline config JSON");

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string ev_preds, ev_gt, ev_mode = "N", ev_lexicon, ev_kind = "both", ev_out;
  double ev_iou = 0.5;
  eval->add_option("--preds", ev_preds, "predictions: JSON/ICDAR file or directory")->required();
  eval->add_option("--gt", ev_gt, "ground truth: JSON/ICDAR file or directory")->required();
  eval->add_option("--mode", ev_mode, "lexicon mode: N|S|W|G");
  eval->add_option("--lexicon", ev_lexicon, "lexicon JSON (required for S/W/G)");
  eval->add_option("--iou", ev_iou, "IoU threshold");
  eval->add_option("--kind", ev_kind, "detection|e2e|both");
  eval->add_option("--out", ev_out, "write report JSON here");
  eval->add_option("--config", common.config_path, "pipeline config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    common.load();
    if (synth->parsed()) return cmd_synth(common, scfg, synth_n, synth_out, synth_tensors);
    if (encode->parsed()) return cmd_encode(common, enc_ann, enc_out, enc_ignore);
    if (decode->parsed()) return cmd_decode(common, dec_tensor, dec_out, dec_svg);
    if (e2e->parsed()) {
      if (e2e_tensor.empty() == e2e_tensors.empty()) {
        std::cerr << "e2e: give exactly one of --tensor or --tensors\n";
        return kExitUsage;
      }
      return cmd_e2e(common, e2e_tensor, e2e_tensors, e2e_out, e2e_icdar, e2e_workers);
    }
    if (harvest->parsed()) {
      return cmd_harvest(common, h_gt, h_out, h_steps, h_detector, h_tensors, h_miss0, h_spurious,
                         h_jitter, h_size_jitter, h_stats, h_no_early_stop);
    }
    if (eval->parsed()) {
      return cmd_eval(common, ev_preds, ev_gt, ev_mode, ev_lexicon, ev_iou, ev_kind, ev_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error (" << IoError::kind_name(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == IoError::Kind::MissingFile ? kExitNoInput : kExitDataErr;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataErr;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}
