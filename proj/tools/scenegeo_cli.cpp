// scenegeo: command-line front end.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error or missing input.
// Every subcommand accepts --config <json>; keys are long option names without
// the leading dashes, and flags given on the command line take precedence.
// Each run writes the fully resolved options next to its outputs.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenegeo/align_snap.hpp"
#include "scenegeo/benchmark.hpp"
#include "scenegeo/io_util.hpp"
#include "scenegeo/predictor.hpp"
#include "scenegeo/rng.hpp"
#include "scenegeo/scenegen.hpp"
#include "scenegeo/subprocess.hpp"
#include "scenegeo/synthetic.hpp"
#include "scenegeo/warp.hpp"

namespace fs = std::filesystem;
using namespace scenegeo;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- option plumbing ------------------------------------------------------------

std::vector<std::string> json_to_args(const nlohmann::json& value) {
  std::vector<std::string> out;
  auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    if (v.is_number()) return v.dump();
    throw UsageError("config values must be strings, numbers, booleans or arrays of those");
  };
  if (value.is_array()) {
    for (const auto& v : value) out.push_back(scalar(v));
  } else {
    out.push_back(scalar(value));
  }
  return out;
}

void apply_config(CLI::App* cmd, const fs::path& path) {
  if (!fs::is_regular_file(path)) throw UsageError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = read_json(path);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!j.is_object()) throw UsageError(path.string() + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "command" || key == "config") continue;
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError(path.string() + ": unknown option '" + key + "'");
    if (opt->count() > 0) continue;
    for (const auto& arg : json_to_args(value)) opt->add_result(arg);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path.string() + ": " + key + ": " + e.what());
    }
  }
}

nlohmann::json resolved_options(const CLI::App* cmd) {
  nlohmann::json j;
  j["command"] = cmd->get_name();
  for (const CLI::Option* opt : cmd->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config" || name.empty()) continue;
    const auto& results = opt->results();
    if (!results.empty()) {
      if (opt->get_items_expected_max() > 1) {
        j[name] = results;
      } else {
        j[name] = results.back();
      }
    } else if (opt->get_items_expected_max() <= 1 && !opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void require(const CLI::App* cmd, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (cmd->get_option(name)->count() == 0) throw UsageError(std::string(name) + " is required");
  }
}

void require_file(const fs::path& path, const char* what) {
  if (!fs::is_regular_file(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

void require_dir(const fs::path& path, const char* what) {
  if (!fs::is_directory(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

fs::path sidecar(const fs::path& output, const std::string& suffix) {
  return output.parent_path() / (output.filename().string() + suffix);
}

void write_snapshot(const CLI::App* cmd, const fs::path& path) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  write_json(resolved_options(cmd), path);
}

Rgb parse_rgb(const std::string& text) {
  int r = 0, g = 0, b = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &r, &g, &b, &tail) != 3 || r < 0 || r > 255 || g < 0 || g > 255 ||
      b < 0 || b > 255) {
    throw UsageError("colour must be r,g,b with components in [0, 255]: " + text);
  }
  return Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

std::optional<std::string> after_prefix(const std::string& spec, const std::string& prefix) {
  if (spec.rfind(prefix, 0) != 0) return std::nullopt;
  return spec.substr(prefix.size());
}

int world_variant(const std::string& spec) {
  const auto rest = after_prefix(spec, "box-world");
  if (!rest || rest->empty()) return 0;
  if ((*rest)[0] != ':') throw UsageError("unknown plugin: " + spec);
  try {
    return std::stoi(rest->substr(1));
  } catch (const std::exception&) {
    throw UsageError("box-world variant must be an integer: " + spec);
  }
}

// ---- predictor selection ----------------------------------------------------------

struct PredictorOptions {
  std::string spec = "nn-fill";
  std::string workdir;
  double timeout_s = 300.0;
  bool keep_samples = false;
  AlignConfig align;
};

void add_predictor_options(CLI::App* cmd, PredictorOptions& o, const std::string& flag, const std::string& help) {
  cmd->add_option(flag, o.spec, help)->capture_default_str();
  cmd->add_option("--workdir", o.workdir, "Scratch directory for external adapters (default: <out>/work)");
  cmd->add_option("--timeout", o.timeout_s, "Seconds before an external adapter is killed")->capture_default_str();
  cmd->add_flag("--keep-samples", o.keep_samples, "Keep adapter request directories after success");
  cmd->add_option("--lr", o.align.learning_rate, "Alignment learning rate")->capture_default_str();
  cmd->add_option("--max-steps", o.align.max_steps, "Alignment step budget")->capture_default_str();
  cmd->add_option("--patience", o.align.patience, "Alignment early-stop patience")->capture_default_str();
}

std::unique_ptr<Predictor> make_predictor(const PredictorOptions& o, const fs::path& default_workdir) {
  const fs::path workdir = o.workdir.empty() ? default_workdir : fs::path(o.workdir);
  auto external = [&](const std::string& cmd) {
    ExternalCommand ec;
    ec.argv = split_command(cmd);
    if (ec.argv.empty()) throw UsageError("empty adapter command");
    ec.workdir = workdir;
    ec.timeout = std::chrono::duration<double>(o.timeout_s);
    ec.keep_samples = o.keep_samples;
    return std::make_unique<ExternalPredictor>(std::move(ec));
  };
  if (o.spec == "gt-passthrough") return std::make_unique<GtPassthroughPredictor>();
  if (o.spec == "nn-fill") return std::make_unique<NnFillPredictor>();
  if (o.spec.rfind("box-world", 0) == 0) {
    return std::make_unique<BoxWorldPredictor>(BoxWorld::furnished_room(world_variant(o.spec)));
  }
  if (auto cmd = after_prefix(o.spec, "aligned-external:")) {
    return std::make_unique<AlignedExternalPredictor>(external(*cmd), o.align);
  }
  if (auto cmd = after_prefix(o.spec, "external:")) return external(*cmd);
  throw UsageError("unknown predictor: " + o.spec);
}

std::unique_ptr<Generator> make_generator(const std::string& spec, const fs::path& workdir, double timeout_s) {
  if (spec == "constant") return std::make_unique<ConstantFillGenerator>();
  if (auto rgb = after_prefix(spec, "constant:")) return std::make_unique<ConstantFillGenerator>(parse_rgb(*rgb));
  if (spec.rfind("box-world", 0) == 0) {
    return std::make_unique<BoxWorldGenerator>(BoxWorld::furnished_room(world_variant(spec)));
  }
  if (auto cmd = after_prefix(spec, "external:")) {
    ExternalGeneratorCommand gc;
    gc.argv = split_command(*cmd);
    if (gc.argv.empty()) throw UsageError("empty generator command");
    gc.workdir = workdir;
    gc.timeout = std::chrono::duration<double>(timeout_s);
    return std::make_unique<ExternalGenerator>(std::move(gc));
  }
  throw UsageError("unknown generator: " + spec);
}

// ---- subcommands ---------------------------------------------------------------------

struct WarpArgs {
  std::string src_camera, dst_camera, depth, out_depth, out_mask;
};

int run_warp(const CLI::App* cmd, const WarpArgs& a) {
  require(cmd, {"--src-camera", "--dst-camera", "--depth", "--out-depth"});
  require_file(a.src_camera, "source camera");
  require_file(a.dst_camera, "target camera");
  require_file(a.depth, "depth");
  const Camera src = load_camera(a.src_camera);
  const Camera dst = load_camera(a.dst_camera);
  const RenderedDepth warped = warp_depth(load_depth(a.depth), src, dst);
  if (!fs::path(a.out_depth).parent_path().empty()) fs::create_directories(fs::path(a.out_depth).parent_path());
  save_depth(warped.depth, a.out_depth);
  if (!a.out_mask.empty()) save_mask(warped.mask, a.out_mask);
  write_snapshot(cmd, sidecar(a.out_depth, ".config.json"));
  return 0;
}

struct MaskgenArgs {
  std::string dataset, out;
  int views_per_image = 1;
  ViewpointSamplerConfig sampler;
  int jobs = 1;
};

int run_maskgen(const CLI::App* cmd, const MaskgenArgs& a) {
  require(cmd, {"--dataset", "--out"});
  require_file(a.dataset, "dataset manifest");
  const DatasetManifest manifest = load_dataset_manifest(a.dataset);
  std::vector<MaskSource> sources;
  for (const auto& scene : manifest.scenes) {
    for (const auto& view : scene.views) {
      DepthMap depth = load_depth(view.depth);
      sources.push_back({scene.id + "_" + std::to_string(view.frame), std::move(depth), view.camera});
    }
  }
  const MaskSet set = generate_mask_set(sources, a.views_per_image, a.sampler, a.jobs);
  save_mask_set(set, a.out);
  write_snapshot(cmd, fs::path(a.out) / "config.json");
  std::cerr << "wrote " << set.size() << " masks to " << a.out << "\n";
  return 0;
}

struct ExportTrainingArgs {
  std::string image, teacher_depth, masks, out;
  double p = 0.5;
  std::uint64_t seed = 0;
  int samples = 1;
};

int run_export_training(const CLI::App* cmd, const ExportTrainingArgs& a) {
  require(cmd, {"--image", "--teacher-depth", "--masks", "--out"});
  require_file(a.image, "image");
  require_file(a.teacher_depth, "teacher depth");
  require_dir(a.masks, "mask set");
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  const ColorImage image = load_color(a.image);
  const DepthMap teacher = load_depth(a.teacher_depth);
  const MaskSet masks = load_mask_set(a.masks);
  Rng rng(a.seed);
  nlohmann::json index = nlohmann::json::array();
  for (int i = 0; i < a.samples; ++i) {
    const TrainingSample sample = export_training_sample(image, teacher, masks, a.p, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "%06d", i);
    save_training_sample(sample, fs::path(a.out) / name);
    nlohmann::json entry{{"dir", name}, {"monocular", sample.monocular}};
    entry["mask_index"] = sample.monocular ? nlohmann::json(nullptr) : nlohmann::json(sample.mask_index);
    index.push_back(std::move(entry));
  }
  write_json({{"samples", index}}, fs::path(a.out) / "samples.json");
  write_snapshot(cmd, fs::path(a.out) / "config.json");
  return 0;
}

struct AlignArgs {
  std::string pred, sparse, out;
  std::string method = "iterative";
  bool warm_start = false;
  AlignConfig cfg;
};

int run_align(const CLI::App* cmd, const AlignArgs& a) {
  require(cmd, {"--pred", "--sparse", "--out"});
  require_file(a.pred, "prediction");
  require_file(a.sparse, "sparse depth");
  if (a.method != "iterative" && a.method != "closed-form") throw UsageError("--method must be iterative or closed-form");
  const DepthMap pred = load_depth(a.pred);
  const DepthMap sparse = load_depth(a.sparse);
  require_same_shape(pred, sparse, "prediction vs sparse depth");
  AlignResult result;
  if (a.method == "closed-form") {
    result.params = align_closed_form(pred, sparse);
    result.objective = alignment_objective(pred, sparse, result.params);
  } else {
    AlignConfig cfg = a.cfg;
    if (a.warm_start) cfg.initial = align_closed_form(pred, sparse);
    result = align_iterative(pred, sparse, cfg);
  }
  const DepthMap aligned = apply_affine(pred, result.params);
  if (!fs::path(a.out).parent_path().empty()) fs::create_directories(fs::path(a.out).parent_path());
  save_depth(aligned, a.out);
  write_json({{"scale", result.params.scale},
              {"shift", result.params.shift},
              {"objective", result.objective},
              {"steps", result.steps}},
             sidecar(a.out, ".fit.json"));
  write_snapshot(cmd, sidecar(a.out, ".config.json"));
  std::printf("scale %.9g shift %.9g objective %.9g steps %d\n", result.params.scale, result.params.shift,
              result.objective, result.steps);
  return 0;
}

struct SnapArgs {
  std::string depth, out;
  double threshold = 0.0;
  double relative_threshold = 0.05;
  double max_radius = 0.0;
};

int run_snap(const CLI::App* cmd, const SnapArgs& a) {
  require(cmd, {"--depth", "--out"});
  require_file(a.depth, "depth");
  SnapConfig cfg;
  cfg.relative_threshold = a.relative_threshold;
  if (cmd->get_option("--threshold")->count() > 0) cfg.gradient_threshold = a.threshold;
  if (cmd->get_option("--max-radius")->count() > 0) cfg.max_region_radius = a.max_radius;
  const DepthMap snapped = snap_depth(load_depth(a.depth), cfg);
  if (!fs::path(a.out).parent_path().empty()) fs::create_directories(fs::path(a.out).parent_path());
  save_depth(snapped, a.out);
  write_snapshot(cmd, sidecar(a.out, ".config.json"));
  return 0;
}

struct EvalArgs {
  std::string dataset, out;
  PredictorOptions predictor{"gt-passthrough"};
  std::string rule = "sequential";
  SequentialRule sequential;
  OverlapRule overlap;
  int max_scenes = 0;
  int jobs = 1;
  std::size_t batch_size = 32;
  bool strict = false;
};

int run_eval(const CLI::App* cmd, const EvalArgs& a) {
  require(cmd, {"--dataset", "--out"});
  require_file(a.dataset, "dataset manifest");
  BenchmarkConfig cfg;
  if (a.rule == "sequential") {
    cfg.rule = a.sequential;
  } else if (a.rule == "overlap") {
    cfg.rule = a.overlap;
  } else {
    throw UsageError("--rule must be sequential or overlap");
  }
  if (cmd->get_option("--max-scenes")->count() > 0) cfg.max_scenes = a.max_scenes;
  cfg.jobs = a.jobs;
  cfg.batch_size = a.batch_size;
  std::unique_ptr<Predictor> predictor = make_predictor(a.predictor, fs::path(a.out) / "work");
  const DatasetManifest manifest = load_dataset_manifest(a.dataset);
  const BenchmarkReport report = run_benchmark(manifest, *predictor, cfg);
  save_report(report, a.out);
  write_snapshot(cmd, fs::path(a.out) / "config.json");

  for (const auto& e : report.scene_errors) std::cerr << "scene error: " << e << "\n";
  for (const auto& rec : report.pairs) {
    if (rec.failed()) std::cerr << "pair failed: " << rec.error << "\n";
  }
  if (report.aggregate_mae) {
    std::printf("aggregate mae %.9g m over %zu pairs (%zu failed)\n", *report.aggregate_mae, report.included_pairs,
                report.failed_pairs);
  } else {
    std::printf("aggregate mae undefined (%zu pairs, %zu failed)\n", report.pairs.size(), report.failed_pairs);
  }
  if (a.strict && (report.failed_pairs > 0 || !report.scene_errors.empty())) return 1;
  return 0;
}

struct ScenegenArgs {
  std::string image, camera, out;
  int width = 720, height = 480;
  double fov = 60.0;
  std::string generator = "box-world";
  PredictorOptions completer{"box-world"};
  double azimuth_step = 25.0;
  std::string taper_start = "225";
  int taper_views = 2;
  std::vector<double> tail_steps;
  int support_views = 8;
  double support_angle = 5.0;
  std::uint64_t seed = 0;
  bool no_snap = false;
  double snap_threshold = 0.0;
  double snap_relative = 0.05;
  std::string prompt;
};

nlohmann::json scene_view_json(const SceneView& v, const std::string& stem) {
  return {{"index", v.index},
          {"kind", to_string(v.kind)},
          {"image", "views/" + stem + ".png"},
          {"depth", "depth/" + stem + ".dpt"},
          {"camera", "cameras/" + stem + ".json"},
          {"added_points", v.added_points},
          {"contract_violations", v.contract_violations},
          {"skipped", v.skipped}};
}

int run_scenegen(const CLI::App* cmd, const ScenegenArgs& a) {
  require(cmd, {"--out"});
  if (!a.image.empty()) require_file(a.image, "initial image");
  if (!a.camera.empty()) require_file(a.camera, "initial camera");

  SceneConfig cfg;
  cfg.orbit.azimuth_step_deg = a.azimuth_step;
  if (a.taper_start == "none") {
    cfg.orbit.taper_start_deg.reset();
  } else {
    try {
      cfg.orbit.taper_start_deg = std::stod(a.taper_start);
    } catch (const std::exception&) {
      throw UsageError("--taper-start must be a number or 'none'");
    }
  }
  cfg.orbit.taper_views = a.taper_views;
  cfg.orbit.tail_steps_deg = a.tail_steps;
  cfg.orbit.width = a.width;
  cfg.orbit.height = a.height;
  cfg.support.views_per_frame = a.support_views;
  cfg.support.max_angle_delta_deg = a.support_angle;
  cfg.support.seed = a.seed;
  if (a.no_snap) {
    cfg.snap.reset();
  } else {
    cfg.snap->relative_threshold = a.snap_relative;
    if (cmd->get_option("--snap-threshold")->count() > 0) cfg.snap->gradient_threshold = a.snap_threshold;
  }
  cfg.prompt = a.prompt;
  try {
    cfg.validate();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }

  const fs::path out = a.out;
  const Camera initial_camera = a.camera.empty() ? default_camera(a.width, a.height, a.fov) : load_camera(a.camera);
  ColorImage initial;
  if (!a.image.empty()) {
    initial = load_color(a.image);
  } else if (a.generator.rfind("box-world", 0) == 0) {
    initial = BoxWorld::furnished_room(world_variant(a.generator)).render_color(initial_camera);
  } else {
    throw UsageError("--image is required unless the generator is box-world");
  }

  auto generator = make_generator(a.generator, out / "work" / "generator", a.completer.timeout_s);
  auto completer = make_predictor(a.completer, out / "work" / "completer");
  const SceneResult scene = build_scene(initial, initial_camera, *generator, *completer, cfg,
                                        [](const std::string& line) { std::cerr << line << "\n"; });

  fs::create_directories(out / "views");
  fs::create_directories(out / "depth");
  fs::create_directories(out / "cameras");
  save_ply(scene.cloud, out / "cloud.ply");
  nlohmann::json j;
  j["cloud"] = "cloud.ply";
  j["point_count"] = scene.cloud.size();
  j["generator"] = generator->name();
  j["completer"] = completer->name();
  j["views"] = nlohmann::json::array();
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%04zu", i);
    const SceneView& v = scene.views[i];
    save_color(v.image, out / "views" / (std::string(stem) + ".png"));
    save_depth(v.depth, out / "depth" / (std::string(stem) + ".dpt"), DepthFormat::RawFloat);
    save_camera(v.camera, out / "cameras" / (std::string(stem) + ".json"));
    j["views"].push_back(scene_view_json(v, stem));
  }
  j["notices"] = scene.notices;
  write_json(j, out / "scene.json");
  write_snapshot(cmd, out / "config.json");
  std::printf("%zu points from %zu views\n", scene.cloud.size(), scene.views.size());
  return 0;
}

struct ExportSplatArgs {
  std::string scene, out;
};

int run_export_splat(const CLI::App* cmd, const ExportSplatArgs& a) {
  require(cmd, {"--scene", "--out"});
  const fs::path dir = a.scene;
  require_file(dir / "scene.json", "scene description");
  const nlohmann::json j = read_json(dir / "scene.json");
  require_file(dir / j.at("cloud").get<std::string>(), "scene cloud");
  const PointCloud cloud = load_ply(dir / j.at("cloud").get<std::string>());
  std::vector<SceneView> views;
  for (const auto& v : j.at("views")) {
    SceneView view;
    view.index = v.at("index").get<int>();
    view.kind = v.at("kind").get<std::string>() == "support" ? ViewKind::Support : ViewKind::Orbit;
    view.image = load_color(dir / v.at("image").get<std::string>());
    view.camera = load_camera(dir / v.at("camera").get<std::string>());
    views.push_back(std::move(view));
  }
  const SplatManifest manifest = export_splat_inputs(cloud, views, a.out);
  write_snapshot(cmd, fs::path(a.out) / "config.json");
  std::printf("%zu points, %zu views\n", manifest.point_count, manifest.views.size());
  return 0;
}

struct FixtureArgs {
  std::string out;
  SyntheticDatasetConfig cfg;
  std::string depth_format = "dpt";
};

int run_make_fixture(const CLI::App* cmd, FixtureArgs a) {
  require(cmd, {"--out"});
  try {
    a.cfg.depth_format = depth_format_from_string(a.depth_format);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const fs::path manifest = write_synthetic_dataset(a.out, a.cfg);
  write_snapshot(cmd, fs::path(a.out) / "config.json");
  std::printf("%s\n", manifest.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene geometry tools: depth warping, training export, alignment, benchmark and scene building"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string config;
  std::vector<std::pair<CLI::App*, std::function<int()>>> commands;
  auto add_command = [&](const char* name, const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", config, "JSON file with option values (flags win)");
    return cmd;
  };

  WarpArgs warp;
  {
    CLI::App* cmd = add_command("warp", "Warp a depth map into another camera");
    cmd->add_option("--src-camera", warp.src_camera, "Source camera JSON");
    cmd->add_option("--dst-camera", warp.dst_camera, "Target camera JSON");
    cmd->add_option("--depth", warp.depth, "Source depth (.png millimetres or .dpt)");
    cmd->add_option("--out-depth", warp.out_depth, "Warped depth output");
    cmd->add_option("--out-mask", warp.out_mask, "Coverage mask output (PNG)");
    commands.emplace_back(cmd, [cmd, &warp] { return run_warp(cmd, warp); });
  }

  MaskgenArgs maskgen;
  {
    CLI::App* cmd = add_command("maskgen", "Generate warp masks from dataset views");
    cmd->add_option("--dataset", maskgen.dataset, "Dataset manifest");
    cmd->add_option("--out", maskgen.out, "Output mask-set directory");
    cmd->add_option("--views-per-image", maskgen.views_per_image)->capture_default_str();
    cmd->add_option("--azimuth-range", maskgen.sampler.azimuth_range_deg, "Degrees")->capture_default_str();
    cmd->add_option("--elevation-range", maskgen.sampler.elevation_range_deg, "Degrees")->capture_default_str();
    cmd->add_option("--translation-range", maskgen.sampler.translation_range_m, "Metres")->capture_default_str();
    cmd->add_option("--seed", maskgen.sampler.seed)->capture_default_str();
    cmd->add_option("--jobs", maskgen.jobs)->capture_default_str();
    commands.emplace_back(cmd, [cmd, &maskgen] { return run_maskgen(cmd, maskgen); });
  }

  ExportTrainingArgs training;
  {
    CLI::App* cmd = add_command("export-training", "Write training samples from an image, teacher depth and masks");
    cmd->add_option("--image", training.image);
    cmd->add_option("--teacher-depth", training.teacher_depth);
    cmd->add_option("--masks", training.masks, "Mask-set directory from maskgen");
    cmd->add_option("--out", training.out);
    cmd->add_option("--p", training.p, "Probability of a monocular (empty-mask) sample")->capture_default_str();
    cmd->add_option("--seed", training.seed)->capture_default_str();
    cmd->add_option("--samples", training.samples)->capture_default_str();
    commands.emplace_back(cmd, [cmd, &training] { return run_export_training(cmd, training); });
  }

  AlignArgs align;
  {
    CLI::App* cmd = add_command("align", "Fit scale and shift of a prediction to sparse depth");
    cmd->add_option("--pred", align.pred);
    cmd->add_option("--sparse", align.sparse);
    cmd->add_option("--out", align.out, "Aligned depth output");
    cmd->add_option("--method", align.method, "iterative or closed-form")->capture_default_str();
    cmd->add_flag("--warm-start", align.warm_start, "Start the iterative fit at the least-squares solution");
    cmd->add_option("--lr", align.cfg.learning_rate)->capture_default_str();
    cmd->add_option("--max-steps", align.cfg.max_steps)->capture_default_str();
    cmd->add_option("--patience", align.cfg.patience)->capture_default_str();
    cmd->add_option("--init-scale", align.cfg.initial.scale)->capture_default_str();
    cmd->add_option("--init-shift", align.cfg.initial.shift)->capture_default_str();
    commands.emplace_back(cmd, [cmd, &align] { return run_align(cmd, align); });
  }

  SnapArgs snap;
  {
    CLI::App* cmd = add_command("snap", "Snap smeared depth edges to nearby plateaus");
    cmd->add_option("--depth", snap.depth);
    cmd->add_option("--out", snap.out);
    cmd->add_option("--threshold", snap.threshold, "Gradient threshold in metres per pixel");
    cmd->add_option("--relative-threshold", snap.relative_threshold, "Fraction of the median depth")
        ->capture_default_str();
    cmd->add_option("--max-radius", snap.max_radius, "Pixels");
    commands.emplace_back(cmd, [cmd, &snap] { return run_snap(cmd, snap); });
  }

  EvalArgs eval;
  {
    CLI::App* cmd = add_command("eval", "Run the extrapolation benchmark");
    cmd->add_option("--dataset", eval.dataset, "Dataset manifest");
    cmd->add_option("--out", eval.out, "Report directory");
    add_predictor_options(cmd, eval.predictor, "--predictor",
                          "gt-passthrough, nn-fill, external:<cmd> or aligned-external:<cmd>");
    cmd->add_option("--rule", eval.rule, "sequential or overlap")->capture_default_str();
    cmd->add_option("--block", eval.sequential.block)->capture_default_str();
    cmd->add_option("--source-offset", eval.sequential.source_offset)->capture_default_str();
    cmd->add_option("--target-offset", eval.sequential.target_offset)->capture_default_str();
    cmd->add_option("--tau", eval.overlap.tau)->capture_default_str();
    cmd->add_option("--max-scenes", eval.max_scenes, "Default: 50 (sequential) or all (overlap)");
    cmd->add_option("--jobs", eval.jobs)->capture_default_str();
    cmd->add_option("--batch-size", eval.batch_size)->capture_default_str();
    cmd->add_flag("--strict", eval.strict, "Exit 1 when any pair or scene fails");
    commands.emplace_back(cmd, [cmd, &eval] { return run_eval(cmd, eval); });
  }

  ScenegenArgs scenegen;
  {
    CLI::App* cmd = add_command("scenegen", "Build a 360-degree point cloud from one image");
    cmd->add_option("--image", scenegen.image, "Initial image (default: box-world render)");
    cmd->add_option("--camera", scenegen.camera, "Initial camera JSON (default: from --fov)");
    cmd->add_option("--out", scenegen.out);
    cmd->add_option("--width", scenegen.width)->capture_default_str();
    cmd->add_option("--height", scenegen.height)->capture_default_str();
    cmd->add_option("--fov", scenegen.fov, "Horizontal field of view in degrees")->capture_default_str();
    cmd->add_option("--generator", scenegen.generator, "constant[:r,g,b], box-world[:variant] or external:<cmd>")
        ->capture_default_str();
    add_predictor_options(cmd, scenegen.completer, "--completer",
                          "box-world[:variant], external:<cmd> or aligned-external:<cmd>; must handle monocular requests");
    cmd->add_option("--azimuth-step", scenegen.azimuth_step)->capture_default_str();
    cmd->add_option("--taper-start", scenegen.taper_start, "Degrees, or 'none'")->capture_default_str();
    cmd->add_option("--taper-views", scenegen.taper_views)->capture_default_str();
    cmd->add_option("--tail-steps", scenegen.tail_steps, "Explicit tail steps in degrees")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd->add_option("--support-views", scenegen.support_views)->capture_default_str();
    cmd->add_option("--support-angle", scenegen.support_angle)->capture_default_str();
    cmd->add_option("--seed", scenegen.seed)->capture_default_str();
    cmd->add_flag("--no-snap", scenegen.no_snap);
    cmd->add_option("--snap-threshold", scenegen.snap_threshold, "Metres per pixel");
    cmd->add_option("--snap-relative", scenegen.snap_relative)->capture_default_str();
    cmd->add_option("--prompt", scenegen.prompt);
    commands.emplace_back(cmd, [cmd, &scenegen] { return run_scenegen(cmd, scenegen); });
  }

  ExportSplatArgs splat;
  {
    CLI::App* cmd = add_command("export-splat", "Export a scenegen result for Gaussian-splat tooling");
    cmd->add_option("--scene", splat.scene, "scenegen output directory");
    cmd->add_option("--out", splat.out);
    commands.emplace_back(cmd, [cmd, &splat] { return run_export_splat(cmd, splat); });
  }

  FixtureArgs fixture;
  {
    CLI::App* cmd = add_command("make-fixture", "Write the synthetic benchmark dataset");
    cmd->add_option("--out", fixture.out);
    cmd->add_option("--scenes", fixture.cfg.scenes)->capture_default_str();
    cmd->add_option("--frames", fixture.cfg.frames)->capture_default_str();
    cmd->add_option("--width", fixture.cfg.width)->capture_default_str();
    cmd->add_option("--height", fixture.cfg.height)->capture_default_str();
    cmd->add_option("--depth-format", fixture.depth_format, "dpt or png16")->capture_default_str();
    cmd->add_option("--name", fixture.cfg.name)->capture_default_str();
    commands.emplace_back(cmd, [cmd, &fixture] { return run_make_fixture(cmd, fixture); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (auto& [cmd, run] : commands) {
    if (!cmd->parsed()) continue;
    try {
      if (!config.empty()) apply_config(cmd, config);
      return run();
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
