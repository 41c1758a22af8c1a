#include "scenegeo/scenegen.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "scenegeo/io_util.hpp"
#include "scenegeo/subprocess.hpp"

namespace scenegeo {

namespace fs = std::filesystem;

// ---- trajectories ------------------------------------------------------------

void OrbitConfig::validate() const {
  if (!(azimuth_step_deg > 0.0 && azimuth_step_deg < 180.0)) throw InvalidInput("azimuth step must lie in (0, 180)");
  if (!(loop_target_deg > 0.0)) throw InvalidInput("loop target must be positive");
  if (taper_start_deg && !(*taper_start_deg >= 0.0 && *taper_start_deg < loop_target_deg)) {
    throw InvalidInput("taper start must lie in [0, loop target)");
  }
  if (taper_views < 0) throw InvalidInput("taper views must be non-negative");
  for (double s : tail_steps_deg) {
    if (!(s > 0.0)) throw InvalidInput("tail steps must be positive");
  }
  if (width < 1 || height < 1) throw InvalidInput("orbit image size must be positive");
}

std::vector<double> OrbitConfig::azimuths_deg() const {
  validate();
  const double limit = taper_start_deg ? *taper_start_deg : loop_target_deg;
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double a = k * azimuth_step_deg;
    // Without a tail, the last view must leave a gap to close the loop.
    if (taper_start_deg ? a > limit : a >= limit) break;
    out.push_back(a);
  }
  if (!taper_start_deg) return out;

  double current = out.back();
  if (!tail_steps_deg.empty()) {
    for (double s : tail_steps_deg) {
      current += s;
      if (current >= loop_target_deg) throw InvalidInput("tail steps reach the loop target");
      out.push_back(current);
    }
    return out;
  }
  for (int k = 0; k < taper_views; ++k) {
    current += (loop_target_deg - current) / 2.0;
    out.push_back(current);
  }
  return out;
}

Camera default_camera(int width, int height, double horizontal_fov_deg) {
  if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0)) throw InvalidInput("field of view must lie in (0, 180)");
  Camera cam;
  cam.intrinsics.width = width;
  cam.intrinsics.height = height;
  cam.intrinsics.fx = (width / 2.0) / std::tan(deg_to_rad(horizontal_fov_deg) / 2.0);
  cam.intrinsics.fy = cam.intrinsics.fx;
  cam.intrinsics.cx = (width - 1) / 2.0;
  cam.intrinsics.cy = (height - 1) / 2.0;
  cam.intrinsics.validate();
  return cam;
}

std::vector<Camera> orbit_trajectory(const Camera& initial, const OrbitConfig& cfg) {
  initial.validate();
  std::vector<Camera> cams;
  for (double a : cfg.azimuths_deg()) {
    Camera cam = initial;
    cam.pose.rotation = initial.pose.rotation * azimuth_elevation(deg_to_rad(a), 0.0);
    cams.push_back(cam);
  }
  return cams;
}

void SupportConfig::validate() const {
  if (views_per_frame < 0) throw InvalidInput("support views per frame must be non-negative");
  if (!(max_angle_delta_deg >= 0.0 && max_angle_delta_deg < 90.0)) {
    throw InvalidInput("support angle delta must lie in [0, 90)");
  }
}

std::vector<SupportView> support_views(const Camera& frame_cam, const DepthMap& frame_depth, const SupportConfig& cfg,
                                       Rng& rng) {
  cfg.validate();
  frame_cam.validate();
  double sum = 0.0;
  std::size_t count = 0;
  for (float d : frame_depth.values()) {
    if (d > 0.0f) {
      sum += d;
      ++count;
    }
  }
  if (count == 0) throw InvalidInput("support views need valid frame depth");
  const Vec3 center = transform(frame_cam.pose, Vec3(0.0, 0.0, sum / static_cast<double>(count)));
  const Vec3 up = up_vector(frame_cam.pose);
  const Vec3 offset = frame_cam.pose.translation - center;
  const Vec3 tilt_axis = offset.cross(up).normalized();

  std::vector<SupportView> out;
  out.reserve(static_cast<std::size_t>(cfg.views_per_frame));
  for (int k = 0; k < cfg.views_per_frame; ++k) {
    SupportView view;
    view.azimuth_delta_deg = rng.uniform(-cfg.max_angle_delta_deg, cfg.max_angle_delta_deg);
    view.elevation_delta_deg = rng.uniform(-cfg.max_angle_delta_deg, cfg.max_angle_delta_deg);
    const Vec3 moved = rotation_about(up, deg_to_rad(view.azimuth_delta_deg)) *
                       rotation_about(tilt_axis, deg_to_rad(view.elevation_delta_deg)) * offset;
    view.center = center;
    view.camera.intrinsics = frame_cam.intrinsics;
    view.camera.pose = look_at(center + moved, center, up);
    out.push_back(view);
  }
  return out;
}

// ---- generators ----------------------------------------------------------------

void GenerateRequest::validate() const {
  require_same_shape(canvas, holes, "generator canvas vs hole mask");
  if (canvas.width() != camera.width() || canvas.height() != camera.height()) {
    throw InvalidInput("generator canvas size differs from the camera");
  }
}

ColorImage Generator::generate(const GenerateRequest& req) {
  req.validate();
  ColorImage out = do_generate(req);
  if (!out.same_shape(req.canvas)) {
    throw ProtocolError(ProtocolFailure::ShapeMismatch,
                        "generator returned " + std::to_string(out.width()) + "x" + std::to_string(out.height()) +
                            ", expected " + std::to_string(req.canvas.width()) + "x" +
                            std::to_string(req.canvas.height()));
  }
  return out;
}

std::string ConstantFillGenerator::name() const {
  return "constant:" + std::to_string(color_.r) + "," + std::to_string(color_.g) + "," + std::to_string(color_.b);
}

ColorImage ConstantFillGenerator::do_generate(const GenerateRequest& req) {
  ColorImage out = req.canvas;
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    if (req.holes.values()[i]) out.values()[i] = color_;
  }
  return out;
}

ColorImage BoxWorldGenerator::do_generate(const GenerateRequest& req) {
  const ColorImage world = world_.render_color(req.camera);
  ColorImage out = req.canvas;
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    if (req.holes.values()[i]) out.values()[i] = world.values()[i];
  }
  return out;
}

void write_generate_request(const GenerateRequest& req, const fs::path& dir) {
  fs::create_directories(dir);
  save_color(req.canvas, dir / "canvas.png");
  save_mask(req.holes, dir / "hole_mask.png");
  write_text(req.prompt, dir / "prompt.txt");
  write_json({{"step", req.step},
              {"width", req.canvas.width()},
              {"height", req.canvas.height()},
              {"camera", to_json(req.camera)}},
             dir / "request.json");
}

ExternalGenerator::ExternalGenerator(ExternalGeneratorCommand cmd) : cmd_(std::move(cmd)) {
  if (cmd_.argv.empty()) throw InvalidInput("external generator command is empty");
  if (cmd_.workdir.empty()) throw InvalidInput("external generator needs a work directory");
  if (!(cmd_.timeout.count() > 0.0)) throw InvalidInput("external generator timeout must be positive");
  fs::create_directories(cmd_.workdir);
}

std::string ExternalGenerator::name() const {
  std::string joined = "external:";
  for (std::size_t i = 0; i < cmd_.argv.size(); ++i) {
    if (i) joined += ' ';
    joined += cmd_.argv[i];
  }
  return joined;
}

ColorImage ExternalGenerator::do_generate(const GenerateRequest& req) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%03d", req.step);
  const fs::path dir = cmd_.workdir / name;
  fs::remove_all(dir);
  write_generate_request(req, dir);
  std::vector<std::string> argv = cmd_.argv;
  argv.push_back(fs::absolute(dir).string());
  const ProcessResult result = run_process(argv, cmd_.timeout, cmd_.workdir / "logs" / name);
  if (result.timed_out) throw ProtocolError(ProtocolFailure::Timeout, "generator timed out", result.stderr_text);
  if (result.exit_code != 0) {
    std::string msg = "generator exited with status " + std::to_string(result.exit_code);
    if (!result.stderr_text.empty()) msg += ": " + result.stderr_text;
    while (!msg.empty() && (msg.back() == '\n' || msg.back() == '\r')) msg.pop_back();
    throw ProtocolError(ProtocolFailure::NonzeroExit, msg, result.stderr_text);
  }
  const fs::path out_path = dir / "inpainted.png";
  if (!fs::exists(out_path)) {
    throw ProtocolError(ProtocolFailure::MissingOutput, "generator did not write " + out_path.string());
  }
  ColorImage out;
  try {
    out = load_color(out_path);
  } catch (const FormatError& e) {
    throw ProtocolError(ProtocolFailure::MalformedOutput, e.what());
  }
  if (!cmd_.keep_steps) {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  return out;
}

std::size_t count_contract_violations(const GenerateRequest& req, const ColorImage& out, int tolerance) {
  require_same_shape(req.canvas, out, "generator canvas vs output");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    if (req.holes.values()[i]) continue;
    const Rgb a = req.canvas.values()[i];
    const Rgb b = out.values()[i];
    if (std::abs(a.r - b.r) > tolerance || std::abs(a.g - b.g) > tolerance || std::abs(a.b - b.b) > tolerance) ++bad;
  }
  return bad;
}

PredictResponse BoxWorldPredictor::do_predict(const PredictRequest& req, const DepthMap*) {
  if (!req.pose) throw InvalidInput("box-world completer needs the request pose");
  return PredictResponse{world_.render_depth(Camera{req.intrinsics, *req.pose})};
}

// ---- scene building --------------------------------------------------------------

void SceneConfig::validate() const {
  orbit.validate();
  support.validate();
  if (snap) snap->validate();
}

const char* to_string(ViewKind kind) { return kind == ViewKind::Orbit ? "orbit" : "support"; }

namespace {

std::string step_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step%03d", index);
  return buf;
}

DepthMap complete_depth(Predictor& completer, PredictRequest req, const std::optional<SnapConfig>& snap) {
  DepthMap depth = completer.predict(req).depth;
  if (snap) depth = snap_depth(depth, *snap);
  return depth;
}

// Renders, paints, completes and lifts one view against the current cloud.
SceneView grow(SceneResult& scene, const Camera& cam, int index, ViewKind kind, Generator& generator,
               Predictor& completer, const SceneConfig& cfg, const SceneLog& log) {
  SceneView view;
  view.index = index;
  view.kind = kind;
  view.camera = cam;

  const RenderedColor color = render_color(scene.cloud, cam, cfg.canvas);
  RenderedDepth rendered = render_depth(scene.cloud, cam);
  view.holes = complement(rendered.mask);
  if (count_true(view.holes) == 0) {
    view.skipped = true;
    view.image = color.image;
    view.depth = std::move(rendered.depth);
    const std::string notice = step_id(index) + " (" + to_string(kind) + "): no holes, skipped";
    scene.notices.push_back(notice);
    if (log) log(notice);
    return view;
  }

  GenerateRequest greq{color.image, view.holes, cfg.prompt, index, cam};
  view.image = generator.generate(greq);
  view.contract_violations = count_contract_violations(greq, view.image);
  if (view.contract_violations > 0) {
    const std::string notice = step_id(index) + ": generator changed " + std::to_string(view.contract_violations) +
                               " pixel(s) outside the holes";
    scene.notices.push_back(notice);
    if (log) log("warning: " + notice);
  }

  PredictRequest preq;
  preq.image = view.image;
  preq.sparse = std::move(rendered.depth);
  preq.known = std::move(rendered.mask);
  preq.intrinsics = cam.intrinsics;
  preq.sample_id = step_id(index);
  preq.pose = cam.pose;
  view.depth = complete_depth(completer, std::move(preq), cfg.snap);

  const PointCloud fresh = lift(view.image, view.depth, cam, view.holes, index);
  view.added_points = fresh.size();
  scene.cloud = merge(std::move(scene.cloud), fresh);
  if (log) {
    log(step_id(index) + " (" + to_string(kind) + "): " + std::to_string(view.added_points) + " points added, " +
        std::to_string(scene.cloud.size()) + " total");
  }
  return view;
}

template <typename Fn>
auto at_step(int index, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error(step_id(index) + " failed: " + e.what());
  }
}

}  // namespace

SceneResult build_scene(const ColorImage& initial_image, const Camera& initial_camera, Generator& generator,
                        Predictor& completer, const SceneConfig& cfg, const SceneLog& log) {
  cfg.validate();
  initial_camera.validate();
  if (initial_image.width() != initial_camera.width() || initial_image.height() != initial_camera.height()) {
    throw InvalidInput("initial image size differs from the initial camera");
  }
  const std::vector<Camera> orbit = orbit_trajectory(initial_camera, cfg.orbit);
  SceneResult scene;

  at_step(0, [&] {
    SceneView first;
    first.index = 0;
    first.camera = initial_camera;
    first.image = initial_image;
    PredictRequest req;
    req.image = initial_image;
    req.sparse = DepthMap(initial_image.width(), initial_image.height(), kInvalidDepth);
    req.known = Mask(initial_image.width(), initial_image.height(), 0);
    req.intrinsics = initial_camera.intrinsics;
    req.sample_id = step_id(0);
    req.pose = initial_camera.pose;
    first.depth = complete_depth(completer, std::move(req), cfg.snap);
    first.holes = Mask(initial_image.width(), initial_image.height(), 1);
    scene.cloud = lift(first.image, first.depth, initial_camera, first.holes, 0);
    first.added_points = scene.cloud.size();
    if (log) log(step_id(0) + " (orbit): " + std::to_string(first.added_points) + " points from the initial image");
    scene.views.push_back(std::move(first));
    return 0;
  });

  int index = 1;
  for (std::size_t k = 1; k < orbit.size(); ++k, ++index) {
    scene.views.push_back(at_step(index, [&] {
      return grow(scene, orbit[k], index, ViewKind::Orbit, generator, completer, cfg, log);
    }));
  }

  const std::size_t frames = scene.views.size();
  for (std::size_t f = 0; f < frames && cfg.support.views_per_frame > 0; ++f) {
    Rng rng(derive_seed(cfg.support.seed, f));
    const std::vector<SupportView> supports =
        support_views(scene.views[f].camera, scene.views[f].depth, cfg.support, rng);
    for (const auto& s : supports) {
      scene.views.push_back(at_step(index, [&] {
        return grow(scene, s.camera, index, ViewKind::Support, generator, completer, cfg, log);
      }));
      ++index;
    }
  }
  return scene;
}

// ---- splat inputs ---------------------------------------------------------------

SplatManifest export_splat_inputs(const PointCloud& cloud, const std::vector<SceneView>& views, const fs::path& dir) {
  if (cloud.empty()) throw InvalidInput("cannot export an empty point cloud");
  fs::create_directories(dir / "views");
  fs::create_directories(dir / "cameras");
  save_ply(cloud, dir / "cloud.ply");

  SplatManifest manifest;
  manifest.cloud = dir / "cloud.ply";
  manifest.point_count = cloud.size();
  nlohmann::json j;
  j["cloud"] = "cloud.ply";
  j["point_count"] = cloud.size();
  j["views"] = nlohmann::json::array();
  for (std::size_t i = 0; i < views.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%04zu", i);
    const std::string image_rel = std::string("views/") + stem + ".png";
    const std::string camera_rel = std::string("cameras/") + stem + ".json";
    save_color(views[i].image, dir / image_rel);
    save_camera(views[i].camera, dir / camera_rel);
    j["views"].push_back({{"index", views[i].index},
                          {"kind", to_string(views[i].kind)},
                          {"image", image_rel},
                          {"camera", camera_rel}});
    manifest.views.push_back({views[i].kind, dir / image_rel, views[i].camera});
  }
  write_json(j, dir / "manifest.json");
  return manifest;
}

SplatManifest load_splat_manifest(const fs::path& dir) {
  const nlohmann::json j = read_json(dir / "manifest.json");
  SplatManifest manifest;
  try {
    manifest.cloud = dir / j.at("cloud").get<std::string>();
    manifest.point_count = j.at("point_count").get<std::size_t>();
    for (const auto& v : j.at("views")) {
      SplatView view;
      view.kind = v.at("kind").get<std::string>() == "support" ? ViewKind::Support : ViewKind::Orbit;
      view.image = dir / v.at("image").get<std::string>();
      view.camera = load_camera(dir / v.at("camera").get<std::string>());
      manifest.views.push_back(std::move(view));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "manifest.json").string() + ": " + e.what());
  }
  return manifest;
}

}  // namespace scenegeo
