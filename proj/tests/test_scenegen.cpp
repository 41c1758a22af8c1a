#include <gtest/gtest.h>

#include <cmath>

#include "scenegeo/io_util.hpp"
#include "scenegeo/scenegen.hpp"
#include "support.hpp"

using namespace scenegeo;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

// Flat 3 m wall for the first view, nearest-neighbour completion afterwards.
class WallThenFill final : public Predictor {
 public:
  std::string name() const override { return "wall-then-fill"; }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap*) override {
    if (req.monocular()) return {DepthMap(req.image.width(), req.image.height(), 3.0f)};
    return predict_nn_fill(req);
  }
};

double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

std::vector<double> rounded(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::round(x * 1e6) / 1e6);
  return out;
}

}  // namespace

TEST(Orbit, Schedules) {
  OrbitConfig quarter;
  quarter.azimuth_step_deg = 90;
  quarter.taper_start_deg.reset();
  EXPECT_EQ(quarter.azimuths_deg(), (std::vector<double>{0, 90, 180, 270}));

  OrbitConfig dflt;
  EXPECT_EQ(rounded(dflt.azimuths_deg()),
            (std::vector<double>{0, 25, 50, 75, 100, 125, 150, 175, 200, 225, 292.5, 326.25}));

  OrbitConfig tail;
  tail.tail_steps_deg = {47.5, 43.75};
  EXPECT_EQ(rounded(tail.azimuths_deg()),
            (std::vector<double>{0, 25, 50, 75, 100, 125, 150, 175, 200, 225, 272.5, 316.25}));

  OrbitConfig bad = tail;
  bad.tail_steps_deg = {100, 50};
  EXPECT_THROW(bad.azimuths_deg(), InvalidInput);
  bad = dflt;
  bad.azimuth_step_deg = 0;
  EXPECT_THROW(bad.azimuths_deg(), InvalidInput);
}

TEST(Orbit, SchedulesNeverCloseTheLoop) {
  for_each_seed(200, 91, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    OrbitConfig cfg;
    cfg.azimuth_step_deg = rng.uniform(1.0, 120.0);
    cfg.taper_start_deg = rng.uniform(0.0, 359.0);
    if (rng.bernoulli(0.3)) cfg.taper_start_deg.reset();
    cfg.taper_views = static_cast<int>(rng.index(5));
    const auto az = cfg.azimuths_deg();
    ASSERT_FALSE(az.empty());
    EXPECT_EQ(az.front(), 0.0);
    for (std::size_t i = 1; i < az.size(); ++i) EXPECT_GT(az[i], az[i - 1]);
    EXPECT_LT(az.back(), 360.0);
  });
}

TEST(Orbit, CamerasTurnInPlace) {
  Rng rng(92);
  Camera initial = random_camera(rng, 16, 12);
  OrbitConfig cfg;
  const auto cams = orbit_trajectory(initial, cfg);
  const auto az = cfg.azimuths_deg();
  ASSERT_EQ(cams.size(), az.size());
  const Vec3 up = up_vector(initial.pose);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    EXPECT_EQ(cams[i].pose.translation, initial.pose.translation);
    EXPECT_LT((up_vector(cams[i].pose) - up).norm(), 1e-12);
    // Heading measured in the plane orthogonal to the up axis.
    const Vec3 f0 = forward_vector(initial.pose), fi = forward_vector(cams[i].pose);
    const Vec3 side = up.cross(f0);
    double heading = rad_to_deg(std::atan2(fi.dot(side), fi.dot(f0)));
    if (heading < -1e-9) heading += 360.0;
    EXPECT_NEAR(std::min(heading, 360.0 - heading), std::min(az[i], 360.0 - az[i]), 1e-9) << i;
  }
}

TEST(SupportViews, LookAtTheFrameCentre) {
  for_each_seed(50, 93, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const Camera frame = random_camera(rng, 12, 10);
    DepthMap depth = random_depth(rng, frame.width(), frame.height(), 1.0, 6.0, 0.2);
    depth[0] = 2.0f;
    SupportConfig cfg;
    cfg.views_per_frame = 6;
    cfg.max_angle_delta_deg = rng.uniform(0.5, 20.0);
    Rng draw(seed);
    const auto views = support_views(frame, depth, cfg, draw);
    ASSERT_EQ(views.size(), 6u);

    double sum = 0;
    int n = 0;
    for (float d : depth.values())
      if (d > 0) sum += d, ++n;
    const Vec3 centre = frame.pose.translation + forward_vector(frame.pose) * (sum / n);
    const Vec3 up = up_vector(frame.pose);
    const Vec3 offset = frame.pose.translation - centre;
    for (const auto& v : views) {
      EXPECT_LT((v.center - centre).norm(), 1e-9);
      const Vec3 to_centre = centre - v.camera.pose.translation;
      EXPECT_LT(angle_between(forward_vector(v.camera.pose), to_centre), 1e-6);
      EXPECT_NEAR(to_centre.norm(), offset.norm(), 1e-9);
      EXPECT_EQ(v.camera.intrinsics.fx, frame.intrinsics.fx);
      // Elevation: the offset starts level, so its angle above the horizontal
      // plane is the tilt; azimuth is the turn of its horizontal projection.
      const Vec3 moved = v.camera.pose.translation - centre;
      const double el = rad_to_deg(std::asin(moved.dot(up) / moved.norm()));
      const Vec3 flat = moved - moved.dot(up) * up;
      const double az = rad_to_deg(angle_between(flat, offset));
      EXPECT_NEAR(std::abs(el), std::abs(v.elevation_delta_deg), 1e-7);
      EXPECT_NEAR(az, std::abs(v.azimuth_delta_deg), 1e-6);
      EXPECT_LE(std::abs(el), cfg.max_angle_delta_deg + 1e-7);
      EXPECT_LE(az, cfg.max_angle_delta_deg + 1e-6);
    }
  });
}

TEST(SupportViews, ZeroDeltaReproducesTheFrame) {
  Rng rng(94);
  const Camera frame = random_camera(rng, 10, 8);
  SupportConfig cfg;
  cfg.max_angle_delta_deg = 0;
  cfg.views_per_frame = 2;
  const auto views = support_views(frame, random_depth(rng, frame.width(), frame.height(), 1, 3), cfg, rng);
  for (const auto& v : views) {
    EXPECT_LT((v.camera.pose.rotation - frame.pose.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((v.camera.pose.translation - frame.pose.translation).norm(), 1e-9);
  }
  EXPECT_THROW(support_views(frame, DepthMap(frame.width(), frame.height()), cfg, rng), InvalidInput);
}

TEST(BuildScene, GrowsOnlyIntoHoles) {
  const Camera cam = default_camera(32, 24, 70);
  SceneConfig cfg;
  cfg.orbit.azimuth_step_deg = 40;
  cfg.orbit.taper_start_deg.reset();
  cfg.support.views_per_frame = 1;
  cfg.support.max_angle_delta_deg = 5;
  Rng rng(95);
  const ColorImage initial = random_image(rng, 32, 24);
  ConstantFillGenerator gen(Rgb{10, 200, 30});
  WallThenFill completer;
  std::vector<std::string> log;
  const SceneResult scene = build_scene(initial, cam, gen, completer, cfg, [&](const std::string& l) { log.push_back(l); });

  ASSERT_EQ(scene.views.size(), 9u + 9u);
  EXPECT_EQ(scene.views[0].added_points, 32u * 24u);
  EXPECT_FALSE(log.empty());

  std::vector<std::size_t> per_tag(scene.views.size(), 0);
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    const int tag = scene.cloud.source_view[i];
    ASSERT_GE(tag, 0);
    ASSERT_LT(tag, static_cast<int>(scene.views.size()));
    // Earlier points stay in front.
    if (i > 0) { EXPECT_GE(tag, scene.cloud.source_view[i - 1]); }
    ++per_tag[static_cast<std::size_t>(tag)];
  }
  for (const auto& v : scene.views) {
    EXPECT_EQ(per_tag[static_cast<std::size_t>(v.index)], v.added_points) << v.index;
    EXPECT_EQ(v.contract_violations, 0u);
    if (v.index == 0 || v.skipped) continue;
    EXPECT_EQ(v.added_points, count_true(v.holes)) << v.index;
    for (std::size_t i = 0; i < v.image.size(); ++i) {
      if (v.holes[i]) { EXPECT_EQ(v.image[i], (Rgb{10, 200, 30})); }
    }
  }
  // Every point added at step k projects into a hole pixel of view k.
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    const SceneView& v = scene.views[static_cast<std::size_t>(scene.cloud.source_view[i])];
    if (v.index == 0) continue;
    const Vec3 p = transform(invert(v.camera.pose), scene.cloud.positions[i]);
    const Projection px = project(p, v.camera.intrinsics);
    const auto pix = nearest_pixel(px.u, px.v, v.camera.width(), v.camera.height());
    ASSERT_TRUE(pix);
    EXPECT_EQ(v.holes(pix->col, pix->row), 1);
  }
}

TEST(BuildScene, CoverageIsMonotone) {
  const Camera cam = default_camera(24, 16, 60);
  SceneConfig cfg;
  cfg.orbit.azimuth_step_deg = 30;
  cfg.support.views_per_frame = 0;
  ConstantFillGenerator gen;
  WallThenFill completer;
  const SceneResult scene = build_scene(ColorImage(24, 16, Rgb{1, 2, 3}), cam, gen, completer, cfg);
  // Restricting the cloud to steps <= k only ever loses coverage at any later view.
  for (std::size_t k = 0; k + 1 < scene.views.size(); ++k) {
    PointCloud prefix, next;
    for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
      const auto tag = static_cast<std::size_t>(scene.cloud.source_view[i]);
      if (tag <= k) prefix.push_back(scene.cloud.positions[i], scene.cloud.colors[i], static_cast<int>(tag));
      if (tag <= k + 1) next.push_back(scene.cloud.positions[i], scene.cloud.colors[i], static_cast<int>(tag));
    }
    for (const auto& v : scene.views) {
      EXPECT_TRUE(is_subset(render_depth(prefix, v.camera).mask, render_depth(next, v.camera).mask));
    }
  }
}

TEST(BuildScene, StepFailuresNameTheStep) {
  const Camera cam = default_camera(16, 12, 60);
  SceneConfig cfg;
  cfg.support.views_per_frame = 0;
  ConstantFillGenerator gen;
  NnFillPredictor nn;  // cannot serve the monocular first step
  try {
    build_scene(ColorImage(16, 12), cam, gen, nn, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("step000 failed", 0), 0u) << e.what();
  }
  EXPECT_THROW(build_scene(ColorImage(15, 12), cam, gen, nn, cfg), InvalidInput);
}

TEST(Generators, ConstantAndBoxWorld) {
  const Camera cam = default_camera(8, 6, 60);
  Mask holes(8, 6, 0);
  holes(3, 2) = 1;
  GenerateRequest req{ColorImage(8, 6, Rgb{5, 5, 5}), holes, "", 1, cam};
  ConstantFillGenerator c(Rgb{1, 2, 3});
  const ColorImage out = c.generate(req);
  EXPECT_EQ(out(3, 2), (Rgb{1, 2, 3}));
  EXPECT_EQ(out(0, 0), (Rgb{5, 5, 5}));
  EXPECT_EQ(count_contract_violations(req, out), 0u);
  EXPECT_EQ(c.name(), "constant:1,2,3");

  const BoxWorld world = BoxWorld::furnished_room();
  BoxWorldGenerator bw(world);
  EXPECT_EQ(bw.generate(req)(3, 2), world.render_color(cam)(3, 2));
  BoxWorldPredictor bp(world);
  PredictRequest preq = PredictRequest::from_sparse(ColorImage(8, 6), DepthMap(8, 6), cam.intrinsics);
  EXPECT_THROW(bp.predict(preq), InvalidInput);
  preq.pose = cam.pose;
  EXPECT_EQ(bp.predict(preq).depth, world.render_depth(cam));

  GenerateRequest bad = req;
  bad.holes = Mask(7, 6);
  EXPECT_THROW(c.generate(bad), InvalidInput);
}

TEST(Generators, ExternalProtocol) {
  ScratchDir work("gen");
  const Camera cam = default_camera(9, 7, 60);
  Mask holes(9, 7, 0);
  for (int c = 4; c < 9; ++c) holes(c, 3) = 1;
  GenerateRequest req{ColorImage(9, 7, Rgb{7, 8, 9}), holes, "a quiet room", 4, cam};

  write_generate_request(req, work / "files");
  EXPECT_EQ(load_mask(work / "files" / "hole_mask.png"), holes);
  EXPECT_EQ(load_color(work / "files" / "canvas.png"), req.canvas);
  EXPECT_EQ(read_text(work / "files" / "prompt.txt"), "a quiet room");
  const auto meta = read_json(work / "files" / "request.json");
  EXPECT_EQ(meta.at("step"), 4);
  EXPECT_EQ(meta.at("width"), 9);

  auto make = [&](const std::string& mode, double timeout_s = 30.0) {
    ExternalGeneratorCommand cmd;
    cmd.argv = {fault_adapter_path().string(), mode};
    cmd.workdir = work / mode;
    cmd.timeout = std::chrono::duration<double>(timeout_s);
    return ExternalGenerator(cmd);
  };
  ExternalGenerator paint = make("paint");
  const ColorImage out = paint.generate(req);
  EXPECT_EQ(out(5, 3), (Rgb{255, 0, 0}));
  EXPECT_EQ(out(0, 0), (Rgb{7, 8, 9}));
  EXPECT_FALSE(fs::exists(work / "paint" / "step_004"));

  ExternalGenerator smudge = make("smudge");
  EXPECT_EQ(count_contract_violations(req, smudge.generate(req)), 1u);

  auto kind_of = [&](ExternalGenerator g) {
    try {
      g.generate(req);
    } catch (const ProtocolError& e) {
      return e.kind();
    }
    return ProtocolFailure::LaunchFailed;
  };
  EXPECT_EQ(kind_of(make("exit")), ProtocolFailure::NonzeroExit);
  EXPECT_EQ(kind_of(make("missing")), ProtocolFailure::MissingOutput);
  EXPECT_EQ(kind_of(make("garbage")), ProtocolFailure::MissingOutput);
  EXPECT_EQ(kind_of(make("sleep", 0.5)), ProtocolFailure::Timeout);
}

TEST(Splat, ExportRoundTrip) {
  ScratchDir dir("splat");
  const Camera cam = default_camera(20, 14, 70);
  SceneConfig cfg;
  cfg.orbit.azimuth_step_deg = 90;
  cfg.orbit.taper_start_deg.reset();
  cfg.support.views_per_frame = 1;
  const BoxWorld world = BoxWorld::furnished_room();
  BoxWorldGenerator gen(world);
  BoxWorldPredictor completer(world);
  const SceneResult scene = build_scene(world.render_color(cam), cam, gen, completer, cfg);
  export_splat_inputs(scene.cloud, scene.views, dir.path());
  const SplatManifest m = load_splat_manifest(dir.path());
  EXPECT_EQ(m.point_count, scene.cloud.size());
  EXPECT_EQ(load_ply(m.cloud).size(), scene.cloud.size());
  ASSERT_EQ(m.views.size(), scene.views.size());
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    EXPECT_EQ(m.views[i].kind, scene.views[i].kind);
    EXPECT_LT((m.views[i].camera.pose.matrix() - scene.views[i].camera.pose.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(load_color(m.views[i].image), scene.views[i].image);
  }
  EXPECT_THROW(export_splat_inputs(PointCloud{}, scene.views, dir / "empty"), InvalidInput);
}
