#pragma once

// Iterative 360-degree scene building: render the current cloud at the next
// camera, let a generator paint the holes, let a completer predict depth
// conditioned on the rendered depth, and lift only the hole pixels.
//
// External generator protocol (one step):
//   <step>/canvas.png      8-bit RGB render of the current cloud, holes in canvas grey
//   <step>/hole_mask.png   255 = hole to paint, 0 = keep
//   <step>/prompt.txt      text prompt (may be empty)
//   <step>/request.json    {"step", "width", "height", "camera": {<camera JSON>}}
// The generator is run with the step directory as its only argument and must
// write <step>/inpainted.png with the canvas dimensions.

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scenegeo/align_snap.hpp"
#include "scenegeo/geometry.hpp"
#include "scenegeo/pointcloud.hpp"
#include "scenegeo/predictor.hpp"
#include "scenegeo/raster.hpp"
#include "scenegeo/rng.hpp"
#include "scenegeo/synthetic.hpp"

namespace scenegeo {

// ---- trajectories ------------------------------------------------------------

struct OrbitConfig {
  double azimuth_step_deg = 25.0;
  /// Uniform steps continue while the azimuth stays at or below this value; the
  /// remaining gap to loop_target is then covered by the tail. Unset: no tail.
  std::optional<double> taper_start_deg = 225.0;
  /// Views after taper_start, each halving the remaining gap.
  int taper_views = 2;
  /// Explicit tail steps (degrees) replacing the halving schedule.
  std::vector<double> tail_steps_deg;
  double loop_target_deg = 360.0;
  int width = 720;
  int height = 480;
  void validate() const;
  /// Cumulative azimuth of every view, starting at 0.
  std::vector<double> azimuths_deg() const;
};

/// Pinhole camera at the origin looking down +z with the given horizontal field of view.
Camera default_camera(int width, int height, double horizontal_fov_deg);

/// Cameras at the initial position, turned about its up axis by each azimuth.
std::vector<Camera> orbit_trajectory(const Camera& initial, const OrbitConfig& cfg);

struct SupportConfig {
  int views_per_frame = 8;
  double max_angle_delta_deg = 5.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct SupportView {
  Camera camera;
  Vec3 center;
  double azimuth_delta_deg = 0.0;
  double elevation_delta_deg = 0.0;
};

/// Cameras orbiting the frame's centre point (the principal ray at the mean
/// valid depth) and looking at it with the frame's up vector.
std::vector<SupportView> support_views(const Camera& frame_cam, const DepthMap& frame_depth, const SupportConfig& cfg,
                                       Rng& rng);

// ---- generators ----------------------------------------------------------------

struct GenerateRequest {
  ColorImage canvas;
  Mask holes;  // 1 = paint here
  std::string prompt;
  int step = 0;
  Camera camera;
  void validate() const;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::string name() const = 0;

  /// Validates the request and that the output matches the canvas size.
  ColorImage generate(const GenerateRequest& req);

 protected:
  virtual ColorImage do_generate(const GenerateRequest& req) = 0;
};

/// Paints every hole with one colour.
class ConstantFillGenerator final : public Generator {
 public:
  explicit ConstantFillGenerator(Rgb color = kCanvasGray) : color_(color) {}
  std::string name() const override;

 protected:
  ColorImage do_generate(const GenerateRequest& req) override;

 private:
  Rgb color_;
};

/// Oracle: paints holes with the box world's rendering from the request camera.
class BoxWorldGenerator final : public Generator {
 public:
  explicit BoxWorldGenerator(BoxWorld world) : world_(std::move(world)) {}
  std::string name() const override { return "box-world"; }

 protected:
  ColorImage do_generate(const GenerateRequest& req) override;

 private:
  BoxWorld world_;
};

struct ExternalGeneratorCommand {
  std::vector<std::string> argv;
  std::filesystem::path workdir;
  std::chrono::duration<double> timeout = std::chrono::seconds(300);
  bool keep_steps = false;
};

class ExternalGenerator final : public Generator {
 public:
  explicit ExternalGenerator(ExternalGeneratorCommand cmd);
  std::string name() const override;

 protected:
  ColorImage do_generate(const GenerateRequest& req) override;

 private:
  ExternalGeneratorCommand cmd_;
};

/// Writes the four generator request files into `dir`.
void write_generate_request(const GenerateRequest& req, const std::filesystem::path& dir);

/// Pixels outside the holes whose channels differ by more than `tolerance` levels.
std::size_t count_contract_violations(const GenerateRequest& req, const ColorImage& out, int tolerance = 2);

/// Oracle completer: the box world's analytic depth at the request pose.
class BoxWorldPredictor final : public Predictor {
 public:
  explicit BoxWorldPredictor(BoxWorld world) : world_(std::move(world)) {}
  std::string name() const override { return "box-world"; }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) override;

 private:
  BoxWorld world_;
};

// ---- scene building --------------------------------------------------------------

struct SceneConfig {
  OrbitConfig orbit;
  SupportConfig support;
  /// Unset disables snapping.
  std::optional<SnapConfig> snap = SnapConfig{};
  std::string prompt;
  Rgb canvas = kCanvasGray;
  void validate() const;
};

enum class ViewKind { Orbit, Support };
const char* to_string(ViewKind kind);

struct SceneView {
  int index = 0;
  ViewKind kind = ViewKind::Orbit;
  Camera camera;
  ColorImage image;
  DepthMap depth;
  Mask holes;
  std::size_t added_points = 0;
  std::size_t contract_violations = 0;
  bool skipped = false;
};

struct SceneResult {
  PointCloud cloud;
  std::vector<SceneView> views;
  std::vector<std::string> notices;
};

using SceneLog = std::function<void(const std::string&)>;

/// Step 0 lifts the whole initial image from a monocular prediction; every later
/// view adds points only where the current cloud leaves holes.
SceneResult build_scene(const ColorImage& initial_image, const Camera& initial_camera, Generator& generator,
                        Predictor& completer, const SceneConfig& cfg, const SceneLog& log = {});

// ---- splat inputs ---------------------------------------------------------------

struct SplatView {
  ViewKind kind = ViewKind::Orbit;
  std::filesystem::path image;
  Camera camera;
};

struct SplatManifest {
  std::filesystem::path cloud;
  std::size_t point_count = 0;
  std::vector<SplatView> views;
};

/// Writes cloud.ply, views/<n>.png, cameras/<n>.json and manifest.json.
SplatManifest export_splat_inputs(const PointCloud& cloud, const std::vector<SceneView>& views,
                                  const std::filesystem::path& dir);
SplatManifest load_splat_manifest(const std::filesystem::path& dir);

}  // namespace scenegeo
