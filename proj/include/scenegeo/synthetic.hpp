#pragma once

// Procedural box worlds with analytic depth, used as ground truth by the test
// fixtures, the bundled benchmark fixture and the closed-loop pipeline checks.

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

#include "scenegeo/geometry.hpp"
#include "scenegeo/raster.hpp"

namespace scenegeo {

struct AxisBox {
  Vec3 min;
  Vec3 max;
  Rgb color;
};

struct RayHit {
  double distance = 0.0;  // along the (not necessarily unit) direction
  Vec3 point;
  Rgb color;
};

/// A closed room (seen from inside) with solid boxes standing in it.
class BoxWorld {
 public:
  BoxWorld(Vec3 room_min, Vec3 room_max, std::vector<AxisBox> objects = {});

  /// 6 x 3 x 6 m room, floor at y = +1.2 (world y points down), two boxes.
  static BoxWorld furnished_room(int variant = 0);
  /// Same room without furniture.
  static BoxWorld empty_room();

  std::optional<RayHit> cast(const Vec3& origin, const Vec3& direction) const;
  bool contains(const Vec3& p) const;

  /// Planar depth at every pixel; 0 where the ray escapes (never, for cameras inside the room).
  DepthMap render_depth(const Camera& cam) const;
  ColorImage render_color(const Camera& cam) const;

 private:
  Vec3 room_min_;
  Vec3 room_max_;
  std::vector<AxisBox> objects_;
  std::array<Rgb, 6> wall_colors_;
};

struct SyntheticDatasetConfig {
  int scenes = 2;
  int frames = 120;
  int width = 32;
  int height = 24;
  DepthFormat depth_format = DepthFormat::RawFloat;
  std::string name = "synthetic";
};

/// Writes a benchmark manifest (manifest.json) plus images, depths and cameras
/// for slowly moving cameras inside furnished rooms. Returns the manifest path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticDatasetConfig& cfg);

/// Camera of frame `frame` in scene `scene` of the synthetic dataset.
Camera synthetic_trajectory_camera(int scene, int frame, int width, int height);

}  // namespace scenegeo
