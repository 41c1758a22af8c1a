#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "scenegeo/geometry.hpp"
#include "scenegeo/raster.hpp"

namespace scenegeo {

/// Coloured world-space points. Each point carries the index of the generation
/// step (view) that created it.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Rgb> colors;
  std::vector<int> source_view;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void reserve(std::size_t n);
  void push_back(const Vec3& position, Rgb color, int view);

  /// Throws InvalidInput on length mismatch or non-finite positions.
  void validate() const;
};

/// One point per pixel where `select` is set and depth > 0, placed at pose * unproject(u, v, d).
PointCloud lift(const ColorImage& image, const DepthMap& depth, const Camera& cam, const Mask& select,
                int source_view = 0);

PointCloud merge(PointCloud a, const PointCloud& b);

/// Result of z-buffer splatting. `winner` holds the index of the point that owns
/// each pixel, or -1 for holes.
struct ZBuffer {
  Grid<double> depth;
  Grid<std::int64_t> winner;
};

/// Projects every point into `cam`, rounds to the nearest pixel and keeps the
/// smallest camera depth per pixel. Points closer than 1e-9 in depth keep the
/// lower index. Points behind the camera or outside the image are skipped.
ZBuffer splat(const PointCloud& pc, const Camera& cam);

struct RenderedDepth {
  DepthMap depth;
  Mask mask;
};

struct RenderedColor {
  ColorImage image;
  Mask mask;
};

inline constexpr Rgb kCanvasGray{128, 128, 128};

RenderedDepth render_depth(const PointCloud& pc, const Camera& cam);
RenderedColor render_color(const PointCloud& pc, const Camera& cam, Rgb canvas = kCanvasGray);

/// Binary little-endian PLY with x, y, z (float), red, green, blue (uchar), source_view (int).
void save_ply(const PointCloud& pc, const std::filesystem::path& path);
PointCloud load_ply(const std::filesystem::path& path);

}  // namespace scenegeo
