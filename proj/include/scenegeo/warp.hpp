#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scenegeo/geometry.hpp"
#include "scenegeo/pointcloud.hpp"
#include "scenegeo/raster.hpp"
#include "scenegeo/rng.hpp"

namespace scenegeo {

/// Reprojects `depth` seen by `src` into `dst` through lift + z-buffer rendering.
RenderedDepth warp_depth(const DepthMap& depth, const Camera& src, const Camera& dst);

struct ViewpointSamplerConfig {
  double azimuth_range_deg = 15.0;
  double elevation_range_deg = 5.0;
  double translation_range_m = 0.3;  // per axis, camera frame
  std::uint64_t seed = 0;
  void validate() const;
};

/// Random camera perturbations: uniform azimuth in [-a, a], elevation in [-e, e]
/// (rotating in place), then a uniform per-axis translation in the camera frame.
/// Deterministic for a given seed.
class ViewpointSampler {
 public:
  explicit ViewpointSampler(const ViewpointSamplerConfig& cfg);

  Camera sample(const Camera& base);
  const ViewpointSamplerConfig& config() const { return cfg_; }

 private:
  ViewpointSamplerConfig cfg_;
  Rng rng_;
};

struct MaskSetEntry {
  Mask mask;
  std::string source_id;
  int view_index = 0;
  Pose sampled_pose;
};

struct MaskSet {
  std::vector<MaskSetEntry> entries;
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

struct MaskSource {
  std::string id;
  DepthMap depth;
  Camera camera;
};

/// views_per_image warped validity masks per source, stored at source resolution.
/// Each source draws from its own sampler seeded from cfg.seed and its position,
/// so the result does not depend on `jobs`.
MaskSet generate_mask_set(const std::vector<MaskSource>& sources, int views_per_image,
                          const ViewpointSamplerConfig& cfg, int jobs = 1);

/// Writes masks/<source-id>_<view>.png and manifest.json under `dir`.
void save_mask_set(const MaskSet& set, const std::filesystem::path& dir);
MaskSet load_mask_set(const std::filesystem::path& dir);

struct TrainingSample {
  ColorImage image;
  Mask mask;        // M_n, true where sparse depth is given
  DepthMap sparse;  // teacher depth restricted to the mask
  DepthMap target;  // teacher depth
  bool monocular = false;
  std::size_t mask_index = 0;  // meaningful only when !monocular
};

/// With probability p the sample has an empty mask (pure depth estimation);
/// otherwise a uniformly drawn mask, resized by nearest neighbour if needed.
TrainingSample export_training_sample(const ColorImage& image, const DepthMap& teacher_depth, const MaskSet& masks,
                                      double p, Rng& rng);

/// image.png, mask.png, sparse.dpt, target.dpt.
void save_training_sample(const TrainingSample& sample, const std::filesystem::path& dir);

}  // namespace scenegeo
