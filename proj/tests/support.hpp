#pragma once

// Shared fixtures for the test suites: scratch directories, random scene
// generators and independent reference implementations.

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scenegeo/geometry.hpp"
#include "scenegeo/pointcloud.hpp"
#include "scenegeo/raster.hpp"
#include "scenegeo/rng.hpp"

namespace testing_support {

using namespace scenegeo;

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag);
  ~ScratchDir();
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Runs `body` for `cases` seeds; the seed is reported on failure via SCOPED_TRACE by the caller.
void for_each_seed(int cases, std::uint64_t base, const std::function<void(Rng&, std::uint64_t)>& body);

Intrinsics random_intrinsics(Rng& rng, int max_w = 16, int max_h = 16);
Mat3 random_rotation(Rng& rng);
Pose random_pose(Rng& rng, double max_translation = 1.0);
Camera random_camera(Rng& rng, int max_w = 16, int max_h = 16);

/// Random depth in [lo, hi] with roughly `hole_fraction` zero pixels.
DepthMap random_depth(Rng& rng, int w, int h, double lo, double hi, double hole_fraction = 0.0);
ColorImage random_image(Rng& rng, int w, int h);
Mask random_mask(Rng& rng, int w, int h, double p_true);

/// Points in front of `cam`, some outside its frustum and some behind it.
PointCloud random_cloud_around(Rng& rng, const Camera& cam, int n);

/// Canonical camera: identity pose, principal point at the image centre.
Camera simple_camera(int w, int h, double f);

std::filesystem::path cli_path();
std::filesystem::path nnfill_adapter_path();
std::filesystem::path fault_adapter_path();

/// Runs a command line through the shell-free process runner; returns the exit code.
int run(const std::vector<std::string>& argv, std::string* err = nullptr, std::string* out = nullptr);

std::string file_bytes(const std::filesystem::path& path);

}  // namespace testing_support
