#include "support.hpp"

#include <atomic>
#include <fstream>
#include <numbers>
#include <sstream>

#include <unistd.h>

#include "scenegeo/subprocess.hpp"

namespace testing_support {

namespace fs = std::filesystem;

ScratchDir::ScratchDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("scenegeo_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

ScratchDir::~ScratchDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void for_each_seed(int cases, std::uint64_t base, const std::function<void(Rng&, std::uint64_t)>& body) {
  for (int i = 0; i < cases; ++i) {
    const std::uint64_t seed = derive_seed(base, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    body(rng, seed);
  }
}

Intrinsics random_intrinsics(Rng& rng, int max_w, int max_h) {
  Intrinsics intr;
  intr.width = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_w)));
  intr.height = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(max_h)));
  intr.fx = rng.uniform(0.5, 2.0) * std::max(intr.width, 2);
  intr.fy = intr.fx * rng.uniform(0.8, 1.25);
  intr.cx = rng.uniform(0.0, intr.width - 1.0);
  intr.cy = rng.uniform(0.0, intr.height - 1.0);
  return intr;
}

Mat3 random_rotation(Rng& rng) {
  // Shoemake's uniform quaternion.
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::Quaterniond q(std::sqrt(u1) * std::cos(two_pi * u3), std::sqrt(1 - u1) * std::sin(two_pi * u2),
                       std::sqrt(1 - u1) * std::cos(two_pi * u2), std::sqrt(u1) * std::sin(two_pi * u3));
  return q.normalized().toRotationMatrix();
}

Pose random_pose(Rng& rng, double max_translation) {
  Pose p;
  p.rotation = random_rotation(rng);
  for (int k = 0; k < 3; ++k) p.translation[k] = rng.uniform(-max_translation, max_translation);
  return p;
}

Camera random_camera(Rng& rng, int max_w, int max_h) {
  return Camera{random_intrinsics(rng, max_w, max_h), random_pose(rng)};
}

DepthMap random_depth(Rng& rng, int w, int h, double lo, double hi, double hole_fraction) {
  DepthMap d(w, h);
  for (auto& v : d.values()) v = rng.bernoulli(hole_fraction) ? 0.0f : static_cast<float>(rng.uniform(lo, hi));
  return d;
}

ColorImage random_image(Rng& rng, int w, int h) {
  ColorImage img(w, h);
  for (auto& px : img.values()) {
    px = Rgb{static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(rng.index(256)),
             static_cast<std::uint8_t>(rng.index(256))};
  }
  return img;
}

Mask random_mask(Rng& rng, int w, int h, double p_true) {
  Mask m(w, h);
  for (auto& v : m.values()) v = rng.bernoulli(p_true) ? 1 : 0;
  return m;
}

PointCloud random_cloud_around(Rng& rng, const Camera& cam, int n) {
  PointCloud pc;
  const Intrinsics& in = cam.intrinsics;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(-2.0, in.width + 1.0);
    const double v = rng.uniform(-2.0, in.height + 1.0);
    // Coarse depth levels make exact ties common.
    double z = 0.5 + 0.25 * static_cast<double>(rng.index(8));
    if (rng.bernoulli(0.1)) z = -z;
    const Vec3 p_cam((u - in.cx) / in.fx * z, (v - in.cy) / in.fy * z, z);
    pc.push_back(transform(cam.pose, p_cam),
                 Rgb{static_cast<std::uint8_t>(rng.index(256)), static_cast<std::uint8_t>(i % 256), 7}, i % 5);
  }
  return pc;
}

Camera simple_camera(int w, int h, double f) {
  Camera cam;
  cam.intrinsics = Intrinsics{f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
  return cam;
}

fs::path cli_path() { return SCENEGEO_CLI; }
fs::path nnfill_adapter_path() { return SCENEGEO_NNFILL_ADAPTER; }
fs::path fault_adapter_path() { return SCENEGEO_FAULT_ADAPTER; }

int run(const std::vector<std::string>& argv, std::string* err, std::string* out) {
  ScratchDir logs("run");
  const ProcessResult r = run_process(argv, std::chrono::seconds(120), logs.path());
  if (err) *err = r.stderr_text;
  if (out) *out = r.stdout_text;
  return r.timed_out ? -2 : r.exit_code;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing_support
