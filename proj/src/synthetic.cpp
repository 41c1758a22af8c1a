#include "scenegeo/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "scenegeo/io_util.hpp"

namespace scenegeo {

namespace fs = std::filesystem;

namespace {

Rgb shade(Rgb base, const Vec3& p) {
  const long parity = static_cast<long>(std::floor(p.x() * 2.0)) + static_cast<long>(std::floor(p.y() * 2.0)) +
                      static_cast<long>(std::floor(p.z() * 2.0));
  if ((parity & 1L) == 0) return base;
  return Rgb{static_cast<std::uint8_t>(base.r * 3 / 4), static_cast<std::uint8_t>(base.g * 3 / 4),
             static_cast<std::uint8_t>(base.b * 3 / 4)};
}

// Entry distance of a ray into a box, if the ray starts outside and hits it ahead.
std::optional<double> slab_entry(const AxisBox& box, const Vec3& o, const Vec3& d) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] == 0.0) {
      if (o[k] < box.min[k] || o[k] > box.max[k]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[k] - o[k]) / d[k];
    double t1 = (box.max[k] - o[k]) / d[k];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_near > t_far || !(t_near > 0.0)) return std::nullopt;
  return t_near;
}

}  // namespace

BoxWorld::BoxWorld(Vec3 room_min, Vec3 room_max, std::vector<AxisBox> objects)
    : room_min_(room_min),
      room_max_(room_max),
      objects_(std::move(objects)),
      wall_colors_{Rgb{200, 80, 80}, Rgb{80, 200, 80}, Rgb{220, 220, 220},
                   Rgb{90, 90, 90}, Rgb{80, 80, 200}, Rgb{200, 200, 80}} {
  if ((room_max_ - room_min_).minCoeff() <= 0.0) throw InvalidInput("room box must have positive extent");
}

BoxWorld BoxWorld::empty_room() { return BoxWorld(Vec3(-3.0, -1.8, -3.0), Vec3(3.0, 1.2, 3.0)); }

BoxWorld BoxWorld::furnished_room(int variant) {
  std::vector<AxisBox> objects;
  if (variant % 2 == 0) {
    objects.push_back({Vec3(-0.8, 0.4, 1.2), Vec3(0.2, 1.2, 2.0), Rgb{180, 120, 60}});
    objects.push_back({Vec3(1.0, -0.5, 0.0), Vec3(1.8, 1.2, 0.8), Rgb{60, 160, 170}});
  } else {
    objects.push_back({Vec3(0.3, 0.2, 1.0), Vec3(1.3, 1.2, 1.8), Rgb{150, 60, 150}});
    objects.push_back({Vec3(-2.0, -0.2, 0.5), Vec3(-1.2, 1.2, 1.5), Rgb{230, 160, 40}});
  }
  return BoxWorld(Vec3(-3.0, -1.8, -3.0), Vec3(3.0, 1.2, 3.0), std::move(objects));
}

bool BoxWorld::contains(const Vec3& p) const {
  if ((p - room_min_).minCoeff() <= 0.0 || (room_max_ - p).minCoeff() <= 0.0) return false;
  for (const auto& box : objects_) {
    if ((p - box.min).minCoeff() >= 0.0 && (box.max - p).minCoeff() >= 0.0) return false;
  }
  return true;
}

std::optional<RayHit> BoxWorld::cast(const Vec3& origin, const Vec3& direction) const {
  double best = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int k = 0; k < 3; ++k) {
    if (direction[k] > 0.0) {
      const double t = (room_max_[k] - origin[k]) / direction[k];
      if (t > 0.0 && t < best) {
        best = t;
        face = 2 * k + 1;
      }
    } else if (direction[k] < 0.0) {
      const double t = (room_min_[k] - origin[k]) / direction[k];
      if (t > 0.0 && t < best) {
        best = t;
        face = 2 * k;
      }
    }
  }
  Rgb base = face >= 0 ? wall_colors_[static_cast<std::size_t>(face)] : Rgb{};
  for (const auto& box : objects_) {
    const auto t = slab_entry(box, origin, direction);
    if (t && *t < best) {
      best = *t;
      base = box.color;
      face = 6;
    }
  }
  if (face < 0) return std::nullopt;
  const Vec3 point = origin + best * direction;
  return RayHit{best, point, shade(base, point)};
}

DepthMap BoxWorld::render_depth(const Camera& cam) const {
  const Intrinsics& intr = cam.intrinsics;
  DepthMap depth(intr.width, intr.height, kInvalidDepth);
  for (int r = 0; r < intr.height; ++r) {
    for (int c = 0; c < intr.width; ++c) {
      // Ray with unit z in the camera frame, so the hit distance is the planar depth.
      const Vec3 ray_cam((c - intr.cx) / intr.fx, (r - intr.cy) / intr.fy, 1.0);
      const auto hit = cast(cam.pose.translation, cam.pose.rotation * ray_cam);
      if (hit) depth(c, r) = static_cast<float>(hit->distance);
    }
  }
  return depth;
}

ColorImage BoxWorld::render_color(const Camera& cam) const {
  const Intrinsics& intr = cam.intrinsics;
  ColorImage image(intr.width, intr.height);
  for (int r = 0; r < intr.height; ++r) {
    for (int c = 0; c < intr.width; ++c) {
      const Vec3 ray_cam((c - intr.cx) / intr.fx, (r - intr.cy) / intr.fy, 1.0);
      const auto hit = cast(cam.pose.translation, cam.pose.rotation * ray_cam);
      if (hit) image(c, r) = hit->color;
    }
  }
  return image;
}

Camera synthetic_trajectory_camera(int scene, int frame, int width, int height) {
  Camera cam;
  cam.intrinsics.width = width;
  cam.intrinsics.height = height;
  cam.intrinsics.fx = 0.8 * width;
  cam.intrinsics.fy = 0.8 * width;
  cam.intrinsics.cx = (width - 1) / 2.0;
  cam.intrinsics.cy = (height - 1) / 2.0;
  const double yaw = deg_to_rad(0.3 * frame + 40.0 * scene - 20.0);
  const double pitch = deg_to_rad(-6.0 + 2.0 * std::sin(0.07 * frame));
  cam.pose.rotation = azimuth_elevation(yaw, pitch);
  cam.pose.translation = Vec3(0.4 * std::sin(0.05 * frame + scene), -0.2 + 0.1 * scene, -1.2 + 0.006 * frame);
  return cam;
}

fs::path write_synthetic_dataset(const fs::path& dir, const SyntheticDatasetConfig& cfg) {
  if (cfg.scenes < 1 || cfg.frames < 1) throw InvalidInput("synthetic dataset needs scenes and frames");
  const char* ext = cfg.depth_format == DepthFormat::RawFloat ? ".dpt" : ".png";
  nlohmann::json manifest;
  manifest["dataset"] = cfg.name;
  manifest["scenes"] = nlohmann::json::array();
  for (int s = 0; s < cfg.scenes; ++s) {
    char scene_id[32];
    std::snprintf(scene_id, sizeof(scene_id), "scene%04d", s);
    const BoxWorld world = BoxWorld::furnished_room(s);
    fs::create_directories(dir / scene_id / "color");
    fs::create_directories(dir / scene_id / "depth");
    nlohmann::json views = nlohmann::json::array();
    for (int f = 0; f < cfg.frames; ++f) {
      char stem[32];
      std::snprintf(stem, sizeof(stem), "%06d", f);
      const Camera cam = synthetic_trajectory_camera(s, f, cfg.width, cfg.height);
      const std::string image_rel = std::string(scene_id) + "/color/" + stem + ".png";
      const std::string depth_rel = std::string(scene_id) + "/depth/" + stem + ext;
      save_color(world.render_color(cam), dir / image_rel);
      save_depth(world.render_depth(cam), dir / depth_rel, cfg.depth_format);
      views.push_back({{"frame", f}, {"image", image_rel}, {"depth", depth_rel}, {"camera", to_json(cam)}});
    }
    manifest["scenes"].push_back({{"id", scene_id}, {"views", std::move(views)}});
  }
  fs::create_directories(dir);
  const fs::path path = dir / "manifest.json";
  write_json(manifest, path);
  return path;
}

}  // namespace scenegeo
