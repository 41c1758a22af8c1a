#pragma once

// Pinhole camera geometry.
//
// Conventions used throughout the library:
//  * Pixel (col, row) has continuous image coordinate (u, v) = (col, row).
//    There is no half-pixel offset; a continuous coordinate maps to the
//    pixel given by rounding half up (see nearest_pixel).
//  * Camera frame is right-handed: +x right, +y down, +z along the optical axis.
//  * Pose is camera-to-world: X_world = R * X_cam + t.

#include <filesystem>
#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <json.hpp>

namespace scenegeo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidInput unless fx, fy > 0 and the principal point lies inside the image.
  void validate() const;

  Mat3 matrix() const;

  bool operator==(const Intrinsics&) const = default;
};

struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  /// Builds a pose from a 4x4 homogeneous camera-to-world matrix. Rotations that are
  /// orthonormal within `snap_tolerance` are projected onto SO(3); others are rejected.
  static Pose from_matrix(const Mat4& m, double snap_tolerance = 1e-4);

  Mat4 matrix() const;

  /// Throws InvalidInput when R is not a proper rotation within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;

  int width() const { return intrinsics.width; }
  int height() const { return intrinsics.height; }
  void validate() const;
};

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

struct PixelIndex {
  int col = 0;
  int row = 0;
};

/// Camera-space point seen at pixel (u, v) with planar depth d.
Vec3 unproject(double u, double v, double depth, const Intrinsics& intr);

/// Pinhole projection of a camera-space point. The result may fall outside the image.
Projection project(const Vec3& p, const Intrinsics& intr);

Vec3 transform(const Pose& pose, const Vec3& p);
Pose invert(const Pose& pose);

/// Matrix product a * b: applying the result equals applying b, then a.
Pose compose(const Pose& a, const Pose& b);

/// Pixel containing a continuous coordinate, or nullopt when it lies outside the image.
std::optional<PixelIndex> nearest_pixel(double u, double v, int width, int height);

Mat3 rotation_about(const Vec3& axis, double radians);

/// Rotation that turns a camera by `azimuth` (positive to the right, about its +y axis)
/// followed by `elevation` (positive upwards, about its +x axis). Both in radians.
Mat3 azimuth_elevation(double azimuth, double elevation);

/// Camera at `position` whose optical axis points at `target`; `up` is a world direction
/// that maps to image-up (-y). Throws InvalidInput for degenerate configurations.
Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up);

/// World-space up direction of a camera (its -y axis).
Vec3 up_vector(const Pose& pose);
Vec3 forward_vector(const Pose& pose);

double deg_to_rad(double degrees);
double rad_to_deg(double radians);

// Camera JSON: {"fx","fy","cx","cy","width","height","pose": 16 numbers, row-major
// 4x4 camera-to-world}.
nlohmann::json to_json(const Camera& cam);
nlohmann::json to_json(const Intrinsics& intr);
Camera camera_from_json(const nlohmann::json& j);
Intrinsics intrinsics_from_json(const nlohmann::json& j);
Camera load_camera(const std::filesystem::path& path);
void save_camera(const Camera& cam, const std::filesystem::path& path);

}  // namespace scenegeo
