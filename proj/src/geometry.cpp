#include "scenegeo/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <Eigen/SVD>

#include "scenegeo/errors.hpp"
#include "scenegeo/io_util.hpp"

namespace scenegeo {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidInput("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidInput("image resolution must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidInput("principal point outside the image");
  }
}

Mat3 Intrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Pose Pose::from_matrix(const Mat4& m, double snap_tolerance) {
  if (!m.allFinite()) throw InvalidInput("pose matrix has non-finite entries");
  if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidInput("pose matrix bottom row must be [0 0 0 1]");
  }
  Pose pose;
  pose.rotation = m.topLeftCorner<3, 3>();
  pose.translation = m.topRightCorner<3, 1>();
  pose.validate(snap_tolerance);
  Eigen::JacobiSVD<Mat3> svd(pose.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 snapped = svd.matrixU() * svd.matrixV().transpose();
  // Keep exact inputs bit-identical; only repair ones that are off.
  if ((snapped - pose.rotation).cwiseAbs().maxCoeff() > 1e-12) pose.rotation = snapped;
  return pose;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void Pose::validate(double tolerance) const {
  if (!rotation.allFinite() || !translation.allFinite()) throw InvalidInput("pose has non-finite entries");
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > tolerance) throw InvalidInput("pose rotation is not orthonormal");
  if (std::abs(rotation.determinant() - 1.0) > tolerance) throw InvalidInput("pose rotation has det != +1");
}

void Camera::validate() const {
  intrinsics.validate();
  pose.validate(1e-6);
}

Vec3 unproject(double u, double v, double depth, const Intrinsics& intr) {
  if (!(depth > 0.0) || !std::isfinite(depth)) throw InvalidInput("unproject requires a positive depth");
  if (!(u >= -0.5 && u < intr.width - 0.5 && v >= -0.5 && v < intr.height - 0.5)) {
    throw InvalidInput("unproject pixel outside the image");
  }
  return {(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth};
}

Projection project(const Vec3& p, const Intrinsics& intr) {
  if (!(p.z() > 0.0)) throw BehindCamera("point is not in front of the camera");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy, p.z()};
}

Vec3 transform(const Pose& pose, const Vec3& p) { return pose.rotation * p + pose.translation; }

Pose invert(const Pose& pose) {
  Pose inv;
  inv.rotation = pose.rotation.transpose();
  inv.translation = -(inv.rotation * pose.translation);
  return inv;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

std::optional<PixelIndex> nearest_pixel(double u, double v, int width, int height) {
  const double col = std::floor(u + 0.5);
  const double row = std::floor(v + 0.5);
  if (!(col >= 0.0 && col < width && row >= 0.0 && row < height)) return std::nullopt;
  return PixelIndex{static_cast<int>(col), static_cast<int>(row)};
}

Mat3 rotation_about(const Vec3& axis, double radians) {
  return Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
}

Mat3 azimuth_elevation(double azimuth, double elevation) {
  // +y points down, so a rotation about +y by a positive angle swings +z towards +x.
  // Rotating about +x by a positive angle swings +z towards -y, i.e. up.
  return rotation_about(Vec3::UnitY(), azimuth) * rotation_about(Vec3::UnitX(), elevation);
}

Pose look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
  const Vec3 forward = target - position;
  if (forward.norm() < 1e-12) throw InvalidInput("look_at target coincides with the camera position");
  const Vec3 z = forward.normalized();
  const Vec3 down = -up.normalized();
  const Vec3 x_raw = down.cross(z);
  if (x_raw.norm() < 1e-9) throw InvalidInput("look_at up vector is parallel to the viewing direction");
  const Vec3 x = x_raw.normalized();
  const Vec3 y = z.cross(x);
  Pose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = position;
  return pose;
}

Vec3 up_vector(const Pose& pose) { return -pose.rotation.col(1); }
Vec3 forward_vector(const Pose& pose) { return pose.rotation.col(2); }

double deg_to_rad(double degrees) { return degrees * std::numbers::pi / 180.0; }
double rad_to_deg(double radians) { return radians * 180.0 / std::numbers::pi; }

nlohmann::json to_json(const Intrinsics& intr) {
  return {{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx}, {"cy", intr.cy},
          {"width", intr.width}, {"height", intr.height}};
}

nlohmann::json to_json(const Camera& cam) {
  nlohmann::json j = to_json(cam.intrinsics);
  const Mat4 m = cam.pose.matrix();
  nlohmann::json pose = nlohmann::json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
  j["pose"] = std::move(pose);
  return j;
}

Intrinsics intrinsics_from_json(const nlohmann::json& j) {
  try {
    Intrinsics intr;
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    intr.width = j.at("width").get<int>();
    intr.height = j.at("height").get<int>();
    intr.validate();
    return intr;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("intrinsics JSON: ") + e.what());
  }
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  cam.intrinsics = intrinsics_from_json(j);
  try {
    const auto& pose = j.at("pose");
    if (!pose.is_array() || pose.size() != 16) throw FormatError("camera JSON: pose must hold 16 numbers");
    Mat4 m;
    for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = pose[i].get<double>();
    cam.pose = Pose::from_matrix(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("camera JSON: ") + e.what());
  }
  return cam;
}

Camera load_camera(const std::filesystem::path& path) { return camera_from_json(read_json(path)); }

void save_camera(const Camera& cam, const std::filesystem::path& path) { write_json(to_json(cam), path); }

}  // namespace scenegeo
