#include "scenegeo/pointcloud.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace scenegeo {

void PointCloud::reserve(std::size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  source_view.reserve(n);
}

void PointCloud::push_back(const Vec3& position, Rgb color, int view) {
  positions.push_back(position);
  colors.push_back(color);
  source_view.push_back(view);
}

void PointCloud::validate() const {
  if (colors.size() != positions.size() || source_view.size() != positions.size()) {
    throw InvalidInput("point cloud attribute lengths differ");
  }
  for (const auto& p : positions)
    if (!p.allFinite()) throw InvalidInput("point cloud contains a non-finite position");
}

PointCloud lift(const ColorImage& image, const DepthMap& depth, const Camera& cam, const Mask& select,
                int source_view) {
  const Intrinsics& intr = cam.intrinsics;
  if (depth.width() != intr.width || depth.height() != intr.height) {
    throw InvalidInput("lift: depth resolution differs from the camera");
  }
  require_same_shape(image, depth, "lift image vs depth");
  require_same_shape(select, depth, "lift select mask vs depth");

  PointCloud pc;
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      const float d = depth(c, r);
      if (!select(c, r) || !(d > 0.0f)) continue;
      pc.push_back(transform(cam.pose, unproject(c, r, d, intr)), image(c, r), source_view);
    }
  }
  return pc;
}

PointCloud merge(PointCloud a, const PointCloud& b) {
  a.positions.insert(a.positions.end(), b.positions.begin(), b.positions.end());
  a.colors.insert(a.colors.end(), b.colors.begin(), b.colors.end());
  a.source_view.insert(a.source_view.end(), b.source_view.begin(), b.source_view.end());
  return a;
}

ZBuffer splat(const PointCloud& pc, const Camera& cam) {
  constexpr double kTieEpsilon = 1e-9;
  const Intrinsics& intr = cam.intrinsics;
  ZBuffer zb{Grid<double>(intr.width, intr.height, 0.0), Grid<std::int64_t>(intr.width, intr.height, -1)};
  const Pose world_to_cam = invert(cam.pose);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Vec3 p = transform(world_to_cam, pc.positions[i]);
    if (!(p.z() > 0.0)) continue;
    const Projection proj = project(p, intr);
    const auto px = nearest_pixel(proj.u, proj.v, intr.width, intr.height);
    if (!px) continue;
    const std::size_t k = zb.depth.index(px->col, px->row);
    // Points are visited in index order, so an existing owner always has the lower index.
    if (zb.winner[k] < 0 || proj.depth < zb.depth[k] - kTieEpsilon) {
      zb.depth[k] = proj.depth;
      zb.winner[k] = static_cast<std::int64_t>(i);
    }
  }
  return zb;
}

RenderedDepth render_depth(const PointCloud& pc, const Camera& cam) {
  const ZBuffer zb = splat(pc, cam);
  RenderedDepth out{DepthMap(cam.width(), cam.height(), kInvalidDepth), Mask(cam.width(), cam.height(), 0)};
  for (std::size_t k = 0; k < zb.winner.size(); ++k) {
    if (zb.winner[k] < 0) continue;
    out.depth[k] = static_cast<float>(zb.depth[k]);
    out.mask[k] = out.depth[k] > 0.0f ? 1 : 0;
  }
  return out;
}

RenderedColor render_color(const PointCloud& pc, const Camera& cam, Rgb canvas) {
  const ZBuffer zb = splat(pc, cam);
  RenderedColor out{ColorImage(cam.width(), cam.height(), canvas), Mask(cam.width(), cam.height(), 0)};
  for (std::size_t k = 0; k < zb.winner.size(); ++k) {
    if (zb.winner[k] < 0) continue;
    out.image[k] = pc.colors[static_cast<std::size_t>(zb.winner[k])];
    out.mask[k] = 1;
  }
  return out;
}

// ---- PLY -----------------------------------------------------------------

namespace {

constexpr std::size_t kPlyRecordSize = 3 * sizeof(float) + 3 + sizeof(std::int32_t);

}  // namespace

void save_ply(const PointCloud& pc, const std::filesystem::path& path) {
  pc.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << pc.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "property int source_view\n"
      << "end_header\n";
  std::vector<char> record(kPlyRecordSize);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const float xyz[3] = {static_cast<float>(pc.positions[i].x()), static_cast<float>(pc.positions[i].y()),
                          static_cast<float>(pc.positions[i].z())};
    const std::int32_t view = pc.source_view[i];
    std::memcpy(record.data(), xyz, sizeof(xyz));
    record[12] = static_cast<char>(pc.colors[i].r);
    record[13] = static_cast<char>(pc.colors[i].g);
    record[14] = static_cast<char>(pc.colors[i].b);
    std::memcpy(record.data() + 15, &view, sizeof(view));
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

PointCloud load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::string> expected_props = {"float x",   "float y",    "float z",
                                                   "uchar red", "uchar green", "uchar blue",
                                                   "int source_view"};
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw FormatError(path.string() + ": not a PLY file");
  std::getline(in, line);
  if (line != "format binary_little_endian 1.0") throw FormatError(path.string() + ": unsupported PLY format");
  std::size_t count = 0;
  bool have_count = false;
  std::size_t prop = 0;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ss(line);
    std::string keyword;
    ss >> keyword;
    if (keyword == "comment") continue;
    if (keyword == "element") {
      std::string name;
      ss >> name >> count;
      if (name != "vertex" || !ss) throw FormatError(path.string() + ": expected a single vertex element");
      have_count = true;
    } else if (keyword == "property") {
      std::string rest;
      std::getline(ss >> std::ws, rest);
      if (prop >= expected_props.size() || rest != expected_props[prop]) {
        throw FormatError(path.string() + ": unexpected PLY property '" + rest + "'");
      }
      ++prop;
    } else {
      throw FormatError(path.string() + ": unexpected PLY header line '" + line + "'");
    }
  }
  if (line != "end_header" || !have_count || prop != expected_props.size()) {
    throw FormatError(path.string() + ": incomplete PLY header");
  }
  PointCloud pc;
  pc.reserve(count);
  std::vector<char> record(kPlyRecordSize);
  for (std::size_t i = 0; i < count; ++i) {
    if (!in.read(record.data(), static_cast<std::streamsize>(record.size()))) {
      throw FormatError(path.string() + ": truncated PLY body");
    }
    float xyz[3];
    std::int32_t view;
    std::memcpy(xyz, record.data(), sizeof(xyz));
    std::memcpy(&view, record.data() + 15, sizeof(view));
    pc.push_back(Vec3(xyz[0], xyz[1], xyz[2]),
                 Rgb{static_cast<std::uint8_t>(record[12]), static_cast<std::uint8_t>(record[13]),
                     static_cast<std::uint8_t>(record[14])},
                 view);
  }
  return pc;
}

}  // namespace scenegeo
