#include "scenegeo/raster.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace scenegeo {

static_assert(std::endian::native == std::endian::little, "raw depth I/O assumes a little-endian host");

void validate_depth(const DepthMap& depth) {
  for (float d : depth.values()) {
    if (!std::isfinite(d) || d < 0.0f) throw InvalidInput("depth values must be finite and non-negative");
  }
}

bool is_dense(const DepthMap& depth) {
  return std::all_of(depth.values().begin(), depth.values().end(),
                     [](float d) { return d > 0.0f && std::isfinite(d); });
}

Mask mask_of(const DepthMap& depth) {
  Mask mask(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < depth.size(); ++i) mask[i] = depth[i] > kInvalidDepth ? 1 : 0;
  return mask;
}

Mask complement(const Mask& mask) {
  Mask out(mask.width(), mask.height(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 0 : 1;
  return out;
}

std::size_t count_true(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.values().begin(), mask.values().end(),
                                                [](std::uint8_t m) { return m != 0; }));
}

bool is_subset(const Mask& inner, const Mask& outer) {
  require_same_shape(inner, outer, "mask subset test");
  for (std::size_t i = 0; i < inner.size(); ++i)
    if (inner[i] && !outer[i]) return false;
  return true;
}

DepthMap apply_mask(const DepthMap& depth, const Mask& mask) {
  require_same_shape(depth, mask, "apply_mask");
  DepthMap out(depth.width(), depth.height(), kInvalidDepth);
  for (std::size_t i = 0; i < depth.size(); ++i) out[i] = mask[i] ? depth[i] : kInvalidDepth;
  return out;
}

Mask resize_nearest(const Mask& mask, int width, int height) {
  if (mask.width() == width && mask.height() == height) return mask;
  if (mask.empty()) throw InvalidInput("cannot resize an empty mask");
  Mask out(width, height, 0);
  for (int r = 0; r < height; ++r) {
    const int src_r = std::min(mask.height() - 1,
                               static_cast<int>((static_cast<long long>(r) * mask.height()) / height));
    for (int c = 0; c < width; ++c) {
      const int src_c = std::min(mask.width() - 1,
                                 static_cast<int>((static_cast<long long>(c) * mask.width()) / width));
      out(c, r) = mask(src_c, src_r);
    }
  }
  return out;
}

ScalarField gradient_magnitude(const DepthMap& depth) {
  if (!is_dense(depth)) throw InvalidInput("gradient_magnitude requires dense depth");
  const int w = depth.width();
  const int h = depth.height();
  ScalarField grad(w, h, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double here = depth(c, r);
      double gx = 0.0;
      double gy = 0.0;
      if (w > 1) gx = c + 1 < w ? depth(c + 1, r) - here : here - depth(c - 1, r);
      if (h > 1) gy = r + 1 < h ? depth(c, r + 1) - here : here - depth(c, r - 1);
      grad(c, r) = std::max(std::abs(gx), std::abs(gy));
    }
  }
  return grad;
}

double median_valid_depth(const DepthMap& depth) {
  std::vector<float> valid;
  valid.reserve(depth.size());
  for (float d : depth.values())
    if (d > 0.0f) valid.push_back(d);
  if (valid.empty()) throw InvalidInput("median of a depth map without valid pixels");
  const auto mid = valid.begin() + static_cast<std::ptrdiff_t>(valid.size() / 2);
  std::nth_element(valid.begin(), mid, valid.end());
  if (valid.size() % 2 == 1) return *mid;
  const float upper = *mid;
  const float lower = *std::max_element(valid.begin(), mid);
  return 0.5 * (static_cast<double>(lower) + static_cast<double>(upper));
}

// ---- files ---------------------------------------------------------------

namespace {

constexpr char kRawMagic[4] = {'D', 'P', 'T', '1'};
constexpr double kMillimetresPerMetre = 1000.0;

void write_png(const cv::Mat& mat, const std::filesystem::path& path) {
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), mat);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

cv::Mat read_png(const std::filesystem::path& path, int flags) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
  cv::Mat mat;
  try {
    mat = cv::imread(path.string(), flags);
  } catch (const cv::Exception& e) {
    throw FormatError("cannot decode " + path.string() + ": " + e.what());
  }
  if (mat.empty()) throw FormatError("cannot decode " + path.string());
  return mat;
}

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(const char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

DepthMap load_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char header[16];
  if (!in.read(header, sizeof(header))) throw FormatError(path.string() + ": truncated DPT1 header");
  if (std::memcmp(header, kRawMagic, 4) != 0) throw FormatError(path.string() + ": bad DPT1 magic");
  const std::uint32_t w = get_u32(header + 4);
  const std::uint32_t h = get_u32(header + 8);
  if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
    throw FormatError(path.string() + ": implausible DPT1 dimensions");
  }
  DepthMap depth(static_cast<int>(w), static_cast<int>(h));
  const auto bytes = static_cast<std::streamsize>(depth.size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(depth.values().data()), bytes)) {
    throw FormatError(path.string() + ": payload shorter than header dimensions");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": payload longer than header dimensions");
  }
  try {
    validate_depth(depth);
  } catch (const InvalidInput&) {
    throw FormatError(path.string() + ": negative or non-finite depth values");
  }
  return depth;
}

void save_raw(const DepthMap& depth, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kRawMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(depth.width()));
  put_u32(out, static_cast<std::uint32_t>(depth.height()));
  put_u32(out, 0);
  out.write(reinterpret_cast<const char*>(depth.values().data()),
            static_cast<std::streamsize>(depth.size() * sizeof(float)));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

DepthFormat depth_format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return DepthFormat::Png16Millimeter;
  if (ext == ".dpt") return DepthFormat::RawFloat;
  throw FormatError("unknown depth format for " + path.string() + " (expected .png or .dpt)");
}

const char* to_string(DepthFormat format) {
  return format == DepthFormat::Png16Millimeter ? "png16" : "dpt";
}

DepthFormat depth_format_from_string(const std::string& name) {
  if (name == "png16") return DepthFormat::Png16Millimeter;
  if (name == "dpt") return DepthFormat::RawFloat;
  throw InvalidInput("unknown depth format '" + name + "'");
}

DepthMap load_depth(const std::filesystem::path& path, DepthFormat format) {
  if (format == DepthFormat::RawFloat) return load_raw(path);
  const cv::Mat mat = read_png(path, cv::IMREAD_UNCHANGED);
  if (mat.type() != CV_16UC1) throw FormatError(path.string() + ": expected a 16-bit single-channel PNG");
  DepthMap depth(mat.cols, mat.rows);
  for (int r = 0; r < mat.rows; ++r) {
    const auto* row = mat.ptr<std::uint16_t>(r);
    for (int c = 0; c < mat.cols; ++c) {
      depth(c, r) = static_cast<float>(row[c] / kMillimetresPerMetre);
    }
  }
  return depth;
}

DepthMap load_depth(const std::filesystem::path& path) { return load_depth(path, depth_format_for(path)); }

void save_depth(const DepthMap& depth, const std::filesystem::path& path, DepthFormat format) {
  validate_depth(depth);
  if (format == DepthFormat::RawFloat) {
    save_raw(depth, path);
    return;
  }
  cv::Mat mat(depth.height(), depth.width(), CV_16UC1);
  for (int r = 0; r < depth.height(); ++r) {
    auto* row = mat.ptr<std::uint16_t>(r);
    for (int c = 0; c < depth.width(); ++c) {
      const double mm = std::round(static_cast<double>(depth(c, r)) * kMillimetresPerMetre);
      row[c] = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
    }
  }
  write_png(mat, path);
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
  save_depth(depth, path, depth_format_for(path));
}

Mask load_mask(const std::filesystem::path& path) {
  const cv::Mat mat = read_png(path, cv::IMREAD_UNCHANGED);
  if (mat.type() != CV_8UC1) throw FormatError(path.string() + ": expected an 8-bit grayscale mask PNG");
  Mask mask(mat.cols, mat.rows);
  for (int r = 0; r < mat.rows; ++r) {
    const auto* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < mat.cols; ++c) mask(c, r) = row[c] >= 128 ? 1 : 0;
  }
  return mask;
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
  for (int r = 0; r < mask.height(); ++r) {
    auto* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < mask.width(); ++c) row[c] = mask(c, r) ? 255 : 0;
  }
  write_png(mat, path);
}

ColorImage load_color(const std::filesystem::path& path) {
  const cv::Mat mat = read_png(path, cv::IMREAD_COLOR);
  if (mat.type() != CV_8UC3) throw FormatError(path.string() + ": expected an 8-bit colour image");
  ColorImage img(mat.cols, mat.rows);
  for (int r = 0; r < mat.rows; ++r) {
    const auto* row = mat.ptr<cv::Vec3b>(r);
    for (int c = 0; c < mat.cols; ++c) img(c, r) = Rgb{row[c][2], row[c][1], row[c][0]};
  }
  return img;
}

void save_color(const ColorImage& image, const std::filesystem::path& path) {
  cv::Mat mat(image.height(), image.width(), CV_8UC3);
  for (int r = 0; r < image.height(); ++r) {
    auto* row = mat.ptr<cv::Vec3b>(r);
    for (int c = 0; c < image.width(); ++c) {
      const Rgb px = image(c, r);
      row[c] = cv::Vec3b(px.b, px.g, px.r);
    }
  }
  write_png(mat, path);
}

}  // namespace scenegeo
