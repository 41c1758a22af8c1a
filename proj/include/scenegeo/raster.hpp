#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scenegeo/errors.hpp"

namespace scenegeo {

/// Row-major H x W raster. Indexing is (col, row), matching image coordinates (u, v).
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw InvalidInput("raster dimensions must be non-negative");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }
  bool contains(int col, int row) const { return col >= 0 && row >= 0 && col < width_ && row < height_; }

  T& operator()(int col, int row) { return data_[index(col, row)]; }
  const T& operator()(int col, int row) const { return data_[index(col, row)]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  bool operator==(const Rgb&) const = default;
};

inline constexpr float kInvalidDepth = 0.0f;

/// Metric planar depth; 0 marks "no depth".
using DepthMap = Grid<float>;
/// 1 = depth known/present, 0 = hole.
using Mask = Grid<std::uint8_t>;
using ColorImage = Grid<Rgb>;
using ScalarField = Grid<double>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string("dimension mismatch: ") + what);
}

/// Throws InvalidInput if any value is negative or non-finite.
void validate_depth(const DepthMap& depth);
bool is_dense(const DepthMap& depth);

Mask mask_of(const DepthMap& depth);
Mask complement(const Mask& mask);
std::size_t count_true(const Mask& mask);
bool is_subset(const Mask& inner, const Mask& outer);

/// Depth where the mask is set, invalid elsewhere.
DepthMap apply_mask(const DepthMap& depth, const Mask& mask);

Mask resize_nearest(const Mask& mask, int width, int height);

/// Per pixel max(|dx|, |dy|) using forward differences, backward at the last column/row.
/// Requires dense depth.
ScalarField gradient_magnitude(const DepthMap& depth);

double median_valid_depth(const DepthMap& depth);

// ---- files ---------------------------------------------------------------

enum class DepthFormat {
  Png16Millimeter,  // 16-bit grayscale PNG in millimetres, 0 = invalid
  RawFloat,         // "DPT1" header + little-endian float32 values
};

DepthFormat depth_format_for(const std::filesystem::path& path);
const char* to_string(DepthFormat format);
DepthFormat depth_format_from_string(const std::string& name);

DepthMap load_depth(const std::filesystem::path& path, DepthFormat format);
DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& depth, const std::filesystem::path& path, DepthFormat format);
void save_depth(const DepthMap& depth, const std::filesystem::path& path);

/// 8-bit grayscale PNG, 255 = known, 0 = hole. Loading thresholds at 128.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

ColorImage load_color(const std::filesystem::path& path);
void save_color(const ColorImage& image, const std::filesystem::path& path);

}  // namespace scenegeo
