#pragma once

#include <cstddef>
#include <optional>

#include "scenegeo/geometry.hpp"
#include "scenegeo/pointcloud.hpp"
#include "scenegeo/raster.hpp"

namespace scenegeo {

struct LossConfig {
  double lambda = 0.85;
  void validate() const;
};

/// Scale-invariant log-depth loss over pixels with a valid target:
///   sqrt( mean(psi^2) - lambda * mean(psi)^2 ),  psi = log pred - log target.
/// The radicand is clamped at zero.
double scale_invariant_loss(const DepthMap& pred, const DepthMap& target, const LossConfig& cfg = {});

struct ExtrapolationError {
  std::size_t pixel_count = 0;
  /// Mean absolute error in metres; empty when no pixel was extrapolated.
  std::optional<double> mae;
};

/// Mean |pred - gt| over pixels that are not `known` and have gt > 0. An invalid
/// prediction there counts as |0 - gt|.
ExtrapolationError mae_extrapolated(const DepthMap& pred, const DepthMap& gt, const Mask& known);

/// Fraction of `cam`'s pixels covered when rendering `pc`.
double overlap(const PointCloud& pc, const Camera& cam);

}  // namespace scenegeo
