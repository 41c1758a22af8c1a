#pragma once

#include <optional>

#include "scenegeo/raster.hpp"

namespace scenegeo {

// ---- scale-and-shift alignment ---------------------------------------------

struct AffineDepth {
  double scale = 1.0;
  double shift = 0.0;  // metres
};

/// Adam on the mean absolute error (lr 0.01, at most 100 steps, early stop after 10).
struct AlignConfig {
  double learning_rate = 0.01;
  int max_steps = 100;
  int patience = 10;
  /// Starting point of the descent; (1, 0) unless a caller warm-starts.
  AffineDepth initial{};
  void validate() const;
};

struct AlignResult {
  AffineDepth params;
  double objective = 0.0;  // mean |s * pred + t - sparse| at `params`
  int steps = 0;           // optimiser steps actually taken
};

/// Least-squares (s, t) over pixels valid in both maps.
/// Throws DegenerateProblem with fewer than two joint pixels or constant pred.
AffineDepth align_closed_form(const DepthMap& pred, const DepthMap& sparse);

AlignResult align_iterative(const DepthMap& pred, const DepthMap& sparse, const AlignConfig& cfg = {});

/// mean |s * pred + t - sparse| over jointly valid pixels.
double alignment_objective(const DepthMap& pred, const DepthMap& sparse, AffineDepth params);

/// Subgradient of alignment_objective with sign(0) = 0, as (d/ds, d/dt).
std::pair<double, double> alignment_subgradient(const DepthMap& pred, const DepthMap& sparse, AffineDepth params);

/// s * depth + t at valid pixels, clamped below at `min_depth`.
DepthMap apply_affine(const DepthMap& depth, AffineDepth params, float min_depth = 1e-3f);

// ---- nearest-neighbour fill --------------------------------------------------

/// Copies every non-donor pixel from its nearest donor (Euclidean pixel distance);
/// equidistant donors are resolved by scanline order (lowest row, then column).
/// Pixels farther than `max_radius` keep their value. Throws InvalidInput when
/// there is no donor at all.
DepthMap fill_from_nearest(const DepthMap& depth, const Mask& donors, std::optional<double> max_radius = {});

// ---- depth snapping --------------------------------------------------------

struct SnapConfig {
  /// Metres per pixel. Unset means relative_threshold * median(depth).
  std::optional<double> gradient_threshold;
  double relative_threshold = 0.05;
  /// Unset means unbounded.
  std::optional<double> max_region_radius;
  void validate() const;
  double threshold_for(const DepthMap& depth) const;
};

/// Pixels with gradient magnitude at or above the threshold take the value of the
/// nearest below-threshold pixel. Requires dense depth; throws InvalidInput when
/// every pixel is above the threshold.
DepthMap snap_depth(const DepthMap& depth, const SnapConfig& cfg = {});

}  // namespace scenegeo
