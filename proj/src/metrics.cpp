#include "scenegeo/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace scenegeo {

void LossConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("lambda must lie in [0, 1]");
}

double scale_invariant_loss(const DepthMap& pred, const DepthMap& target, const LossConfig& cfg) {
  cfg.validate();
  require_same_shape(pred, target, "scale_invariant_loss");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!(target[i] > 0.0f)) continue;
    if (!(pred[i] > 0.0f)) throw InvalidInput("prediction must be positive wherever the target is valid");
    const double psi = std::log(static_cast<double>(pred[i])) - std::log(static_cast<double>(target[i]));
    sum += psi;
    sum_sq += psi * psi;
    ++count;
  }
  if (count == 0) throw InvalidInput("scale_invariant_loss: target has no valid pixels");
  const double t = static_cast<double>(count);
  const double radicand = sum_sq / t - cfg.lambda / (t * t) * sum * sum;
  return std::sqrt(std::max(0.0, radicand));
}

ExtrapolationError mae_extrapolated(const DepthMap& pred, const DepthMap& gt, const Mask& known) {
  require_same_shape(pred, gt, "mae_extrapolated pred vs gt");
  require_same_shape(known, gt, "mae_extrapolated mask vs gt");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (known[i] || !(gt[i] > 0.0f)) continue;
    sum += std::abs(static_cast<double>(pred[i]) - static_cast<double>(gt[i]));
    ++count;
  }
  ExtrapolationError out;
  out.pixel_count = count;
  if (count > 0) out.mae = sum / static_cast<double>(count);
  return out;
}

double overlap(const PointCloud& pc, const Camera& cam) {
  const RenderedDepth rendered = render_depth(pc, cam);
  return static_cast<double>(count_true(rendered.mask)) / static_cast<double>(rendered.mask.size());
}

}  // namespace scenegeo
