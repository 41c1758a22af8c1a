#include "scenegeo/align_snap.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace scenegeo {

namespace {

struct JointSamples {
  std::vector<double> pred;
  std::vector<double> target;
};

JointSamples joint_samples(const DepthMap& pred, const DepthMap& sparse) {
  require_same_shape(pred, sparse, "alignment pred vs sparse");
  JointSamples js;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] > 0.0f && sparse[i] > 0.0f) {
      js.pred.push_back(pred[i]);
      js.target.push_back(sparse[i]);
    }
  }
  return js;
}

void require_well_posed(const JointSamples& js) {
  if (js.pred.size() < 2) throw DegenerateProblem("alignment needs at least two jointly valid pixels");
  double lo = js.pred.front();
  double hi = js.pred.front();
  for (double p : js.pred) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  if (hi - lo <= 1e-12 * std::max(1.0, hi)) throw DegenerateProblem("alignment prediction is constant");
}

double objective(const JointSamples& js, AffineDepth a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < js.pred.size(); ++i) sum += std::abs(a.scale * js.pred[i] + a.shift - js.target[i]);
  return sum / static_cast<double>(js.pred.size());
}

std::pair<double, double> subgradient(const JointSamples& js, AffineDepth a) {
  double gs = 0.0;
  double gt = 0.0;
  for (std::size_t i = 0; i < js.pred.size(); ++i) {
    const double r = a.scale * js.pred[i] + a.shift - js.target[i];
    const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    gs += sign * js.pred[i];
    gt += sign;
  }
  const double n = static_cast<double>(js.pred.size());
  return {gs / n, gt / n};
}

}  // namespace

void AlignConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidInput("learning_rate must be positive");
  if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
  if (patience < 1) throw InvalidInput("patience must be at least 1");
  if (!std::isfinite(initial.scale) || !std::isfinite(initial.shift)) throw InvalidInput("non-finite initial alignment");
}

AffineDepth align_closed_form(const DepthMap& pred, const DepthMap& sparse) {
  const JointSamples js = joint_samples(pred, sparse);
  require_well_posed(js);
  const double n = static_cast<double>(js.pred.size());
  double mean_p = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < js.pred.size(); ++i) {
    mean_p += js.pred[i];
    mean_y += js.target[i];
  }
  mean_p /= n;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < js.pred.size(); ++i) {
    const double dp = js.pred[i] - mean_p;
    sxy += dp * (js.target[i] - mean_y);
    sxx += dp * dp;
  }
  if (!(sxx > 0.0)) throw DegenerateProblem("alignment prediction is constant");
  const double s = sxy / sxx;
  return {s, mean_y - s * mean_p};
}

AlignResult align_iterative(const DepthMap& pred, const DepthMap& sparse, const AlignConfig& cfg) {
  cfg.validate();
  const JointSamples js = joint_samples(pred, sparse);
  require_well_posed(js);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  double params[2] = {cfg.initial.scale, cfg.initial.shift};
  double m[2] = {0.0, 0.0};
  double v[2] = {0.0, 0.0};
  AlignResult best{cfg.initial, objective(js, cfg.initial), 0};
  int since_improvement = 0;
  int step = 0;
  while (step < cfg.max_steps && since_improvement < cfg.patience) {
    ++step;
    const auto [gs, gt] = subgradient(js, {params[0], params[1]});
    const double grad[2] = {gs, gt};
    const double bias1 = 1.0 - std::pow(kBeta1, step);
    const double bias2 = 1.0 - std::pow(kBeta2, step);
    for (int k = 0; k < 2; ++k) {
      m[k] = kBeta1 * m[k] + (1.0 - kBeta1) * grad[k];
      v[k] = kBeta2 * v[k] + (1.0 - kBeta2) * grad[k] * grad[k];
      params[k] -= cfg.learning_rate * (m[k] / bias1) / (std::sqrt(v[k] / bias2) + kEps);
    }
    const AffineDepth current{params[0], params[1]};
    const double f = objective(js, current);
    if (f < best.objective) {
      best.params = current;
      best.objective = f;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
  }
  best.steps = step;
  return best;
}

double alignment_objective(const DepthMap& pred, const DepthMap& sparse, AffineDepth params) {
  const JointSamples js = joint_samples(pred, sparse);
  if (js.pred.empty()) throw DegenerateProblem("no jointly valid pixels");
  return objective(js, params);
}

std::pair<double, double> alignment_subgradient(const DepthMap& pred, const DepthMap& sparse, AffineDepth params) {
  const JointSamples js = joint_samples(pred, sparse);
  if (js.pred.empty()) throw DegenerateProblem("no jointly valid pixels");
  return subgradient(js, params);
}

DepthMap apply_affine(const DepthMap& depth, AffineDepth params, float min_depth) {
  DepthMap out(depth.width(), depth.height(), kInvalidDepth);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!(depth[i] > 0.0f)) continue;
    const double d = params.scale * depth[i] + params.shift;
    out[i] = std::max(min_depth, static_cast<float>(d));
  }
  return out;
}

DepthMap fill_from_nearest(const DepthMap& depth, const Mask& donors, std::optional<double> max_radius) {
  require_same_shape(depth, donors, "fill_from_nearest");
  const int w = depth.width();
  const int h = depth.height();
  if (count_true(donors) == 0) throw InvalidInput("nearest-neighbour fill needs at least one donor pixel");

  // Nearest donor row within each column; on a tie the upper donor wins.
  Grid<int> column_nearest(w, h, -1);
  for (int c = 0; c < w; ++c) {
    int above = -1;
    for (int r = 0; r < h; ++r) {
      if (donors(c, r)) above = r;
      column_nearest(c, r) = above;
    }
    int below = -1;
    for (int r = h - 1; r >= 0; --r) {
      if (donors(c, r)) below = r;
      const int up = column_nearest(c, r);
      if (below >= 0 && (up < 0 || below - r < r - up)) column_nearest(c, r) = below;
    }
  }

  const long long radius_sq = max_radius ? static_cast<long long>(std::floor(*max_radius * *max_radius))
                                         : std::numeric_limits<long long>::max();
  DepthMap out = depth;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (donors(c, r)) continue;
      long long best_d2 = std::numeric_limits<long long>::max();
      long long best_scan = std::numeric_limits<long long>::max();
      int best_col = -1;
      int best_row = -1;
      for (int dx = 0; dx < w; ++dx) {
        const long long dx2 = static_cast<long long>(dx) * dx;
        if (dx2 > best_d2 || dx2 > radius_sq) break;
        for (int col : {c - dx, c + dx}) {
          if (col < 0 || col >= w || (dx == 0 && col != c)) continue;
          const int row = column_nearest(col, r);
          if (row < 0) continue;
          const long long dy = row - r;
          const long long d2 = dx2 + dy * dy;
          const long long scan = static_cast<long long>(row) * w + col;
          if (d2 < best_d2 || (d2 == best_d2 && scan < best_scan)) {
            best_d2 = d2;
            best_scan = scan;
            best_col = col;
            best_row = row;
          }
        }
      }
      if (best_col < 0 || best_d2 > radius_sq) continue;
      out(c, r) = depth(best_col, best_row);
    }
  }
  return out;
}

void SnapConfig::validate() const {
  if (gradient_threshold && !(*gradient_threshold > 0.0)) throw InvalidInput("gradient_threshold must be positive");
  if (!gradient_threshold && !(relative_threshold > 0.0)) throw InvalidInput("relative_threshold must be positive");
  if (max_region_radius && !(*max_region_radius >= 0.0)) throw InvalidInput("max_region_radius must be non-negative");
}

double SnapConfig::threshold_for(const DepthMap& depth) const {
  validate();
  if (gradient_threshold) return *gradient_threshold;
  return relative_threshold * median_valid_depth(depth);
}

DepthMap snap_depth(const DepthMap& depth, const SnapConfig& cfg) {
  const ScalarField grad = gradient_magnitude(depth);
  const double threshold = cfg.threshold_for(depth);
  Mask below(depth.width(), depth.height(), 0);
  for (std::size_t i = 0; i < grad.size(); ++i) below[i] = grad[i] < threshold ? 1 : 0;
  if (count_true(below) == 0) throw InvalidInput("snap_depth: every pixel exceeds the gradient threshold");
  return fill_from_nearest(depth, below, cfg.max_region_radius);
}

}  // namespace scenegeo
