#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "scenegeo/align_snap.hpp"
#include "support.hpp"

using namespace scenegeo;
using namespace testing_support;

namespace {

DepthMap row_profile(const std::vector<float>& values, int rows) {
  DepthMap d(static_cast<int>(values.size()), rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < d.width(); ++c) d(c, r) = values[static_cast<std::size_t>(c)];
  return d;
}

}  // namespace

// ---- closed form -------------------------------------------------------------

TEST(AlignClosedForm, IdentityAndExactAffine) {
  Rng rng(51);
  const DepthMap pred = random_depth(rng, 10, 10, 0.5, 8.0);
  const AffineDepth id = align_closed_form(pred, pred);
  EXPECT_NEAR(id.scale, 1.0, 1e-12);
  EXPECT_NEAR(id.shift, 0.0, 1e-12);

  // Sixteenths keep 2 * pred + 0.5 exact in single precision.
  DepthMap grid(10, 10), sparse(10, 10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = static_cast<float>(1 + rng.index(200)) / 16.0f;
    if (i % 3 == 0) sparse[i] = 2.0f * grid[i] + 0.5f;
  }
  const AffineDepth fit = align_closed_form(grid, sparse);
  EXPECT_NEAR(fit.scale, 2.0, 1e-9);
  EXPECT_NEAR(fit.shift, 0.5, 1e-9);
}

TEST(AlignClosedForm, BeatsGridSearchOnNoisyInstance) {
  for_each_seed(5, 52, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    DepthMap pred(20, 1), sparse(20, 1);
    for (int i = 0; i < 20; ++i) {
      pred[i] = static_cast<float>(rng.uniform(1.0, 4.0));
      sparse[i] = static_cast<float>(1.3 * pred[i] - 0.2 + rng.uniform(-0.1, 0.1));
    }
    const AffineDepth fit = align_closed_form(pred, sparse);
    auto sse = [&](double s, double t) {
      double acc = 0;
      for (int i = 0; i < 20; ++i) acc += std::pow(s * pred[i] + t - sparse[i], 2);
      return acc;
    };
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 600; ++a)
      for (int b = 0; b <= 600; ++b) best = std::min(best, sse(1.0 + 1e-3 * a, -0.5 + 1e-3 * b));
    EXPECT_LE(sse(fit.scale, fit.shift), best + 1e-12);
  });
}

TEST(AlignClosedForm, DegenerateInputs) {
  DepthMap pred(4, 1, 2.0f), sparse(4, 1, 1.0f);
  EXPECT_THROW(align_closed_form(pred, sparse), DegenerateProblem);
  pred[0] = 3.0f;
  DepthMap one(4, 1, 0.0f);
  one[0] = 1.0f;
  EXPECT_THROW(align_closed_form(pred, one), DegenerateProblem);
  EXPECT_THROW(align_iterative(pred, one), DegenerateProblem);
}

// ---- iterative -----------------------------------------------------------------

TEST(AlignIterative, StaysAtIdentityOnPerfectInput) {
  Rng rng(53);
  const DepthMap pred = random_depth(rng, 10, 10, 1.0, 5.0);
  const AlignResult r = align_iterative(pred, pred);
  EXPECT_EQ(r.params.scale, 1.0);
  EXPECT_EQ(r.params.shift, 0.0);
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_LE(r.steps, AlignConfig{}.patience);
}

TEST(AlignIterative, NeverWorseThanStart) {
  for_each_seed(50, 54, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const DepthMap pred = random_depth(rng, 8, 8, 0.5, 6.0);
    DepthMap sparse = random_depth(rng, 8, 8, 0.5, 9.0, 0.5);
    sparse[0] = 1.0f;
    sparse[1] = 2.0f;
    AlignConfig cfg;
    cfg.learning_rate = rng.uniform(1e-3, 0.1);
    const AlignResult r = align_iterative(pred, sparse, cfg);
    EXPECT_LE(r.objective, alignment_objective(pred, sparse, {}));
    EXPECT_NEAR(r.objective, oracles::affine_mae(pred, sparse, r.params.scale, r.params.shift), 1e-12);
    EXPECT_LE(r.steps, cfg.max_steps);
  });
}

TEST(AlignIterative, WarmStartReachesExactAffine) {
  Rng rng(55);
  DepthMap pred(10, 10), sparse(10, 10);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<float>(rng.uniform(1.0, 5.0));
    sparse[i] = static_cast<float>(1.5 * pred[i]);
  }
  AlignConfig cfg;
  cfg.initial = align_closed_form(pred, sparse);
  EXPECT_LT(align_iterative(pred, sparse, cfg).objective, 1e-6);
}

TEST(AlignIterative, SubgradientMatchesFiniteDifferences) {
  for_each_seed(100, 56, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const DepthMap pred = random_depth(rng, 6, 5, 0.5, 5.0);
    const DepthMap sparse = random_depth(rng, 6, 5, 0.5, 5.0, 0.3);
    const AffineDepth at{rng.uniform(0.5, 2.0), rng.uniform(-1.0, 1.0)};
    // Skip points within h of a kink.
    const double h = 1e-6;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred[i] > 0 && sparse[i] > 0 && std::abs(at.scale * pred[i] + at.shift - sparse[i]) < 1e-4) return;
    }
    const auto [gs, gt] = alignment_subgradient(pred, sparse, at);
    const double fs = (oracles::affine_mae(pred, sparse, at.scale + h, at.shift) -
                       oracles::affine_mae(pred, sparse, at.scale - h, at.shift)) / (2 * h);
    const double ft = (oracles::affine_mae(pred, sparse, at.scale, at.shift + h) -
                       oracles::affine_mae(pred, sparse, at.scale, at.shift - h)) / (2 * h);
    EXPECT_LT(std::abs(gs - fs), 1e-4 * std::max(1.0, std::abs(fs)));
    EXPECT_LT(std::abs(gt - ft), 1e-4 * std::max(1.0, std::abs(ft)));
  });
}

TEST(AlignIterative, SignOfZeroIsZero) {
  DepthMap pred(2, 1), sparse(2, 1);
  pred[0] = 1.0f;
  pred[1] = 2.0f;
  sparse = pred;
  const auto [gs, gt] = alignment_subgradient(pred, sparse, {});
  EXPECT_EQ(gs, 0.0);
  EXPECT_EQ(gt, 0.0);
}

TEST(AlignIterative, ConfigValidation) {
  AlignConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.patience = 0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(ApplyAffine, ClampsAndKeepsHoles) {
  DepthMap d(3, 1);
  d[0] = 1.0f;
  d[2] = 2.0f;
  const DepthMap out = apply_affine(d, {2.0, -3.0});
  EXPECT_FLOAT_EQ(out[0], 1e-3f);
  EXPECT_EQ(out[1], 0.0f);
  EXPECT_FLOAT_EQ(out[2], 1.0f);
}

// ---- nearest fill ---------------------------------------------------------------

TEST(NearestFill, MatchesBruteForce) {
  for_each_seed(200, 57, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const int w = 1 + static_cast<int>(rng.index(20)), h = 1 + static_cast<int>(rng.index(20));
    DepthMap d(w, h);
    // Few distinct values expose tie-breaking.
    for (auto& v : d.values()) v = static_cast<float>(1 + rng.index(4));
    Mask donors = random_mask(rng, w, h, rng.uniform(0.02, 0.5));
    donors[rng.index(donors.size())] = 1;
    EXPECT_EQ(fill_from_nearest(d, donors), oracles::nearest_fill(d, donors));
  });
}

TEST(NearestFill, HalfPlaneExtendsBoundaryColumn) {
  DepthMap d(6, 4, 0.0f);
  Mask known(6, 4, 0);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) {
      d(c, r) = static_cast<float>(1 + r + 10 * c);
      known(c, r) = 1;
    }
  }
  const DepthMap out = fill_from_nearest(d, known);
  for (int r = 0; r < 4; ++r) {
    for (int c = 3; c < 6; ++c) EXPECT_EQ(out(c, r), d(2, r));
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out(c, r), d(c, r));
  }
}

TEST(NearestFill, EquidistantDonorsResolveByScanline) {
  DepthMap d(3, 3, 0.0f);
  Mask donors(3, 3, 0);
  d(1, 0) = 5.0f;  // above
  d(0, 1) = 7.0f;  // left
  d(2, 1) = 8.0f;  // right
  d(1, 2) = 9.0f;  // below
  donors(1, 0) = donors(0, 1) = donors(2, 1) = donors(1, 2) = 1;
  EXPECT_EQ(fill_from_nearest(d, donors)(1, 1), 5.0f);
  donors(1, 0) = 0;
  EXPECT_EQ(fill_from_nearest(d, donors)(1, 1), 7.0f);
}

TEST(NearestFill, MaxRadiusLeavesFarPixels) {
  DepthMap d(5, 1, 0.0f);
  Mask donors(5, 1, 0);
  d[0] = 2.0f;
  donors[0] = 1;
  const DepthMap out = fill_from_nearest(d, donors, 2.0);
  EXPECT_EQ(out[1], 2.0f);
  EXPECT_EQ(out[2], 2.0f);
  EXPECT_EQ(out[3], 0.0f);
  EXPECT_THROW(fill_from_nearest(d, Mask(5, 1, 0)), InvalidInput);
}

// ---- snapping --------------------------------------------------------------------

TEST(Snap, ConstantMapUnchanged) {
  const DepthMap d(7, 5, 2.5f);
  EXPECT_EQ(snap_depth(d), d);
  SnapConfig cfg;
  cfg.gradient_threshold = 1e-6;
  EXPECT_EQ(snap_depth(d, cfg), d);
}

TEST(Snap, RampSnapsToPlateaus) {
  const DepthMap d = row_profile({1, 1, 1, 1.5f, 2, 2.5f, 3, 3, 3}, 4);
  SnapConfig cfg;
  cfg.gradient_threshold = 0.5;
  const DepthMap out = snap_depth(d, cfg);
  // Forward differences flag columns 2..5; each copies its nearest flat column.
  const DepthMap expected = row_profile({1, 1, 1, 1, 3, 3, 3, 3, 3}, 4);
  EXPECT_EQ(out, expected);
}

TEST(Snap, OutputValuesComeFromFlatPixels) {
  for_each_seed(100, 58, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const int w = 2 + static_cast<int>(rng.index(20)), h = 2 + static_cast<int>(rng.index(12));
    DepthMap d(w, h);
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) d(c, r) = c < w / 2 ? 1.0f : 3.0f + 0.01f * static_cast<float>(rng.index(3));
    for (int k = 0; k < 5; ++k) d[rng.index(d.size())] = static_cast<float>(rng.uniform(1.0, 3.0));
    SnapConfig cfg;
    cfg.gradient_threshold = 0.3;
    const ScalarField g = gradient_magnitude(d);
    std::set<float> allowed;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (g[i] < 0.3) allowed.insert(d[i]);
    if (allowed.empty()) return;
    const DepthMap out = snap_depth(d, cfg);
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_TRUE(allowed.count(out[i])) << i;
      if (g[i] < 0.3) { EXPECT_EQ(out[i], d[i]); }
    }
  });
}

TEST(Snap, IdempotentOnRampFamilies) {
  for_each_seed(60, 59, [](Rng& rng, std::uint64_t seed) {
    SCOPED_TRACE(seed);
    const int ramp = 1 + static_cast<int>(rng.index(5));
    const int plateau = ramp + 1 + static_cast<int>(rng.index(4));
    std::vector<float> profile;
    const float lo = static_cast<float>(rng.uniform(0.5, 2.0)), hi = lo + static_cast<float>(rng.uniform(1.0, 3.0));
    for (int i = 0; i < plateau; ++i) profile.push_back(lo);
    for (int i = 1; i <= ramp; ++i) profile.push_back(lo + (hi - lo) * static_cast<float>(i) / (ramp + 1));
    for (int i = 0; i < plateau; ++i) profile.push_back(hi);
    const DepthMap d = row_profile(profile, 3);
    SnapConfig cfg;
    cfg.gradient_threshold = (hi - lo) / (ramp + 1) * 0.99;
    const DepthMap once = snap_depth(d, cfg);
    EXPECT_EQ(snap_depth(once, cfg), once);
  });
}

TEST(Snap, DefaultThresholdIsRelativeToMedian) {
  const DepthMap d = row_profile({2, 2, 2, 4, 4}, 1);
  EXPECT_DOUBLE_EQ(SnapConfig{}.threshold_for(d), 0.1);
  SnapConfig cfg;
  cfg.gradient_threshold = 0.7;
  EXPECT_DOUBLE_EQ(cfg.threshold_for(d), 0.7);
}

TEST(Snap, Errors) {
  SnapConfig cfg;
  cfg.gradient_threshold = 0.1;
  DepthMap d = row_profile({1, 2, 3, 4}, 1);
  EXPECT_THROW(snap_depth(d, cfg), InvalidInput);  // every pixel is steep
  d[0] = 0.0f;
  EXPECT_THROW(snap_depth(d, cfg), InvalidInput);  // not dense
  cfg.gradient_threshold = -1;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}
