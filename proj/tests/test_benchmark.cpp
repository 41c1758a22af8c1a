#include <gtest/gtest.h>

#include <chrono>

#include "oracles.hpp"
#include "scenegeo/benchmark.hpp"
#include "scenegeo/io_util.hpp"
#include "scenegeo/synthetic.hpp"
#include "support.hpp"

using namespace scenegeo;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

class OffsetPredictor final : public Predictor {
 public:
  explicit OffsetPredictor(float offset) : offset_(offset) {}
  std::string name() const override { return "offset"; }

 protected:
  PredictResponse do_predict(const PredictRequest&, const DepthMap* gt) override {
    DepthMap out = *gt;
    for (auto& v : out.values()) v += offset_;
    return {out};
  }

 private:
  float offset_;
};

SceneRecord numbered_scene(int frames) {
  SceneRecord scene;
  scene.id = "seq";
  for (int f = 0; f < frames; ++f) {
    ViewRecord v;
    v.frame = f;
    v.image = "img" + std::to_string(f);
    scene.views.push_back(v);
  }
  return scene;
}

std::vector<std::pair<int, int>> frames_of(const std::vector<PairSpec>& pairs) {
  std::vector<std::pair<int, int>> out;
  for (const auto& p : pairs) out.emplace_back(p.source.frame, p.target.frame);
  return out;
}

ViewRecord write_view(const fs::path& dir, const std::string& name, const Camera& cam, const DepthMap& depth,
                      int frame) {
  fs::create_directories(dir);
  ViewRecord v;
  v.frame = frame;
  v.camera = cam;
  v.image = dir / (name + ".png");
  v.depth = dir / (name + ".dpt");
  save_color(ColorImage(cam.width(), cam.height(), Rgb{90, 90, 90}), v.image);
  save_depth(depth, v.depth);
  return v;
}

// Three fronto-parallel planes at 5 m: B sees A's frame shifted 3 px right and
// cropped to 17 columns; C is A translated 6 m sideways (12 px at this depth).
SceneRecord overlap_fixture(const fs::path& dir) {
  Camera a;
  a.intrinsics = Intrinsics{10, 10, 9.5, 4.5, 20, 10};
  Camera b = a;
  b.intrinsics.width = 17;
  b.intrinsics.cx = a.intrinsics.cx - 3;
  Camera c = a;
  c.pose.translation = Vec3(6.0, 0, 0);
  SceneRecord scene;
  scene.id = "tau";
  scene.views.push_back(write_view(dir, "a", a, DepthMap(20, 10, 5.0f), 0));
  scene.views.push_back(write_view(dir, "b", b, DepthMap(17, 10, 5.0f), 1));
  scene.views.push_back(write_view(dir, "c", c, DepthMap(20, 10, 5.0f), 2));
  return scene;
}

}  // namespace

TEST(PairSelection, SequentialBlocks) {
  EXPECT_EQ(frames_of(select_pairs_sequential(numbered_scene(150))),
            (std::vector<std::pair<int, int>>{{0, 9}, {50, 59}, {100, 109}}));
  // A trailing partial block counts when both offsets exist.
  EXPECT_EQ(frames_of(select_pairs_sequential(numbered_scene(160))).size(), 4u);
  EXPECT_EQ(frames_of(select_pairs_sequential(numbered_scene(159))).size(), 3u);
  EXPECT_TRUE(select_pairs_sequential(numbered_scene(9)).empty());
  EXPECT_EQ(frames_of(select_pairs_sequential(numbered_scene(30), {10, 2, 5})),
            (std::vector<std::pair<int, int>>{{2, 5}, {12, 15}, {22, 25}}));
  EXPECT_THROW(select_pairs_sequential(numbered_scene(30), {5, 0, 5}), InvalidInput);
  EXPECT_THROW(select_pairs_sequential(numbered_scene(30), {5, 3, 3}), InvalidInput);
}

TEST(PairSelection, OverlapRuleKeepsHighOverlapPairs) {
  ScratchDir dir("tau");
  const SceneRecord scene = overlap_fixture(dir.path());
  // Hand-computed coverage: A->B 17/17, B->A 17/20, everything involving C 8/W.
  const auto pairs = select_pairs_overlap(scene, {0.8});
  ASSERT_EQ(frames_of(pairs), (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
  EXPECT_DOUBLE_EQ(*pairs[0].overlap, 1.0);
  EXPECT_DOUBLE_EQ(*pairs[1].overlap, 0.85);
  EXPECT_EQ(select_pairs_overlap(scene, {0.3}).size(), 6u);
  EXPECT_EQ(select_pairs_overlap(scene, {0.9}).size(), 1u);
}

TEST(Benchmark, PairMatchesStraightLineComputation) {
  ScratchDir dir("pair");
  // Source: a near slab (2 m) on the right half in front of a 4 m wall.
  const Camera src = simple_camera(16, 8, 8.0);
  Camera tgt = src;
  tgt.pose.translation = Vec3(0.5, 0, 0);
  DepthMap src_depth(16, 8, 4.0f);
  for (int r = 0; r < 8; ++r)
    for (int c = 8; c < 16; ++c) src_depth(c, r) = 2.0f;
  DepthMap tgt_depth(16, 8, 4.0f);
  for (int r = 0; r < 8; ++r)
    for (int c = 6; c < 16; ++c) tgt_depth(c, r) = c < 14 ? 2.0f : 3.5f;

  PairSpec pair{"two", write_view(dir / "s", "src", src, src_depth, 0), write_view(dir / "t", "tgt", tgt, tgt_depth, 1),
                std::nullopt};
  NnFillPredictor nn;
  const PairRecord rec = evaluate_pair(pair, nn);
  ASSERT_FALSE(rec.failed()) << rec.error;

  const DepthMap sparse = oracles::reproject_sparse(src_depth, src, tgt);
  const Mask known = mask_of(sparse);
  const DepthMap pred = oracles::nearest_fill(sparse, known);
  std::size_t n = 0;
  const auto expected = oracles::mae_holes(pred, tgt_depth, known, &n);
  ASSERT_TRUE(expected);
  EXPECT_GT(n, 0u);
  EXPECT_EQ(rec.pixel_count, n);
  EXPECT_NEAR(*rec.mae, *expected, 1e-9);
}

TEST(Benchmark, PairRequestMatchesIndependentReprojection) {
  ScratchDir dir("reproj");
  const auto manifest_path = write_synthetic_dataset(dir.path(), {1, 40, 24, 18});
  const DatasetManifest m = load_dataset_manifest(manifest_path);
  const auto& views = m.scenes[0].views;
  for (int i = 0; i + 7 < 40; i += 5) {
    const ViewData s = load_view(views[i]);
    const ViewData t = load_view(views[i + 7]);
    const PredictRequest req = make_pair_request(s, t, "x");
    const DepthMap ref = oracles::reproject_sparse(s.depth, s.camera, t.camera);
    ASSERT_EQ(req.known, mask_of(ref)) << i;
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(req.sparse[k], ref[k], 1e-6 * ref[k]);
    ASSERT_TRUE(req.pose);
  }
}

TEST(Benchmark, PassthroughScoresZero) {
  for (DepthFormat fmt : {DepthFormat::RawFloat, DepthFormat::Png16Millimeter}) {
    ScratchDir dir("null");
    SyntheticDatasetConfig cfg;
    cfg.frames = 150;
    cfg.depth_format = fmt;
    const DatasetManifest m = load_dataset_manifest(write_synthetic_dataset(dir.path(), cfg));
    GtPassthroughPredictor p;
    const BenchmarkReport r = run_benchmark(m, p);
    EXPECT_EQ(r.pairs.size(), 6u);
    EXPECT_EQ(r.included_pairs, 6u);
    ASSERT_TRUE(r.aggregate_mae);
    EXPECT_EQ(*r.aggregate_mae, 0.0);
    EXPECT_TRUE(r.scene_errors.empty());
  }
}

TEST(Benchmark, OffsetPredictorScoresOffset) {
  ScratchDir dir("offset");
  SyntheticDatasetConfig cfg;
  cfg.frames = 60;
  const DatasetManifest m = load_dataset_manifest(write_synthetic_dataset(dir.path(), cfg));
  OffsetPredictor p(0.25f);  // a power of two: float rounding stays far below the tolerance
  const BenchmarkReport r = run_benchmark(m, p);
  ASSERT_TRUE(r.aggregate_mae);
  EXPECT_EQ(r.included_pairs, 4u);
  EXPECT_NEAR(*r.aggregate_mae, 0.25, 1e-6);
}

TEST(Benchmark, ReportsAreDeterministic) {
  ScratchDir dir("det");
  SyntheticDatasetConfig cfg;
  cfg.frames = 60;
  const DatasetManifest m = load_dataset_manifest(write_synthetic_dataset(dir / "data", cfg));
  NnFillPredictor p;
  BenchmarkConfig serial;
  BenchmarkConfig parallel;
  parallel.jobs = 4;
  parallel.batch_size = 3;
  const BenchmarkReport a = run_benchmark(m, p, serial);
  const BenchmarkReport b = run_benchmark(m, p, parallel);
  save_report(a, dir / "a");
  save_report(b, dir / "b");
  EXPECT_EQ(file_bytes(dir / "a" / "report.csv"), file_bytes(dir / "b" / "report.csv"));
  auto ja = report_to_json(a), jb = report_to_json(b);
  EXPECT_EQ(ja["pairs"], jb["pairs"]);
  EXPECT_EQ(ja["aggregate_mae"], jb["aggregate_mae"]);
  save_report(run_benchmark(m, p, serial), dir / "c");
  EXPECT_EQ(file_bytes(dir / "a" / "report.json"), file_bytes(dir / "c" / "report.json"));
  EXPECT_EQ(ja.at("units"), "meters");
  EXPECT_EQ(ja.at("config_hash").get<std::string>().size(), 64u);
  EXPECT_EQ(file_bytes(dir / "a" / "report.csv").rfind("scene,src,tgt,count,mae_m\n", 0), 0u);
}

TEST(Benchmark, MissingFilesAndFailuresAreReported) {
  ScratchDir dir("missing");
  SyntheticDatasetConfig cfg;
  cfg.frames = 60;
  DatasetManifest m = load_dataset_manifest(write_synthetic_dataset(dir.path(), cfg));
  fs::remove(m.scenes[1].views[59].depth);
  fs::remove(m.scenes[1].views[9].depth);
  GtPassthroughPredictor p;
  const BenchmarkReport r = run_benchmark(m, p);
  ASSERT_EQ(r.scene_errors.size(), 1u);
  EXPECT_NE(r.scene_errors[0].find("scene0001"), std::string::npos);
  EXPECT_EQ(r.failed_pairs, 2u);
  EXPECT_EQ(r.included_pairs, 2u);
  EXPECT_EQ(*r.aggregate_mae, 0.0);
  const std::string csv = report_to_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Benchmark, MaxScenesDefaults) {
  BenchmarkConfig cfg;
  EXPECT_EQ(cfg.effective_max_scenes(), 50);
  cfg.rule = OverlapRule{};
  EXPECT_TRUE(cfg.to_json().at("max_scenes").is_null());
  cfg.max_scenes = 1;
  EXPECT_EQ(cfg.to_json().at("max_scenes"), 1);
}

TEST(DatasetManifest, MalformedInputs) {
  ScratchDir dir("manifest");
  write_text("{not json", dir / "bad.json");
  EXPECT_THROW(load_dataset_manifest(dir / "bad.json"), FormatError);
  write_text(R"({"dataset": "x", "scenes": [{"id": "s", "views": [{"frame": 0}]}]})", dir / "noimage.json");
  EXPECT_THROW(load_dataset_manifest(dir / "noimage.json"), FormatError);
  EXPECT_THROW(load_dataset_manifest(dir / "absent.json"), IoError);
}
