#pragma once

// Scene geometry benchmark: for a pair of ground-truth views (source, target),
// lift the source view, render it at the target camera, ask a predictor to
// complete the target depth from the rendered sparse depth, and score the
// completion only where it had to be extrapolated.
//
// Dataset manifest (JSON, paths relative to the manifest file):
//   {"dataset": "<name>",
//    "scenes": [{"id": "<scene>",
//                "views": [{"frame": 0, "image": "...png", "depth": "...png|.dpt",
//                           "camera": {<camera JSON>}  |  "camera_file": "...json"}]}]}
// Depth must be planar z-depth in metres (16-bit PNGs in millimetres).

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "scenegeo/geometry.hpp"
#include "scenegeo/metrics.hpp"
#include "scenegeo/predictor.hpp"
#include "scenegeo/raster.hpp"

namespace scenegeo {

struct ViewRecord {
  std::filesystem::path image;
  std::filesystem::path depth;
  Camera camera;
  int frame = 0;
};

struct SceneRecord {
  std::string id;
  std::vector<ViewRecord> views;
};

struct DatasetManifest {
  std::string dataset;
  std::vector<SceneRecord> scenes;
};

DatasetManifest load_dataset_manifest(const std::filesystem::path& path);

struct ViewData {
  ColorImage image;
  DepthMap depth;
  Camera camera;
};

/// Loads the rasters of a view and checks them against its camera.
ViewData load_view(const ViewRecord& view);

struct PairSpec {
  std::string scene_id;
  ViewRecord source;
  ViewRecord target;
  std::optional<double> overlap;
};

struct SequentialRule {
  int block = 50;
  int source_offset = 0;
  int target_offset = 9;
  void validate() const;
};

struct OverlapRule {
  double tau = 0.8;
  void validate() const;
};

using PairingRule = std::variant<SequentialRule, OverlapRule>;

/// One (source, target) pair per block of `block` consecutive views, when both
/// offsets exist in the block (a trailing partial block counts).
std::vector<PairSpec> select_pairs_sequential(const SceneRecord& scene, const SequentialRule& rule = {});

/// All ordered pairs (i, j), i != j, whose overlap of view i's lifted ground
/// truth at view j's camera is at least tau.
std::vector<PairSpec> select_pairs_overlap(const SceneRecord& scene, const OverlapRule& rule = {});

struct PairRecord {
  std::string scene_id;
  int source_frame = 0;
  int target_frame = 0;
  std::optional<double> overlap;
  std::size_t pixel_count = 0;
  std::optional<double> mae;  // metres; empty when nothing was extrapolated or on failure
  std::string error;          // non-empty when the pair failed
  bool failed() const { return !error.empty(); }
};

/// The predictor's request for a pair: source GT lifted and rendered at the target.
PredictRequest make_pair_request(const ViewData& source, const ViewData& target, std::string sample_id,
                                 std::string dataset = {});

/// Scores a response for a pair against the target's ground truth.
ExtrapolationError score_pair(const PredictRequest& req, const PredictResponse& resp, const DepthMap& target_gt);

std::string pair_sample_id(const std::string& scene_id, int source_frame, int target_frame);

/// Full procedure for one pair. Failures are returned in PairRecord::error.
PairRecord evaluate_pair(const PairSpec& pair, Predictor& predictor, const std::string& dataset = {});

struct BenchmarkConfig {
  PairingRule rule = SequentialRule{};
  /// Unset: 50 scenes for the sequential rule, all scenes for the overlap rule.
  std::optional<int> max_scenes;
  int jobs = 1;
  std::size_t batch_size = 32;
  int effective_max_scenes() const;
  nlohmann::json to_json() const;
};

struct BenchmarkReport {
  std::string dataset;
  std::string predictor;
  nlohmann::json config;
  std::string config_hash;
  std::vector<PairRecord> pairs;
  std::vector<std::string> scene_errors;
  std::optional<double> aggregate_mae;  // unweighted mean over pairs with pixel_count > 0
  std::size_t included_pairs = 0;
  std::size_t failed_pairs = 0;
};

/// Unweighted mean of per-pair maes over pairs that extrapolated at least one pixel.
std::optional<double> aggregate_mae(const std::vector<PairRecord>& pairs, std::size_t* included = nullptr);

BenchmarkReport run_benchmark(const DatasetManifest& manifest, Predictor& predictor, const BenchmarkConfig& cfg = {});

nlohmann::json report_to_json(const BenchmarkReport& report);
std::string report_to_csv(const BenchmarkReport& report);
void save_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace scenegeo
