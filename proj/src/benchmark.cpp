#include "scenegeo/benchmark.hpp"

#include <cstdio>
#include <sstream>

#include "scenegeo/io_util.hpp"
#include "scenegeo/parallel.hpp"
#include "scenegeo/pointcloud.hpp"

namespace scenegeo {

namespace fs = std::filesystem;

DatasetManifest load_dataset_manifest(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  const fs::path root = path.parent_path();
  DatasetManifest manifest;
  try {
    manifest.dataset = j.value("dataset", std::string("unnamed"));
    for (const auto& scene : j.at("scenes")) {
      SceneRecord rec;
      rec.id = scene.at("id").get<std::string>();
      for (const auto& view : scene.at("views")) {
        ViewRecord v;
        v.frame = view.at("frame").get<int>();
        v.image = root / view.at("image").get<std::string>();
        v.depth = root / view.at("depth").get<std::string>();
        if (view.contains("camera")) {
          v.camera = camera_from_json(view.at("camera"));
        } else {
          v.camera = load_camera(root / view.at("camera_file").get<std::string>());
        }
        rec.views.push_back(std::move(v));
      }
      manifest.scenes.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest;
}

ViewData load_view(const ViewRecord& view) {
  ViewData data{load_color(view.image), load_depth(view.depth), view.camera};
  const Intrinsics& intr = view.camera.intrinsics;
  if (data.image.width() != intr.width || data.image.height() != intr.height) {
    throw InvalidInput(view.image.string() + ": image resolution differs from the camera");
  }
  require_same_shape(data.depth, data.image, "view depth vs image");
  return data;
}

void SequentialRule::validate() const {
  if (source_offset < 0 || target_offset < 0) throw InvalidInput("pair offsets must be non-negative");
  if (source_offset == target_offset) throw InvalidInput("source and target offsets must differ");
  if (block <= std::max(source_offset, target_offset)) throw InvalidInput("block must exceed both offsets");
}

void OverlapRule::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("tau must lie in (0, 1]");
}

std::vector<PairSpec> select_pairs_sequential(const SceneRecord& scene, const SequentialRule& rule) {
  rule.validate();
  std::vector<PairSpec> pairs;
  const std::size_t n = scene.views.size();
  const auto block = static_cast<std::size_t>(rule.block);
  for (std::size_t start = 0; start < n; start += block) {
    const std::size_t src = start + static_cast<std::size_t>(rule.source_offset);
    const std::size_t tgt = start + static_cast<std::size_t>(rule.target_offset);
    if (src >= n || tgt >= n) continue;
    pairs.push_back({scene.id, scene.views[src], scene.views[tgt], std::nullopt});
  }
  return pairs;
}

std::vector<PairSpec> select_pairs_overlap(const SceneRecord& scene, const OverlapRule& rule) {
  rule.validate();
  std::vector<PointCloud> clouds;
  clouds.reserve(scene.views.size());
  for (const auto& view : scene.views) {
    const ViewData data = load_view(view);
    clouds.push_back(lift(data.image, data.depth, data.camera, mask_of(data.depth)));
  }
  std::vector<PairSpec> pairs;
  for (std::size_t i = 0; i < scene.views.size(); ++i) {
    for (std::size_t j = 0; j < scene.views.size(); ++j) {
      if (i == j) continue;
      const double phi = overlap(clouds[i], scene.views[j].camera);
      if (phi >= rule.tau) pairs.push_back({scene.id, scene.views[i], scene.views[j], phi});
    }
  }
  return pairs;
}

std::string pair_sample_id(const std::string& scene_id, int source_frame, int target_frame) {
  return scene_id + "_" + std::to_string(source_frame) + "_" + std::to_string(target_frame);
}

PredictRequest make_pair_request(const ViewData& source, const ViewData& target, std::string sample_id,
                                 std::string dataset) {
  const PointCloud pc = lift(source.image, source.depth, source.camera, mask_of(source.depth));
  RenderedDepth rendered = render_depth(pc, target.camera);
  PredictRequest req;
  req.image = target.image;
  req.sparse = std::move(rendered.depth);
  req.known = std::move(rendered.mask);
  req.intrinsics = target.camera.intrinsics;
  req.sample_id = std::move(sample_id);
  req.dataset = std::move(dataset);
  req.pose = target.camera.pose;
  return req;
}

ExtrapolationError score_pair(const PredictRequest& req, const PredictResponse& resp, const DepthMap& target_gt) {
  return mae_extrapolated(resp.depth, target_gt, req.known);
}

namespace {

std::string pair_label(const PairSpec& pair) {
  return pair.scene_id + " " + std::to_string(pair.source.frame) + "->" + std::to_string(pair.target.frame);
}

PairRecord blank_record(const PairSpec& pair) {
  PairRecord rec;
  rec.scene_id = pair.scene_id;
  rec.source_frame = pair.source.frame;
  rec.target_frame = pair.target.frame;
  rec.overlap = pair.overlap;
  return rec;
}

void fill_score(PairRecord& rec, const ExtrapolationError& err) {
  rec.pixel_count = err.pixel_count;
  rec.mae = err.mae;
}

// Evaluates `pairs` in chunks, writing one record per pair in input order.
void evaluate_pairs(const std::vector<PairSpec>& pairs, Predictor& predictor, const std::string& dataset, int jobs,
                    std::size_t batch_size, std::vector<PairRecord>& records) {
  records.resize(pairs.size());
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
    const std::size_t end = std::min(pairs.size(), begin + batch_size);
    const std::size_t n = end - begin;
    std::vector<std::optional<PredictRequest>> requests(n);
    std::vector<DepthMap> truths(n);

    parallel_for(n, jobs, [&](std::size_t k) {
      const PairSpec& pair = pairs[begin + k];
      PairRecord& rec = records[begin + k];
      rec = blank_record(pair);
      try {
        const ViewData source = load_view(pair.source);
        ViewData target = load_view(pair.target);
        requests[k] = make_pair_request(source, target,
                                        pair_sample_id(pair.scene_id, pair.source.frame, pair.target.frame), dataset);
        truths[k] = std::move(target.depth);
      } catch (const std::exception& e) {
        rec.error = pair_label(pair) + ": " + e.what();
      }
    });

    std::vector<std::size_t> slots;
    for (std::size_t k = 0; k < n; ++k)
      if (requests[k]) slots.push_back(k);

    std::vector<PredictOutcome> outcomes(slots.size());
    if (predictor.concurrent() && jobs > 1) {
      parallel_for(slots.size(), jobs, [&](std::size_t s) {
        const std::size_t k = slots[s];
        try {
          outcomes[s].response = predictor.predict(*requests[k], &truths[k]);
        } catch (const std::exception& e) {
          outcomes[s].error = e.what();
        }
      });
    } else {
      std::vector<PredictRequest> batch;
      std::vector<const DepthMap*> gts;
      batch.reserve(slots.size());
      for (std::size_t k : slots) {
        batch.push_back(std::move(*requests[k]));
        requests[k] = std::nullopt;
        gts.push_back(&truths[k]);
      }
      outcomes = predictor.predict_batch(batch, gts);
      for (std::size_t s = 0; s < slots.size(); ++s) requests[slots[s]] = std::move(batch[s]);
    }

    for (std::size_t s = 0; s < slots.size(); ++s) {
      const std::size_t k = slots[s];
      PairRecord& rec = records[begin + k];
      if (!outcomes[s].ok()) {
        rec.error = pair_label(pairs[begin + k]) + ": " + outcomes[s].error;
        continue;
      }
      try {
        fill_score(rec, score_pair(*requests[k], *outcomes[s].response, truths[k]));
      } catch (const std::exception& e) {
        rec.error = pair_label(pairs[begin + k]) + ": " + e.what();
      }
    }
  }
}

}  // namespace

PairRecord evaluate_pair(const PairSpec& pair, Predictor& predictor, const std::string& dataset) {
  std::vector<PairRecord> records;
  evaluate_pairs({pair}, predictor, dataset, 1, 1, records);
  return records.front();
}

int BenchmarkConfig::effective_max_scenes() const {
  if (max_scenes) return *max_scenes;
  return std::holds_alternative<SequentialRule>(rule) ? 50 : std::numeric_limits<int>::max();
}

nlohmann::json BenchmarkConfig::to_json() const {
  nlohmann::json j;
  if (const auto* seq = std::get_if<SequentialRule>(&rule)) {
    j["rule"] = "sequential";
    j["block"] = seq->block;
    j["source_offset"] = seq->source_offset;
    j["target_offset"] = seq->target_offset;
  } else {
    j["rule"] = "overlap";
    j["tau"] = std::get<OverlapRule>(rule).tau;
  }
  const int cap = effective_max_scenes();
  j["max_scenes"] = cap == std::numeric_limits<int>::max() ? nlohmann::json(nullptr) : nlohmann::json(cap);
  return j;
}

std::optional<double> aggregate_mae(const std::vector<PairRecord>& pairs, std::size_t* included) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& rec : pairs) {
    if (rec.failed() || rec.pixel_count == 0 || !rec.mae) continue;
    sum += *rec.mae;
    ++count;
  }
  if (included) *included = count;
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

BenchmarkReport run_benchmark(const DatasetManifest& manifest, Predictor& predictor, const BenchmarkConfig& cfg) {
  if (cfg.jobs < 1) throw InvalidInput("jobs must be at least 1");
  std::visit([](const auto& rule) { rule.validate(); }, cfg.rule);

  BenchmarkReport report;
  report.dataset = manifest.dataset;
  report.predictor = predictor.name();
  report.config = cfg.to_json();
  report.config["dataset"] = manifest.dataset;
  report.config["predictor"] = report.predictor;
  report.config_hash = sha256_hex(report.config.dump());

  const auto cap = static_cast<std::size_t>(std::max(0, cfg.effective_max_scenes()));
  std::vector<PairSpec> pairs;
  for (std::size_t s = 0; s < manifest.scenes.size() && s < cap; ++s) {
    const SceneRecord& scene = manifest.scenes[s];
    std::vector<std::string> missing;
    for (const auto& view : scene.views) {
      if (!fs::exists(view.image)) missing.push_back(view.image.string());
      if (!fs::exists(view.depth)) missing.push_back(view.depth.string());
    }
    if (!missing.empty()) {
      std::string msg = scene.id + ": missing " + std::to_string(missing.size()) + " file(s):";
      for (const auto& m : missing) msg += " " + m;
      report.scene_errors.push_back(msg);
    }
    try {
      std::vector<PairSpec> scene_pairs;
      if (const auto* seq = std::get_if<SequentialRule>(&cfg.rule)) {
        scene_pairs = select_pairs_sequential(scene, *seq);
      } else {
        scene_pairs = select_pairs_overlap(scene, std::get<OverlapRule>(cfg.rule));
      }
      pairs.insert(pairs.end(), scene_pairs.begin(), scene_pairs.end());
    } catch (const std::exception& e) {
      report.scene_errors.push_back(scene.id + ": pair selection failed: " + e.what());
    }
  }

  evaluate_pairs(pairs, predictor, manifest.dataset, cfg.jobs, cfg.batch_size, report.pairs);
  for (const auto& rec : report.pairs)
    if (rec.failed()) ++report.failed_pairs;
  report.aggregate_mae = aggregate_mae(report.pairs, &report.included_pairs);
  return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  j["predictor"] = report.predictor;
  j["units"] = "meters";
  j["config"] = report.config;
  j["config_hash"] = report.config_hash;
  j["aggregate_mae"] = report.aggregate_mae ? nlohmann::json(*report.aggregate_mae) : nlohmann::json(nullptr);
  j["pair_count"] = report.pairs.size();
  j["included_pairs"] = report.included_pairs;
  j["failed_pairs"] = report.failed_pairs;
  j["scene_errors"] = report.scene_errors;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& rec : report.pairs) {
    nlohmann::json p;
    p["scene"] = rec.scene_id;
    p["source_frame"] = rec.source_frame;
    p["target_frame"] = rec.target_frame;
    if (rec.overlap) p["overlap"] = *rec.overlap;
    p["pixel_count"] = rec.pixel_count;
    p["mae"] = rec.mae ? nlohmann::json(*rec.mae) : nlohmann::json(nullptr);
    if (rec.failed()) p["error"] = rec.error;
    pairs.push_back(std::move(p));
  }
  j["pairs"] = std::move(pairs);
  return j;
}

std::string report_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "scene,src,tgt,count,mae_m\n";
  char buf[64];
  for (const auto& rec : report.pairs) {
    if (rec.failed()) continue;
    out << rec.scene_id << ',' << rec.source_frame << ',' << rec.target_frame << ',' << rec.pixel_count << ',';
    if (rec.mae) {
      std::snprintf(buf, sizeof(buf), "%.17g", *rec.mae);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

void save_report(const BenchmarkReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_json(report_to_json(report), dir / "report.json");
  write_text(report_to_csv(report), dir / "report.csv");
}

}  // namespace scenegeo
