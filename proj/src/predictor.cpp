#include "scenegeo/predictor.hpp"

#include <cctype>
#include <cmath>
#include <exception>

#include "scenegeo/io_util.hpp"
#include "scenegeo/subprocess.hpp"

namespace scenegeo {

namespace fs = std::filesystem;

PredictRequest PredictRequest::from_sparse(ColorImage image, DepthMap sparse, const Intrinsics& intrinsics,
                                           std::string sample_id, std::string dataset) {
  PredictRequest req;
  req.known = mask_of(sparse);
  req.image = std::move(image);
  req.sparse = std::move(sparse);
  req.intrinsics = intrinsics;
  req.sample_id = std::move(sample_id);
  req.dataset = std::move(dataset);
  return req;
}

bool PredictRequest::monocular() const { return count_true(known) == 0; }

void PredictRequest::validate() const {
  intrinsics.validate();
  if (image.width() != intrinsics.width || image.height() != intrinsics.height) {
    throw InvalidInput("predict request: image resolution differs from intrinsics");
  }
  require_same_shape(sparse, image, "predict request sparse vs image");
  require_same_shape(known, image, "predict request mask vs image");
  validate_depth(sparse);
  if (known != mask_of(sparse)) throw InvalidInput("predict request: known mask must equal sparse > 0");
}

PredictRequest monocular_request(const PredictRequest& req) {
  PredictRequest out = req;
  out.sparse = DepthMap(req.sparse.width(), req.sparse.height(), kInvalidDepth);
  out.known = Mask(req.known.width(), req.known.height(), 0);
  return out;
}

void validate_response(const PredictRequest& req, const PredictResponse& resp) {
  if (!resp.depth.same_shape(req.image)) {
    throw ProtocolError(ProtocolFailure::ShapeMismatch,
                        "prediction is " + std::to_string(resp.depth.width()) + "x" +
                            std::to_string(resp.depth.height()) + ", request is " +
                            std::to_string(req.image.width()) + "x" + std::to_string(req.image.height()));
  }
  if (!is_dense(resp.depth)) {
    throw ProtocolError(ProtocolFailure::NotDense, "prediction contains non-positive or non-finite depth");
  }
}

PredictResponse Predictor::predict(const PredictRequest& req, const DepthMap* ground_truth) {
  req.validate();
  PredictResponse resp = do_predict(req, ground_truth);
  validate_response(req, resp);
  return resp;
}

std::vector<PredictOutcome> Predictor::predict_batch(std::span<const PredictRequest> reqs,
                                                     std::span<const DepthMap* const> ground_truths) {
  if (!ground_truths.empty() && ground_truths.size() != reqs.size()) {
    throw InvalidInput("predict_batch: ground truth count differs from request count");
  }
  std::vector<PredictOutcome> outcomes(reqs.size());
  std::vector<PredictRequest> valid_reqs;
  std::vector<const DepthMap*> valid_gts;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    try {
      reqs[i].validate();
      valid_reqs.push_back(reqs[i]);
      valid_gts.push_back(ground_truths.empty() ? nullptr : ground_truths[i]);
      slots.push_back(i);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  }
  auto produced = do_predict_batch(valid_reqs, valid_gts);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    PredictOutcome& out = outcomes[slots[k]];
    out = std::move(produced[k]);
    if (!out.response) continue;
    try {
      validate_response(valid_reqs[k], *out.response);
    } catch (const std::exception& e) {
      out.response.reset();
      out.error = e.what();
    }
  }
  return outcomes;
}

std::vector<PredictOutcome> Predictor::do_predict_batch(std::span<const PredictRequest> reqs,
                                                        std::span<const DepthMap* const> ground_truths) {
  std::vector<PredictOutcome> outcomes(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    try {
      outcomes[i].response = do_predict(reqs[i], ground_truths.empty() ? nullptr : ground_truths[i]);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  }
  return outcomes;
}

PredictResponse GtPassthroughPredictor::do_predict(const PredictRequest&, const DepthMap* ground_truth) {
  if (ground_truth == nullptr) throw InvalidInput("gt-passthrough needs ground truth from the harness");
  return {*ground_truth};
}

PredictResponse predict_nn_fill(const PredictRequest& req) {
  if (req.monocular()) throw InvalidInput("nn-fill needs at least one known pixel");
  return {fill_from_nearest(req.sparse, req.known)};
}

PredictResponse NnFillPredictor::do_predict(const PredictRequest& req, const DepthMap*) { return predict_nn_fill(req); }

// ---- external adapters -------------------------------------------------------

AdapterCapabilities load_capabilities(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  AdapterCapabilities caps;
  try {
    caps.manifest_mode = j.value("manifest_mode", false);
    caps.stateless = j.value("stateless", false);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return caps;
}

std::optional<fs::path> find_capability_file(const std::vector<std::string>& argv) {
  for (const auto& arg : argv) {
    std::error_code ec;
    const fs::path p(arg);
    if (!fs::is_regular_file(p, ec)) continue;
    const fs::path caps = p.parent_path() / "adapter.json";
    if (fs::is_regular_file(caps, ec)) return caps;
    return std::nullopt;
  }
  return std::nullopt;
}

std::string sanitize_sample_id(const std::string& id) {
  std::string out = id.empty() ? std::string("sample") : id;
  for (char& ch : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' || ch == '-';
    if (!ok) ch = '_';
  }
  if (out == "." || out == "..") out = "sample";
  return out;
}

void write_request_dir(const PredictRequest& req, const fs::path& dir) {
  fs::create_directories(dir);
  save_color(req.image, dir / "image.png");
  save_depth(req.sparse, dir / "sparse.dpt", DepthFormat::RawFloat);
  save_mask(req.known, dir / "mask.png");
  write_json(to_json(req.intrinsics), dir / "intrinsics.json");
  write_json({{"mode", req.monocular() ? "monocular" : "completion"},
              {"sample_id", req.sample_id},
              {"dataset", req.dataset}},
             dir / "request.json");
}

ExternalPredictor::ExternalPredictor(ExternalCommand cmd) : cmd_(std::move(cmd)) {
  if (cmd_.argv.empty()) throw InvalidInput("external predictor command is empty");
  if (cmd_.workdir.empty()) throw InvalidInput("external predictor needs a work directory");
  if (!(cmd_.timeout.count() > 0.0)) throw InvalidInput("external predictor timeout must be positive");
  const auto caps_file = cmd_.capability_file ? cmd_.capability_file : find_capability_file(cmd_.argv);
  if (caps_file) caps_ = load_capabilities(*caps_file);
  fs::create_directories(cmd_.workdir);
}

std::string ExternalPredictor::name() const {
  std::string joined = "external:";
  for (std::size_t i = 0; i < cmd_.argv.size(); ++i) {
    if (i) joined += ' ';
    joined += cmd_.argv[i];
  }
  return joined;
}

PredictResponse ExternalPredictor::read_prediction(const PredictRequest& req, const fs::path& dir) const {
  const fs::path pred = dir / "pred.dpt";
  if (!fs::exists(pred)) throw ProtocolError(ProtocolFailure::MissingOutput, "adapter did not write " + pred.string());
  PredictResponse resp;
  try {
    resp.depth = load_depth(pred, DepthFormat::RawFloat);
  } catch (const FormatError& e) {
    throw ProtocolError(ProtocolFailure::MalformedOutput, e.what());
  }
  validate_response(req, resp);
  return resp;
}

void ExternalPredictor::cleanup(const fs::path& dir) const {
  if (cmd_.keep_samples) return;
  std::error_code ec;
  fs::remove_all(dir, ec);
}

namespace {

void check_exit(const ProcessResult& result, const std::string& what) {
  if (result.timed_out) throw ProtocolError(ProtocolFailure::Timeout, what + " timed out", result.stderr_text);
  if (result.exit_code != 0) {
    std::string msg = what + " exited with status " + std::to_string(result.exit_code);
    if (!result.stderr_text.empty()) msg += ": " + result.stderr_text;
    while (!msg.empty() && (msg.back() == '\n' || msg.back() == '\r')) msg.pop_back();
    throw ProtocolError(ProtocolFailure::NonzeroExit, msg, result.stderr_text);
  }
}

}  // namespace

PredictResponse ExternalPredictor::do_predict(const PredictRequest& req, const DepthMap*) {
  std::unique_lock<std::mutex> lock(serial_, std::defer_lock);
  if (!caps_.stateless) lock.lock();
  const std::string id = sanitize_sample_id(req.sample_id);
  const fs::path dir = cmd_.workdir / id;
  const fs::path logs = cmd_.workdir / "logs" / id;
  fs::remove_all(dir);
  write_request_dir(req, dir);

  if (caps_.manifest_mode) {
    write_json({{"samples", {fs::absolute(dir).string()}}}, cmd_.workdir / (id + ".manifest.json"));
  }
  std::vector<std::string> argv = cmd_.argv;
  argv.push_back(caps_.manifest_mode ? fs::absolute(cmd_.workdir / (id + ".manifest.json")).string()
                                     : fs::absolute(dir).string());
  const ProcessResult result = run_process(argv, cmd_.timeout, logs);
  // On failure the sample directory stays on disk for inspection.
  check_exit(result, "adapter");
  PredictResponse resp = read_prediction(req, dir);
  cleanup(dir);
  if (caps_.manifest_mode) cleanup(cmd_.workdir / (id + ".manifest.json"));
  return resp;
}

std::vector<PredictOutcome> ExternalPredictor::do_predict_batch(std::span<const PredictRequest> reqs,
                                                                std::span<const DepthMap* const> ground_truths) {
  if (!caps_.manifest_mode) return Predictor::do_predict_batch(reqs, ground_truths);
  std::lock_guard lock(serial_);
  std::vector<PredictOutcome> outcomes(reqs.size());
  if (reqs.empty()) return outcomes;

  std::vector<fs::path> dirs;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& req : reqs) {
    const fs::path dir = cmd_.workdir / sanitize_sample_id(req.sample_id);
    fs::remove_all(dir);
    write_request_dir(req, dir);
    samples.push_back(fs::absolute(dir).string());
    dirs.push_back(dir);
  }
  const fs::path manifest = cmd_.workdir / "batch.manifest.json";
  write_json({{"samples", samples}}, manifest);
  std::vector<std::string> argv = cmd_.argv;
  argv.push_back(fs::absolute(manifest).string());
  ProcessResult result;
  try {
    result = run_process(argv, cmd_.timeout, cmd_.workdir / "logs" / "batch");
    check_exit(result, "adapter (manifest mode)");
  } catch (const std::exception& e) {
    for (auto& out : outcomes) out.error = e.what();
    return outcomes;
  }
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    try {
      outcomes[i].response = read_prediction(reqs[i], dirs[i]);
      cleanup(dirs[i]);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  }
  return outcomes;
}

// ---- aligned monocular baseline ----------------------------------------------

DepthMap align_prediction(const DepthMap& monocular_pred, const DepthMap& sparse, const AlignConfig& cfg) {
  AlignConfig warm = cfg;
  try {
    warm.initial = align_closed_form(monocular_pred, sparse);
  } catch (const DegenerateProblem&) {
    // Keep the configured start.
  }
  const AlignResult fit = align_iterative(monocular_pred, sparse, warm);
  return apply_affine(monocular_pred, fit.params);
}

AlignedExternalPredictor::AlignedExternalPredictor(std::unique_ptr<Predictor> inner, AlignConfig cfg)
    : inner_(std::move(inner)), cfg_(cfg) {
  if (!inner_) throw InvalidInput("aligned predictor needs an inner predictor");
  cfg_.validate();
}

std::string AlignedExternalPredictor::name() const { return "aligned:" + inner_->name(); }

PredictResponse AlignedExternalPredictor::do_predict(const PredictRequest& req, const DepthMap* ground_truth) {
  if (req.monocular()) throw InvalidInput("aligned prediction needs known sparse depth to align to");
  const PredictResponse mono = inner_->predict(monocular_request(req), ground_truth);
  return {align_prediction(mono.depth, req.sparse, cfg_)};
}

}  // namespace scenegeo
