#pragma once

// Depth-completion boundary. Every model, built-in or external, is a Predictor;
// responses are validated here so callers only ever see dense, positive,
// correctly sized depth.
//
// External directory protocol (one sample):
//   <sample>/image.png        8-bit RGB
//   <sample>/sparse.dpt       DPT1 raw float depth, 0 = unknown
//   <sample>/mask.png         255 = sparse depth present, 0 = hole
//   <sample>/intrinsics.json  {"fx","fy","cx","cy","width","height"}
//   <sample>/request.json     {"mode": "completion"|"monocular", "sample_id", "dataset"}
// The adapter is run with the sample directory as its only argument and must
// write <sample>/pred.dpt. Adapters that declare {"manifest_mode": true} in an
// adapter.json next to their executable/script are instead run once per batch
// with the path of a manifest.json {"samples": [<sample dir>, ...]}.

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scenegeo/align_snap.hpp"
#include "scenegeo/geometry.hpp"
#include "scenegeo/raster.hpp"

namespace scenegeo {

struct PredictRequest {
  ColorImage image;
  DepthMap sparse;
  Mask known;
  Intrinsics intrinsics;
  std::string sample_id = "sample";
  std::string dataset;
  /// Camera pose when the caller knows it. In-process predictors may use it; it
  /// is not part of the directory protocol.
  std::optional<Pose> pose;

  /// Builds a request with known = mask_of(sparse).
  static PredictRequest from_sparse(ColorImage image, DepthMap sparse, const Intrinsics& intrinsics,
                                    std::string sample_id = "sample", std::string dataset = {});

  bool monocular() const;
  void validate() const;
};

/// Same image and intrinsics with all sparse depth removed.
PredictRequest monocular_request(const PredictRequest& req);

struct PredictResponse {
  DepthMap depth;
};

/// Throws ProtocolError(ShapeMismatch / NotDense) if the response breaks the contract.
void validate_response(const PredictRequest& req, const PredictResponse& resp);

struct PredictOutcome {
  std::optional<PredictResponse> response;
  std::string error;
  bool ok() const { return response.has_value(); }
};

class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string name() const = 0;

  /// Whether predict() may be called from several threads at once.
  virtual bool concurrent() const { return true; }

  /// `ground_truth` is passed by the evaluation harness only; ordinary predictors ignore it.
  PredictResponse predict(const PredictRequest& req, const DepthMap* ground_truth = nullptr);

  /// Per-request outcomes in input order; failures are reported, not thrown.
  std::vector<PredictOutcome> predict_batch(std::span<const PredictRequest> reqs,
                                            std::span<const DepthMap* const> ground_truths);

 protected:
  virtual PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) = 0;
  virtual std::vector<PredictOutcome> do_predict_batch(std::span<const PredictRequest> reqs,
                                                       std::span<const DepthMap* const> ground_truths);
};

/// Harness oracle: returns the ground truth it is handed.
class GtPassthroughPredictor final : public Predictor {
 public:
  std::string name() const override { return "gt-passthrough"; }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) override;
};

/// Known pixels keep their sparse value; holes copy the nearest known pixel.
class NnFillPredictor final : public Predictor {
 public:
  std::string name() const override { return "nn-fill"; }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) override;
};

PredictResponse predict_nn_fill(const PredictRequest& req);

struct AdapterCapabilities {
  bool manifest_mode = false;
  bool stateless = false;
};

AdapterCapabilities load_capabilities(const std::filesystem::path& path);

/// adapter.json beside the first argument that names an existing file, if any.
std::optional<std::filesystem::path> find_capability_file(const std::vector<std::string>& argv);

struct ExternalCommand {
  std::vector<std::string> argv;
  std::filesystem::path workdir;
  std::chrono::duration<double> timeout = std::chrono::seconds(300);
  bool keep_samples = false;
  /// Overrides auto-detection of adapter.json.
  std::optional<std::filesystem::path> capability_file;
};

/// Writes the five request files into `dir` (created if needed).
void write_request_dir(const PredictRequest& req, const std::filesystem::path& dir);

/// Directory name for a sample id: characters outside [A-Za-z0-9._-] become '_'.
std::string sanitize_sample_id(const std::string& id);

class ExternalPredictor final : public Predictor {
 public:
  explicit ExternalPredictor(ExternalCommand cmd);

  std::string name() const override;
  bool concurrent() const override { return caps_.stateless; }
  const AdapterCapabilities& capabilities() const { return caps_; }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) override;
  std::vector<PredictOutcome> do_predict_batch(std::span<const PredictRequest> reqs,
                                               std::span<const DepthMap* const> ground_truths) override;

 private:
  PredictResponse read_prediction(const PredictRequest& req, const std::filesystem::path& dir) const;
  void cleanup(const std::filesystem::path& dir) const;

  ExternalCommand cmd_;
  AdapterCapabilities caps_;
  std::mutex serial_;
};

/// Monocular external prediction followed by a global scale-and-shift fit to the
/// request's sparse depth.
class AlignedExternalPredictor final : public Predictor {
 public:
  AlignedExternalPredictor(std::unique_ptr<Predictor> inner, AlignConfig cfg = {});

  std::string name() const override;
  bool concurrent() const override { return inner_->concurrent(); }

 protected:
  PredictResponse do_predict(const PredictRequest& req, const DepthMap* ground_truth) override;

 private:
  std::unique_ptr<Predictor> inner_;
  AlignConfig cfg_;
};

/// Aligns a monocular prediction to `sparse` and returns s * pred + t, clamped positive.
/// The descent is warm-started from the least-squares fit when that exists.
DepthMap align_prediction(const DepthMap& monocular_pred, const DepthMap& sparse, const AlignConfig& cfg);

}  // namespace scenegeo
