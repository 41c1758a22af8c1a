// Reference completion adapter for the external predictor protocol: fills every
// hole with the nearest known sparse depth.
//
//   scenegeo-nnfill-adapter <sample dir>
//   scenegeo-nnfill-adapter <manifest.json>     {"samples": [<sample dir>, ...]}

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "scenegeo/align_snap.hpp"
#include "scenegeo/io_util.hpp"
#include "scenegeo/raster.hpp"

namespace fs = std::filesystem;
using namespace scenegeo;

namespace {

void complete_sample(const fs::path& dir) {
  const nlohmann::json request = read_json(dir / "request.json");
  const DepthMap sparse = load_depth(dir / "sparse.dpt", DepthFormat::RawFloat);
  const Mask known = load_mask(dir / "mask.png");
  require_same_shape(sparse, known, "sparse vs mask");
  if (request.value("mode", std::string("completion")) == "monocular" || count_true(known) == 0) {
    throw InvalidInput("no sparse input");
  }
  if (known != mask_of(sparse)) throw InvalidInput("mask.png disagrees with sparse.dpt");
  save_depth(fill_from_nearest(sparse, known), dir / "pred.dpt", DepthFormat::RawFloat);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <sample dir | manifest.json>\n";
    return 2;
  }
  const fs::path arg = argv[1];
  std::vector<fs::path> samples;
  try {
    if (fs::is_directory(arg)) {
      samples.push_back(arg);
    } else {
      const nlohmann::json manifest = read_json(arg);
      for (const auto& s : manifest.at("samples")) samples.emplace_back(s.get<std::string>());
    }
  } catch (const std::exception& e) {
    std::cerr << arg.string() << ": " << e.what() << "\n";
    return 1;
  }
  int status = 0;
  for (const auto& dir : samples) {
    try {
      complete_sample(dir);
    } catch (const std::exception& e) {
      std::cerr << dir.string() << ": " << e.what() << "\n";
      status = 1;
    }
  }
  return status;
}
