#include "scenegeo/warp.hpp"

#include "scenegeo/io_util.hpp"
#include "scenegeo/parallel.hpp"

namespace scenegeo {

namespace fs = std::filesystem;

RenderedDepth warp_depth(const DepthMap& depth, const Camera& src, const Camera& dst) {
  if (depth.width() != src.width() || depth.height() != src.height()) {
    throw InvalidInput("warp_depth: depth resolution differs from the source camera");
  }
  // Colour is irrelevant for the warp; a blank image keeps lift's signature.
  const ColorImage blank(depth.width(), depth.height());
  return render_depth(lift(blank, depth, src, mask_of(depth)), dst);
}

void ViewpointSamplerConfig::validate() const {
  if (!(azimuth_range_deg >= 0.0) || !(elevation_range_deg >= 0.0) || !(translation_range_m >= 0.0)) {
    throw InvalidInput("viewpoint sampler ranges must be non-negative");
  }
}

ViewpointSampler::ViewpointSampler(const ViewpointSamplerConfig& cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

Camera ViewpointSampler::sample(const Camera& base) {
  const double az = rng_.uniform(-cfg_.azimuth_range_deg, cfg_.azimuth_range_deg);
  const double el = rng_.uniform(-cfg_.elevation_range_deg, cfg_.elevation_range_deg);
  Vec3 offset;
  for (int k = 0; k < 3; ++k) offset[k] = rng_.uniform(-cfg_.translation_range_m, cfg_.translation_range_m);

  Camera out = base;
  out.pose.rotation = base.pose.rotation * azimuth_elevation(deg_to_rad(az), deg_to_rad(el));
  out.pose.translation = base.pose.translation + base.pose.rotation * offset;
  return out;
}

MaskSet generate_mask_set(const std::vector<MaskSource>& sources, int views_per_image,
                          const ViewpointSamplerConfig& cfg, int jobs) {
  if (views_per_image < 1) throw InvalidInput("views_per_image must be at least 1");
  cfg.validate();
  const std::size_t n = sources.size();
  const auto per_image = static_cast<std::size_t>(views_per_image);
  std::vector<MaskSetEntry> entries(n * per_image);

  auto work = [&](std::size_t i) {
    const MaskSource& src = sources[i];
    ViewpointSamplerConfig local = cfg;
    local.seed = derive_seed(cfg.seed, i);
    ViewpointSampler sampler(local);
    for (std::size_t v = 0; v < per_image; ++v) {
      const Camera dst = sampler.sample(src.camera);
      MaskSetEntry& e = entries[i * per_image + v];
      e.mask = warp_depth(src.depth, src.camera, dst).mask;
      e.source_id = src.id;
      e.view_index = static_cast<int>(v);
      e.sampled_pose = dst.pose;
    }
  };

  parallel_for(n, jobs, work);
  return MaskSet{std::move(entries)};
}

void save_mask_set(const MaskSet& set, const fs::path& dir) {
  fs::create_directories(dir / "masks");
  nlohmann::json manifest;
  manifest["masks"] = nlohmann::json::array();
  for (const auto& e : set.entries) {
    const std::string rel = "masks/" + e.source_id + "_" + std::to_string(e.view_index) + ".png";
    save_mask(e.mask, dir / rel);
    nlohmann::json pose = nlohmann::json::array();
    const Mat4 m = e.sampled_pose.matrix();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
    manifest["masks"].push_back({{"file", rel},
                                 {"source_id", e.source_id},
                                 {"view_index", e.view_index},
                                 {"width", e.mask.width()},
                                 {"height", e.mask.height()},
                                 {"sampled_pose", std::move(pose)}});
  }
  write_json(manifest, dir / "manifest.json");
}

MaskSet load_mask_set(const fs::path& dir) {
  const nlohmann::json manifest = read_json(dir / "manifest.json");
  MaskSet set;
  try {
    for (const auto& item : manifest.at("masks")) {
      MaskSetEntry e;
      e.mask = load_mask(dir / item.at("file").get<std::string>());
      e.source_id = item.at("source_id").get<std::string>();
      e.view_index = item.at("view_index").get<int>();
      const auto& pose = item.at("sampled_pose");
      Mat4 m;
      for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = pose.at(i).get<double>();
      e.sampled_pose = Pose::from_matrix(m);
      set.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError((dir / "manifest.json").string() + ": " + ex.what());
  }
  return set;
}

TrainingSample export_training_sample(const ColorImage& image, const DepthMap& teacher_depth, const MaskSet& masks,
                                      double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("task probability p must lie in [0, 1]");
  require_same_shape(image, teacher_depth, "training image vs teacher depth");
  if (!is_dense(teacher_depth)) throw InvalidInput("teacher depth must be dense");
  if (masks.empty() && p < 1.0) throw InvalidInput("empty mask set with p < 1");

  TrainingSample sample;
  sample.image = image;
  sample.target = teacher_depth;
  sample.monocular = rng.bernoulli(p);
  if (sample.monocular) {
    sample.mask = Mask(image.width(), image.height(), 0);
    sample.sparse = DepthMap(image.width(), image.height(), kInvalidDepth);
  } else {
    sample.mask_index = static_cast<std::size_t>(rng.index(masks.size()));
    sample.mask = resize_nearest(masks.entries[sample.mask_index].mask, image.width(), image.height());
    sample.sparse = apply_mask(teacher_depth, sample.mask);
  }
  return sample;
}

void save_training_sample(const TrainingSample& sample, const fs::path& dir) {
  fs::create_directories(dir);
  save_color(sample.image, dir / "image.png");
  save_mask(sample.mask, dir / "mask.png");
  save_depth(sample.sparse, dir / "sparse.dpt", DepthFormat::RawFloat);
  save_depth(sample.target, dir / "target.dpt", DepthFormat::RawFloat);
}

}  // namespace scenegeo
