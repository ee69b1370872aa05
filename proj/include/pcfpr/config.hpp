#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pcfpr/augment.hpp"
#include "pcfpr/model.hpp"
#include "pcfpr/phantom.hpp"
#include "pcfpr/sampling.hpp"
#include "pcfpr/train.hpp"

// INI-style config: [section] headers, key = value lines, # or ; comments.

namespace pcfpr {

class ConfigFile {
 public:
  ConfigFile() = default;

  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>") {
    ConfigFile cf;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto cut = line.find_first_of("#;");
      if (cut != std::string::npos) line.erase(cut);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        require(line.back() == ']', Errc::bad_config,
                origin + ":" + std::to_string(lineno) + ": unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      require(eq != std::string::npos, Errc::bad_config,
              origin + ":" + std::to_string(lineno) + ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      require(!key.empty(), Errc::bad_config,
              origin + ":" + std::to_string(lineno) + ": empty key");
      cf.values_[section + "." + key] = val;
    }
    return cf;
  }

  static ConfigFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io_error, "cannot open config: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  bool has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& def) const {
    auto it = values_.find(section + "." + key);
    return it == values_.end() ? def : it->second;
  }

  double get_double(const std::string& section, const std::string& key, double def) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      require(pos == it->second.size(), Errc::bad_config, "");
      return v;
    } catch (...) {
      raise(Errc::bad_config, "config key " + section + "." + key + ": '" + it->second +
                                  "' is not a number");
    }
  }

  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t def) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(it->second, &pos);
      require(pos == it->second.size(), Errc::bad_config, "");
      return v;
    } catch (...) {
      raise(Errc::bad_config, "config key " + section + "." + key + ": '" + it->second +
                                  "' is not an integer");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool def) const {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return def;
    const std::string& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    raise(Errc::bad_config,
          "config key " + section + "." + key + ": '" + s + "' is not a boolean");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

struct PipelineConfig {
  std::uint64_t seed = 17;
  int jobs = 1;
  int n_scans = 12;
  int folds = 4;
  double test_fraction = 0.25;
  std::string sampler_mode = "rbf";  // or "uniform"
  bool augment_images = false;       // image-level, train split only
  double small_diameter_mm = 3.0;    // truths at or below this count as negatives

  PhantomConfig phantom;
  StubConfig stub;
  SamplerConfig sampler;
  AugmentConfig augment;
  ModelConfig model;
  TrainConfig train;
};

inline void apply_config(PipelineConfig& pc, const ConfigFile& cf) {
  pc.seed = static_cast<std::uint64_t>(cf.get_int("pipeline", "seed",
                                                  static_cast<std::int64_t>(pc.seed)));
  pc.jobs = static_cast<int>(cf.get_int("pipeline", "jobs", pc.jobs));
  pc.n_scans = static_cast<int>(cf.get_int("pipeline", "scans", pc.n_scans));
  pc.folds = static_cast<int>(cf.get_int("pipeline", "folds", pc.folds));
  pc.test_fraction = cf.get_double("pipeline", "test_fraction", pc.test_fraction);
  pc.sampler_mode = cf.get_string("pipeline", "sampler", pc.sampler_mode);
  pc.augment_images = cf.get_bool("pipeline", "augment", pc.augment_images);
  pc.small_diameter_mm = cf.get_double("eval", "small_diameter_mm", pc.small_diameter_mm);

  PhantomConfig& ph = pc.phantom;
  ph.dims.nx = static_cast<int>(cf.get_int("phantom", "nx", ph.dims.nx));
  ph.dims.ny = static_cast<int>(cf.get_int("phantom", "ny", ph.dims.ny));
  ph.dims.nz = static_cast<int>(cf.get_int("phantom", "nz", ph.dims.nz));
  ph.spacing.sx = cf.get_double("phantom", "spacing", ph.spacing.sx);
  ph.spacing.sy = ph.spacing.sx;
  ph.spacing.sz = ph.spacing.sx;
  ph.nodule_count_lo = static_cast<int>(cf.get_int("phantom", "nodules_lo", ph.nodule_count_lo));
  ph.nodule_count_hi = static_cast<int>(cf.get_int("phantom", "nodules_hi", ph.nodule_count_hi));
  ph.nodule_diam_lo = cf.get_double("phantom", "diam_lo", ph.nodule_diam_lo);
  ph.nodule_diam_hi = cf.get_double("phantom", "diam_hi", ph.nodule_diam_hi);
  ph.subpleural_fraction = cf.get_double("phantom", "subpleural_fraction",
                                         ph.subpleural_fraction);
  ph.vessel_count_lo = static_cast<int>(cf.get_int("phantom", "vessels_lo", ph.vessel_count_lo));
  ph.vessel_count_hi = static_cast<int>(cf.get_int("phantom", "vessels_hi", ph.vessel_count_hi));
  ph.vessel_radius_lo = cf.get_double("phantom", "vessel_radius_lo", ph.vessel_radius_lo);
  ph.vessel_radius_hi = cf.get_double("phantom", "vessel_radius_hi", ph.vessel_radius_hi);
  ph.wall_mm = cf.get_double("phantom", "wall_mm", ph.wall_mm);
  ph.wall_hu = cf.get_double("phantom", "wall_hu", ph.wall_hu);

  StubConfig& st = pc.stub;
  st.recall = cf.get_double("stub", "recall", st.recall);
  st.fp_per_scan = cf.get_double("stub", "fp_per_scan", st.fp_per_scan);
  st.margin_lo = cf.get_double("stub", "margin_lo", st.margin_lo);
  st.margin_hi = cf.get_double("stub", "margin_hi", st.margin_hi);
  st.frag_radius_lo = cf.get_double("stub", "frag_radius_lo", st.frag_radius_lo);
  st.frag_radius_hi = cf.get_double("stub", "frag_radius_hi", st.frag_radius_hi);

  SamplerConfig& sa = pc.sampler;
  sa.m = static_cast<int>(cf.get_int("sampler", "m", sa.m));
  sa.mask_quota = static_cast<int>(cf.get_int("sampler", "mask_quota", sa.mask_quota));
  sa.sigma_ratio = cf.get_double("sampler", "sigma_ratio", sa.sigma_ratio);
  sa.max_draws = cf.get_int("sampler", "max_draws", sa.max_draws);

  AugmentConfig& au = pc.augment;
  au.noise_lambda = cf.get_double("augment", "noise_lambda", au.noise_lambda);
  au.noise_sigma = cf.get_double("augment", "noise_sigma", au.noise_sigma);
  au.blur_prob = cf.get_double("augment", "blur_prob", au.blur_prob);
  au.blur_alpha_lo = cf.get_double("augment", "blur_alpha_lo", au.blur_alpha_lo);
  au.blur_alpha_hi = cf.get_double("augment", "blur_alpha_hi", au.blur_alpha_hi);
  au.hu_shift_mag = cf.get_double("augment", "hu_shift_mag", au.hu_shift_mag);
  au.scale_sigma = cf.get_double("augment", "scale_sigma", au.scale_sigma);

  ModelConfig& mo = pc.model;
  if (cf.has("model", "features"))
    mo.feature_set = parse_feature_set(cf.get_string("model", "features", ""));
  mo.use_edgeconv = cf.get_bool("model", "use_edgeconv", mo.use_edgeconv);
  mo.k_neighbors = static_cast<int>(cf.get_int("model", "k_neighbors", mo.k_neighbors));
  mo.coord_scale_mm = cf.get_double("model", "coord_scale_mm", mo.coord_scale_mm);
  if (cf.has("model", "mlp_widths")) {
    mo.mlp_widths.clear();
    std::istringstream ws(cf.get_string("model", "mlp_widths", ""));
    std::string tok;
    while (std::getline(ws, tok, ',')) mo.mlp_widths.push_back(std::stoi(tok));
  }
  mo.head_width = static_cast<int>(cf.get_int("model", "head_width", mo.head_width));
  mo.edge_width = static_cast<int>(cf.get_int("model", "edge_width", mo.edge_width));

  TrainConfig& tr = pc.train;
  tr.lr0 = cf.get_double("train", "lr0", tr.lr0);
  tr.epochs = static_cast<int>(cf.get_int("train", "epochs", tr.epochs));
  tr.lr_halve_every = static_cast<int>(cf.get_int("train", "lr_halve_every", tr.lr_halve_every));
  tr.batch = static_cast<int>(cf.get_int("train", "batch", tr.batch));
  tr.batches_per_epoch =
      static_cast<int>(cf.get_int("train", "batches_per_epoch", tr.batches_per_epoch));
  tr.augment_points = cf.get_bool("train", "augment_points", tr.augment_points);
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  PipelineConfig pc;
  apply_config(pc, ConfigFile::load(path));
  return pc;
}

}  // namespace pcfpr
