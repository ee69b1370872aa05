#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pcfpr/config.hpp"
#include "pcfpr/manifest.hpp"
#include "pcfpr/npcd.hpp"
#include "pcfpr/nvol.hpp"
#include "pcfpr/nwts.hpp"
#include "pcfpr/train.hpp"

// End-to-end drivers behind the CLI subcommands. Every run is a pure function
// of (config, seed): per-item RNG streams are derived from the global seed and
// the item index, work items only write into their own slots, and files are
// written to a temp name and renamed, so results do not depend on --jobs and
// reruns are byte-identical.

namespace pcfpr {

namespace fs = std::filesystem;

namespace salt {
constexpr std::uint64_t gen = 0x67656e;
constexpr std::uint64_t stub = 0x73747562;
constexpr std::uint64_t split = 0x73706c69;
constexpr std::uint64_t sample = 0x73616d70;
constexpr std::uint64_t augment = 0x617567;
constexpr std::uint64_t train = 0x747261696e;
}  // namespace salt

template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  jobs = std::max(1, std::min(jobs, static_cast<int>(n == 0 ? 1 : n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

template <typename Writer>
void atomic_file(const fs::path& path, Writer&& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  writer(tmp);
  fs::rename(tmp, path);
}

inline int scan_index_of(const std::string& scan_id) {
  const auto pos = scan_id.find_last_not_of("0123456789");
  require(pos != std::string::npos && pos + 1 < scan_id.size(), Errc::bad_config,
          "scan id without trailing index: " + scan_id);
  return std::stoi(scan_id.substr(pos + 1));
}

// ---- gen: phantom scenes ----------------------------------------------------

inline void run_gen(const fs::path& dir, const PipelineConfig& pc) {
  validate_phantom(pc.phantom);
  fs::create_directories(dir / "scans");
  std::vector<std::string> names(static_cast<std::size_t>(pc.n_scans));
  parallel_for(static_cast<std::size_t>(pc.n_scans), pc.jobs, [&](std::size_t i) {
    const std::string name = scan_name(static_cast<int>(i));
    const fs::path scan_dir = dir / "scans" / name;
    fs::create_directories(scan_dir);
    auto rng = make_rng(derive_seed(derive_seed(pc.seed, salt::gen), i));
    const PhantomScene scene = gen_phantom(pc.phantom, rng);
    atomic_file(scan_dir / "volume.nvol",
                [&](const fs::path& p) { write_nvol(p, scene.volume); });
    write_truths(scan_dir / "truth.json", scene.truths);
    names[i] = name;
  });

  json j;
  j["seed"] = pc.seed;
  j["n_scans"] = pc.n_scans;
  j["scans"] = names;
  write_text_file(dir / "manifest.json", j.dump(2) + "\n");
}

// ---- dataset: detector stub + split + labels --------------------------------

inline void run_dataset(const fs::path& dir, const PipelineConfig& pc) {
  const json manifest = read_json_file(dir / "manifest.json");
  const int n_scans = manifest.at("n_scans").get<int>();
  const ScanSplit split =
      split_scans(n_scans, pc.folds, pc.test_fraction, derive_seed(pc.seed, salt::split));

  struct ScanOut {
    std::vector<CandidateRow> rows;
  };
  std::vector<ScanOut> per_scan(static_cast<std::size_t>(n_scans));

  parallel_for(static_cast<std::size_t>(n_scans), pc.jobs, [&](std::size_t i) {
    const std::string name = scan_name(static_cast<int>(i));
    const fs::path scan_dir = dir / "scans" / name;
    const Volume vol = read_volume(scan_dir / "volume.nvol");
    const std::vector<TruthNodule> truths = read_truths(scan_dir / "truth.json");

    auto rng = make_rng(derive_seed(derive_seed(pc.seed, salt::stub), i));
    std::vector<Candidate> cands = detector_stub(vol, truths, pc.stub, rng);

    std::vector<ScoredCandidate> scored;
    scored.reserve(cands.size());
    for (const Candidate& c : cands) scored.push_back({name, c.center_mm, c.p});
    std::vector<Truth> geom;
    geom.reserve(truths.size());
    for (const TruthNodule& t : truths) geom.push_back({name, t.center_mm, t.diameter_mm});
    const MatchResult matched = match_candidates(scored, geom, pc.small_diameter_mm);

    const fs::path cand_dir = dir / "candidates" / name;
    fs::create_directories(cand_dir);
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      char leaf[48];
      std::snprintf(leaf, sizeof(leaf), "cand_%03d.mask.nvol", static_cast<int>(ci));
      atomic_file(cand_dir / leaf,
                  [&](const fs::path& p) { write_nvol(p, cands[ci].mask); });
      CandidateRow row;
      row.scan_id = name;
      row.cand_id = static_cast<int>(ci);
      row.mask_path = "candidates/" + name + "/" + leaf;
      row.p = cands[ci].p;
      row.label = matched.labeled[ci].role != MatchRole::fp ? 1 : 0;
      per_scan[i].rows.push_back(std::move(row));
    }
  });

  std::vector<CandidateRow> train_rows, test_rows;
  for (int f = 0; f < pc.folds; ++f)
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      if (split.fold_of_train[i] != f) continue;
      for (CandidateRow row : per_scan[static_cast<std::size_t>(split.train[i])].rows) {
        row.fold = f;
        train_rows.push_back(std::move(row));
      }
    }
  for (int sid : split.test)
    for (const CandidateRow& row : per_scan[static_cast<std::size_t>(sid)].rows)
      test_rows.push_back(row);

  write_candidate_rows(dir / "fpr_train.jsonl", train_rows);
  write_candidate_rows(dir / "fpr_test.jsonl", test_rows);
  write_split(dir / "split.json", split, pc.folds, pc.test_fraction);
}

// ---- sample: candidate ROIs -> fixed-size clouds -----------------------------

struct SampleSummary {
  int n_ok = 0;
  std::vector<std::string> errors;  // "<scan>/cand_<id>: message"
};

inline SampleSummary run_sample(const fs::path& dir, const PipelineConfig& pc,
                                const std::string& split_name) {
  require(split_name == "train" || split_name == "test", Errc::bad_config,
          "run_sample: split must be train or test");
  require(pc.sampler_mode == "rbf" || pc.sampler_mode == "uniform", Errc::bad_config,
          "run_sample: sampler must be rbf or uniform");
  const std::vector<CandidateRow> rows =
      read_candidate_rows(dir / ("fpr_" + split_name + ".jsonl"));

  const fs::path cloud_dir = dir / "clouds" / split_name;
  fs::create_directories(cloud_dir);

  // Group rows by scan so each volume is loaded (and augmented) once.
  std::map<std::string, std::vector<std::size_t>> by_scan;
  for (std::size_t r = 0; r < rows.size(); ++r) by_scan[rows[r].scan_id].push_back(r);
  std::vector<const std::string*> scan_keys;
  for (const auto& [k, v] : by_scan) scan_keys.push_back(&k);

  const bool augment_here = pc.augment_images && split_name == "train";
  std::vector<std::optional<CloudRow>> out_rows(rows.size());
  std::vector<std::string> errors_by_row(rows.size());

  parallel_for(scan_keys.size(), pc.jobs, [&](std::size_t si) {
    const std::string& scan_id = *scan_keys[si];
    const int scan_idx = scan_index_of(scan_id);
    Volume vol = read_volume(dir / "scans" / scan_id / "volume.nvol");
    if (augment_here) {
      auto arng = make_rng(derive_seed(derive_seed(pc.seed, salt::augment),
                                       static_cast<std::uint64_t>(scan_idx)));
      vol = masked_gaussian_noise(vol, pc.augment, arng);
      vol = gaussian_blur(vol, pc.augment, arng);
      vol = hu_shift(vol, pc.augment, arng);
    }

    for (std::size_t r : by_scan.at(scan_id)) {
      const CandidateRow& row = rows[r];
      try {
        MaskVolume mask = read_mask(dir / row.mask_path);
        Candidate cand = make_candidate(std::move(mask), row.p);
        const RoiBox box = roi_bbox(cand, 16.0);
        PointCloud full = extract_points(vol, cand, box);
        char ref[64];
        std::snprintf(ref, sizeof(ref), "%s/cand_%03d", row.scan_id.c_str(), row.cand_id);
        full.candidate_ref = ref;

        auto srng = make_rng(derive_seed(derive_seed(pc.seed, salt::sample), r));
        PointCloud sampled;
        SampleStats stats;
        if (pc.sampler_mode == "rbf") {
          sampled = sample_candidate(full, pc.sampler, srng, &stats);
        } else {
          sampled = uniform_sample(full, pc.sampler.m, srng);
        }
        int mask_pts = 0;
        for (const CloudPoint& pt : sampled.points) mask_pts += pt.is_mask ? 1 : 0;

        char leaf[64];
        std::snprintf(leaf, sizeof(leaf), "%s_cand_%03d.npcd", row.scan_id.c_str(),
                      row.cand_id);
        atomic_file(cloud_dir / leaf, [&](const fs::path& p) { write_npcd(p, sampled); });

        json side;
        side["scan_id"] = row.scan_id;
        side["cand_id"] = row.cand_id;
        side["label"] = row.label;
        side["p"] = row.p;
        side["center_mm"] = {cand.center_mm.x, cand.center_mm.y, cand.center_mm.z};
        side["r_mm"] = cand.r_mm;
        side["sampler"] = pc.sampler_mode;
        side["m"] = pc.sampler.m;
        side["sigma_mm"] = pc.sampler.sigma_ratio * cand.r_mm;
        side["source_points"] = full.points.size();
        side["mask_points"] = mask_pts;
        side["mask_quota"] = stats.mask_quota;
        side["draws"] = stats.draws;
        side["budget_exhausted"] = stats.budget_exhausted;
        side["uniform_fill"] = stats.uniform_fill;
        write_text_file(cloud_dir / (std::string(leaf) + ".json"), side.dump(2) + "\n");

        CloudRow crow;
        crow.scan_id = row.scan_id;
        crow.cand_id = row.cand_id;
        crow.cloud_path = "clouds/" + split_name + "/" + leaf;
        crow.p = row.p;
        crow.label = row.label;
        crow.fold = row.fold;
        crow.center_mm = cand.center_mm;
        crow.r_mm = cand.r_mm;
        out_rows[r] = std::move(crow);
      } catch (const Error& e) {
        errors_by_row[r] = row.scan_id + "/cand_" + std::to_string(row.cand_id) + ": [" +
                           errc_name(e.code()) + "] " + e.what();
      }
    }
  });

  SampleSummary summary;
  std::vector<CloudRow> manifest_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (out_rows[r]) {
      manifest_rows.push_back(*out_rows[r]);
      ++summary.n_ok;
    } else {
      summary.errors.push_back(errors_by_row[r]);
    }
  }
  write_cloud_rows(dir / ("clouds_" + split_name + ".jsonl"), manifest_rows);
  return summary;
}

// ---- train ------------------------------------------------------------------

// The last stub-inference fold of the train split is held out as the
// validation set for best-epoch selection; the gradient never sees it.
inline TrainResult run_train(const fs::path& dir, const PipelineConfig& pc,
                             const fs::path& weights_out, const fs::path& log_out) {
  const std::vector<CloudRow> rows = read_cloud_rows(dir / "clouds_train.jsonl");
  require(!rows.empty(), Errc::too_few_points, "run_train: empty cloud manifest");
  const int val_fold = pc.folds - 1;

  std::vector<LabeledCloud> train_set;
  ValContext val;
  std::map<std::string, bool> val_scans;
  for (const CloudRow& row : rows) {
    PointCloud pc_in = read_npcd(dir / row.cloud_path);
    if (row.fold == val_fold && pc.folds >= 2) {
      val.clouds.push_back(std::move(pc_in));
      val.cands.push_back({row.scan_id, row.center_mm, 0.0});
      val_scans[row.scan_id] = true;
    } else {
      train_set.push_back({std::move(pc_in), row.label});
    }
  }
  for (const auto& [scan_id, unused] : val_scans) {
    (void)unused;
    for (const TruthNodule& t : read_truths(dir / "scans" / scan_id / "truth.json"))
      if (t.diameter_mm > pc.small_diameter_mm)
        val.truths.push_back({scan_id, t.center_mm, t.diameter_mm});
  }
  val.n_scans = static_cast<int>(val_scans.size());
  if (val.truths.empty()) val = ValContext{};  // no usable validation signal

  TrainConfig tcfg = pc.train;
  tcfg.augment = pc.augment;
  tcfg.seed = derive_seed(pc.seed, salt::train);
  TrainResult res = train(train_set, val, pc.model, tcfg);

  atomic_file(weights_out, [&](const fs::path& p) { save_weights(p, res.weights); });
  atomic_file(log_out, [&](const fs::path& p) { write_train_log(p, res.log); });
  return res;
}

// ---- eval -------------------------------------------------------------------

struct EvalOutput {
  FrocReport report;
  MatchResult matched;
  std::vector<CloudRow> rows;
  std::vector<double> scores;
  int n_scans = 0;
};

inline EvalOutput run_eval(const fs::path& dir, const ModelWeights<float>& w,
                           const PipelineConfig& pc, const std::string& split_name) {
  EvalOutput out;
  out.rows = read_cloud_rows(dir / ("clouds_" + split_name + ".jsonl"));
  const ScanSplit split = read_split(dir / "split.json");
  const std::vector<int>& scan_ids = split_name == "test" ? split.test : split.train;
  out.n_scans = static_cast<int>(scan_ids.size());

  std::vector<ScoredCandidate> scored(out.rows.size());
  out.scores.resize(out.rows.size());
  parallel_for(out.rows.size(), pc.jobs, [&](std::size_t i) {
    const PointCloud cloud = read_npcd(dir / out.rows[i].cloud_path);
    const double s = score_cloud(w, cloud);
    out.scores[i] = s;
    scored[i] = {out.rows[i].scan_id, out.rows[i].center_mm, s};
  });

  std::vector<Truth> truths;
  for (int sid : scan_ids) {
    const std::string name = scan_name(sid);
    for (const TruthNodule& t : read_truths(dir / "scans" / name / "truth.json"))
      truths.push_back({name, t.center_mm, t.diameter_mm});
  }
  out.matched = match_candidates(scored, truths, pc.small_diameter_mm);
  out.report = froc(out.matched, out.n_scans);
  return out;
}

inline const char* match_role_name(MatchRole r) {
  switch (r) {
    case MatchRole::hit: return "hit";
    case MatchRole::ignored_dup: return "ignored";
    case MatchRole::fp: return "fp";
  }
  return "?";
}

inline void write_eval_csv(const fs::path& path, const EvalOutput& ev) {
  std::string text = "scan_id,cand_id,score,label,role\n";
  char buf[160];
  for (std::size_t i = 0; i < ev.rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%d,%s\n", ev.rows[i].scan_id.c_str(),
                  ev.rows[i].cand_id, ev.scores[i], ev.rows[i].label,
                  match_role_name(ev.matched.labeled[i].role));
    text += buf;
  }
  write_text_file(path, text);
}

// Labeled-candidate CSV (scan_id,cand_id,score,label,role) -> FROC, given the
// truth count the roles were computed against.
inline FrocReport froc_from_csv(const fs::path& path, int n_scans, int n_truths) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), Errc::io_error,
          path.string() + ": empty file");
  require(line == "scan_id,cand_id,score,label,role", Errc::bad_config,
          path.string() + ": unexpected header '" + line + "'");
  MatchResult matched;
  matched.n_truths = n_truths;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    require(cols.size() == 5, Errc::bad_config, path.string() + ": bad row '" + line + "'");
    MatchedCandidate mc;
    mc.cand.scan_id = cols[0];
    mc.cand.score = std::stod(cols[2]);
    if (cols[4] == "hit")
      mc.role = MatchRole::hit;
    else if (cols[4] == "ignored")
      mc.role = MatchRole::ignored_dup;
    else if (cols[4] == "fp")
      mc.role = MatchRole::fp;
    else
      raise(Errc::bad_config, path.string() + ": unknown role '" + cols[4] + "'");
    matched.labeled.push_back(std::move(mc));
  }
  return froc(matched, n_scans);
}

}  // namespace pcfpr
