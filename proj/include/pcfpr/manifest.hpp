#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcfpr/eval.hpp"
#include "pcfpr/phantom.hpp"

// Dataset bookkeeping: the gen index (manifest.json), per-scan truth JSON,
// the split record, and the JSON-lines candidate / cloud manifests. All paths
// inside these files are relative to the dataset root so a rerun into another
// directory stays byte-identical.

namespace pcfpr {

using nlohmann::json;

inline std::string scan_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scan_%04d", index);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(out.good(), Errc::io_error, "cannot open for writing: " + tmp.string());
    out << text;
    require(out.good(), Errc::io_error, "short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    raise(Errc::io_error, path.string() + ": " + e.what());
  }
  return j;
}

inline json truth_to_json(const TruthNodule& t) {
  return json{{"center_mm", {t.center_mm.x, t.center_mm.y, t.center_mm.z}},
              {"diameter_mm", t.diameter_mm},
              {"hu", t.hu},
              {"subpleural", t.subpleural}};
}

inline TruthNodule truth_from_json(const json& j) {
  TruthNodule t;
  t.center_mm = {j.at("center_mm").at(0).get<double>(), j.at("center_mm").at(1).get<double>(),
                 j.at("center_mm").at(2).get<double>()};
  t.diameter_mm = j.at("diameter_mm").get<double>();
  t.hu = j.at("hu").get<double>();
  t.subpleural = j.value("subpleural", false);
  return t;
}

inline void write_truths(const std::filesystem::path& path,
                         const std::vector<TruthNodule>& truths) {
  json j;
  j["truths"] = json::array();
  for (const TruthNodule& t : truths) j["truths"].push_back(truth_to_json(t));
  write_text_file(path, j.dump(2) + "\n");
}

inline std::vector<TruthNodule> read_truths(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  std::vector<TruthNodule> out;
  for (const json& tj : j.at("truths")) out.push_back(truth_from_json(tj));
  return out;
}

// One detector candidate as listed in fpr_train.jsonl / fpr_test.jsonl.
struct CandidateRow {
  std::string scan_id;
  int cand_id = 0;
  std::string mask_path;  // relative to dataset root
  double p = 0.0;
  int label = 0;
  int fold = -1;  // stub-inference fold; -1 on the test split
};

inline void write_candidate_rows(const std::filesystem::path& path,
                                 const std::vector<CandidateRow>& rows) {
  std::string text;
  for (const CandidateRow& r : rows) {
    json j{{"scan_id", r.scan_id}, {"cand_id", r.cand_id}, {"mask_path", r.mask_path},
           {"p", r.p},             {"label", r.label},     {"fold", r.fold}};
    text += j.dump();
    text += "\n";
  }
  write_text_file(path, text);
}

inline std::vector<CandidateRow> read_candidate_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  std::vector<CandidateRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      raise(Errc::io_error, path.string() + ": " + e.what());
    }
    CandidateRow r;
    r.scan_id = j.at("scan_id").get<std::string>();
    r.cand_id = j.at("cand_id").get<int>();
    r.mask_path = j.at("mask_path").get<std::string>();
    r.p = j.at("p").get<double>();
    r.label = j.at("label").get<int>();
    r.fold = j.value("fold", -1);
    rows.push_back(std::move(r));
  }
  return rows;
}

// One sampled cloud as listed in clouds_train.jsonl / clouds_test.jsonl.
struct CloudRow {
  std::string scan_id;
  int cand_id = 0;
  std::string cloud_path;  // relative to dataset root
  double p = 0.0;
  int label = 0;
  int fold = -1;
  Vec3 center_mm{};
  double r_mm = 0.0;
};

inline void write_cloud_rows(const std::filesystem::path& path,
                             const std::vector<CloudRow>& rows) {
  std::string text;
  for (const CloudRow& r : rows) {
    json j{{"scan_id", r.scan_id},
           {"cand_id", r.cand_id},
           {"cloud_path", r.cloud_path},
           {"p", r.p},
           {"label", r.label},
           {"fold", r.fold},
           {"center_mm", {r.center_mm.x, r.center_mm.y, r.center_mm.z}},
           {"r_mm", r.r_mm}};
    text += j.dump();
    text += "\n";
  }
  write_text_file(path, text);
}

inline std::vector<CloudRow> read_cloud_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  std::vector<CloudRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      raise(Errc::io_error, path.string() + ": " + e.what());
    }
    CloudRow r;
    r.scan_id = j.at("scan_id").get<std::string>();
    r.cand_id = j.at("cand_id").get<int>();
    r.cloud_path = j.at("cloud_path").get<std::string>();
    r.p = j.at("p").get<double>();
    r.label = j.at("label").get<int>();
    r.fold = j.value("fold", -1);
    r.center_mm = {j.at("center_mm").at(0).get<double>(),
                   j.at("center_mm").at(1).get<double>(),
                   j.at("center_mm").at(2).get<double>()};
    r.r_mm = j.at("r_mm").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_split(const std::filesystem::path& path, const ScanSplit& split, int folds,
                        double test_fraction) {
  json j{{"folds", folds},
         {"test_fraction", test_fraction},
         {"train", split.train},
         {"test", split.test},
         {"fold_of_train", split.fold_of_train}};
  write_text_file(path, j.dump(2) + "\n");
}

inline ScanSplit read_split(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  ScanSplit s;
  s.train = j.at("train").get<std::vector<int>>();
  s.test = j.at("test").get<std::vector<int>>();
  s.fold_of_train = j.at("fold_of_train").get<std::vector<int>>();
  return s;
}

inline void write_froc_json(const std::filesystem::path& path, const FrocReport& rep) {
  json j;
  j["fp_levels"] = kFpLevels;
  j["sens_at"] = rep.sens_at;
  j["mean_sens"] = rep.mean_sens;
  j["curve"] = json::array();
  for (const FrocPoint& pt : rep.curve)
    j["curve"].push_back({{"fp_per_scan", pt.fp_per_scan}, {"sensitivity", pt.sensitivity}});
  write_text_file(path, j.dump(2) + "\n");
}

inline void write_froc_csv(const std::filesystem::path& path, const FrocReport& rep) {
  std::string text = "fp_per_scan,sensitivity\n";
  char buf[96];
  for (const FrocPoint& pt : rep.curve) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", pt.fp_per_scan, pt.sensitivity);
    text += buf;
  }
  write_text_file(path, text);
}

}  // namespace pcfpr
