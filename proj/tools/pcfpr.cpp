// Command-line front-end for the candidate-classification pipeline:
// phantom generation, detector-stub dataset assembly, cloud sampling,
// training, FROC evaluation, and PLY export.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcfpr/pcfpr.hpp"

namespace {

using pcfpr::PipelineConfig;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> sampler;
  std::optional<std::string> features;
  std::optional<bool> augment;
};

PipelineConfig resolve_config(const GlobalOpts& g) {
  PipelineConfig pc;
  if (!g.config_path.empty()) pcfpr::apply_config(pc, pcfpr::ConfigFile::load(g.config_path));
  if (g.seed) pc.seed = *g.seed;
  if (g.jobs) pc.jobs = *g.jobs;
  if (g.sampler) pc.sampler_mode = *g.sampler;
  if (g.features) pc.model.feature_set = pcfpr::parse_feature_set(*g.features);
  if (g.augment) {
    pc.augment_images = *g.augment;
    pc.train.augment_points = *g.augment;
  }
  return pc;
}

void print_error_json(const std::string& code, const std::string& message) {
  nlohmann::json j{{"error", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud false-positive reduction pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--config", g.config_path, "config file (INI-style sections)");
  app.add_option("--seed", g.seed, "global seed override");
  app.add_option("--jobs", g.jobs, "worker threads (results are independent of this)");
  app.add_option("--sampler", g.sampler, "sampler mode")
      ->check(CLI::IsMember({"rbf", "uniform"}));
  app.add_option("--features", g.features, "feature set")
      ->check(CLI::IsMember({"xyz-hu-p", "xyz-p", "xyz-hu", "xyz", "hu-p"}));
  app.add_flag("--augment,!--no-augment", g.augment, "enable training-time augmentation");

  // gen
  auto* gen = app.add_subcommand("gen", "generate phantom scans");
  std::string gen_dir;
  std::optional<int> gen_scans;
  gen->add_option("--out", gen_dir, "dataset directory")->required();
  gen->add_option("--scans", gen_scans, "number of scans");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "run the detector stub and build manifests");
  std::string ds_dir;
  std::optional<int> ds_folds;
  dataset->add_option("--dir", ds_dir, "dataset directory")->required();
  dataset->add_option("--folds", ds_folds, "stub-inference folds");

  // sample
  auto* sample = app.add_subcommand("sample", "turn candidate ROIs into fixed-size clouds");
  std::string sm_dir, sm_split = "both";
  sample->add_option("--dir", sm_dir, "dataset directory")->required();
  sample->add_option("--split", sm_split, "which manifest to sample")
      ->check(CLI::IsMember({"train", "test", "both"}));

  // augment (volume utility)
  auto* augment = app.add_subcommand("augment", "apply image augmentations to a volume");
  std::string au_in, au_out;
  augment->add_option("--in", au_in, "input volume (.nvol)")->required();
  augment->add_option("--out", au_out, "output volume (.nvol)")->required();

  // train
  auto* train = app.add_subcommand("train", "train the classifier on sampled clouds");
  std::string tr_dir, tr_weights, tr_log;
  train->add_option("--dir", tr_dir, "dataset directory")->required();
  train->add_option("--weights", tr_weights, "weights output (default <dir>/weights.nwts)");
  train->add_option("--log", tr_log, "epoch log output (default <dir>/train_log.csv)");

  // eval
  auto* eval = app.add_subcommand("eval", "score a split and report FROC");
  std::string ev_dir, ev_weights, ev_prefix, ev_split = "test";
  eval->add_option("--dir", ev_dir, "dataset directory")->required();
  eval->add_option("--weights", ev_weights, "weights file")->required();
  eval->add_option("--report", ev_prefix, "report path prefix (default <dir>/froc_<split>)");
  eval->add_option("--split", ev_split, "split to score")
      ->check(CLI::IsMember({"train", "test"}));

  // froc
  auto* froc_cmd = app.add_subcommand("froc", "FROC from a labeled-candidate CSV");
  std::string fr_csv;
  int fr_scans = 0, fr_truths = 0;
  froc_cmd->add_option("--csv", fr_csv, "candidate CSV (scan_id,cand_id,score,label,role)")
      ->required();
  froc_cmd->add_option("--scans", fr_scans, "number of scans scored")->required();
  froc_cmd->add_option("--truths", fr_truths, "number of counted truths")->required();

  // export-ply
  auto* exp = app.add_subcommand("export-ply", "convert binary clouds to ASCII PLY");
  std::vector<std::string> xp_inputs;
  std::string xp_out_dir;
  exp->add_option("inputs", xp_inputs, "cloud files (.npcd)")->required();
  exp->add_option("--out-dir", xp_out_dir, "output directory (default: next to input)");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig base = resolve_config(g);

    if (*gen) {
      PipelineConfig pc = base;
      if (gen_scans) pc.n_scans = *gen_scans;
      pcfpr::run_gen(gen_dir, pc);
      std::printf("generated %d scans in %s\n", pc.n_scans, gen_dir.c_str());
    } else if (*dataset) {
      PipelineConfig pc = base;
      if (ds_folds) pc.folds = *ds_folds;
      pcfpr::run_dataset(ds_dir, pc);
      std::printf("wrote fpr_train.jsonl, fpr_test.jsonl, split.json in %s\n", ds_dir.c_str());
    } else if (*sample) {
      int failures = 0;
      for (const std::string split : {std::string("train"), std::string("test")}) {
        if (sm_split != "both" && sm_split != split) continue;
        const pcfpr::SampleSummary s = pcfpr::run_sample(sm_dir, base, split);
        std::printf("sampled %d clouds (%s split, %s mode)\n", s.n_ok, split.c_str(),
                    base.sampler_mode.c_str());
        for (const std::string& e : s.errors) {
          print_error_json("SampleFailure", e);
          ++failures;
        }
      }
      if (failures) {
        print_error_json("PartialFailure", std::to_string(failures) + " candidates failed");
        return 1;
      }
    } else if (*augment) {
      const pcfpr::Volume in = pcfpr::read_volume(au_in);
      auto rng = pcfpr::make_rng(base.seed);
      pcfpr::Volume out = pcfpr::masked_gaussian_noise(in, base.augment, rng);
      out = pcfpr::gaussian_blur(out, base.augment, rng);
      out = pcfpr::hu_shift(out, base.augment, rng);
      pcfpr::write_nvol(au_out, out);
      std::printf("augmented %s -> %s\n", au_in.c_str(), au_out.c_str());
    } else if (*train) {
      const std::string weights =
          tr_weights.empty() ? tr_dir + "/weights.nwts" : tr_weights;
      const std::string log = tr_log.empty() ? tr_dir + "/train_log.csv" : tr_log;
      const pcfpr::TrainResult res = pcfpr::run_train(tr_dir, base, weights, log);
      std::printf("trained %d epochs; best val mean sens %.4f at epoch %d\n",
                  static_cast<int>(res.log.size()), res.best_val, res.best_epoch);
      std::printf("weights: %s\nlog: %s\n", weights.c_str(), log.c_str());
    } else if (*eval) {
      const pcfpr::ModelWeights<float> w = pcfpr::load_weights(ev_weights);
      const pcfpr::EvalOutput ev = pcfpr::run_eval(ev_dir, w, base, ev_split);
      const std::string prefix =
          ev_prefix.empty() ? ev_dir + "/froc_" + ev_split : ev_prefix;
      pcfpr::write_froc_json(prefix + ".json", ev.report);
      pcfpr::write_froc_csv(prefix + ".csv", ev.report);
      pcfpr::write_eval_csv(prefix + "_candidates.csv", ev);
      std::printf("%s\n", pcfpr::froc_row(ev.report).c_str());
    } else if (*froc_cmd) {
      const pcfpr::FrocReport rep = pcfpr::froc_from_csv(fr_csv, fr_scans, fr_truths);
      std::printf("%s\n", pcfpr::froc_row(rep).c_str());
    } else if (*exp) {
      for (const std::string& input : xp_inputs) {
        const pcfpr::PointCloud cloud = pcfpr::read_npcd(input);
        std::filesystem::path out = input;
        out.replace_extension(".ply");
        if (!xp_out_dir.empty()) {
          std::filesystem::create_directories(xp_out_dir);
          out = std::filesystem::path(xp_out_dir) / out.filename();
        }
        pcfpr::write_ply(out, cloud);
        std::printf("%s -> %s (%zu points)\n", input.c_str(), out.string().c_str(),
                    cloud.points.size());
      }
    }
  } catch (const pcfpr::Error& e) {
    print_error_json(pcfpr::errc_name(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error_json("Internal", e.what());
    return 2;
  }
  return 0;
}
