#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pcfpr/augment.hpp"
#include "pcfpr/eval.hpp"
#include "pcfpr/model.hpp"

namespace pcfpr {

struct TrainConfig {
  double lr0 = 0.001;
  int epochs = 70;
  int lr_halve_every = 10;  // lr(e) = lr0 * 0.5^(e / this)
  int batch = 32;
  int batches_per_epoch = 0;  // 0 = ceil(train size / batch)
  bool augment_points = false;  // transverse rotation + anisotropic scale
  AugmentConfig augment;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 0;
};

inline double lr_at_epoch(const TrainConfig& cfg, int epoch) {
  return cfg.lr0 * std::pow(0.5, epoch / cfg.lr_halve_every);
}

struct LabeledCloud {
  PointCloud cloud;
  int label = 0;
};

// Everything needed to score a validation split with the FROC protocol:
// one cloud per candidate plus the matching geometry.
struct ValContext {
  std::vector<PointCloud> clouds;
  std::vector<ScoredCandidate> cands;  // scores are overwritten at eval time
  std::vector<Truth> truths;
  int n_scans = 0;
};

inline double score_cloud(const ModelWeights<float>& w, const PointCloud& pc) {
  const Mat<float> X = select_features<float>(pc, w.cfg.feature_set);
  return static_cast<double>(predict(X, w));
}

inline FrocReport evaluate_froc(const ModelWeights<float>& w, const ValContext& val) {
  std::vector<ScoredCandidate> scored = val.cands;
  for (std::size_t i = 0; i < val.clouds.size(); ++i)
    scored[i].score = score_cloud(w, val.clouds[i]);
  return froc(match_candidates(scored, val.truths), val.n_scans);
}

struct EpochRow {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_mean_sens = 0.0;
};

struct TrainResult {
  ModelWeights<float> weights;  // best validation mean sensitivity (final if no val)
  std::vector<EpochRow> log;
  double best_val = -1.0;
  int best_epoch = -1;
};

namespace detail {

struct Adam {
  std::vector<Mat<float>> m, v;
  long step = 0;

  explicit Adam(ModelWeights<float>& w) {
    w.for_each_tensor([&](const std::string&, Mat<float>& t) {
      m.emplace_back(t.rows, t.cols);
      v.emplace_back(t.rows, t.cols);
    });
  }

  void update(ModelWeights<float>& w, ModelWeights<float>& g, const TrainConfig& cfg,
              double lr) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    std::size_t ti = 0;
    std::vector<Mat<float>*> gt;
    g.for_each_tensor([&](const std::string&, Mat<float>& t) { gt.push_back(&t); });
    w.for_each_tensor([&](const std::string&, Mat<float>& t) {
      Mat<float>& gm = *gt[ti];
      Mat<float>& mm = m[ti];
      Mat<float>& vv = v[ti];
      for (std::size_t i = 0; i < t.a.size(); ++i) {
        const double gv = gm.a[i];
        mm.a[i] = static_cast<float>(cfg.beta1 * mm.a[i] + (1.0 - cfg.beta1) * gv);
        vv.a[i] = static_cast<float>(cfg.beta2 * vv.a[i] + (1.0 - cfg.beta2) * gv * gv);
        const double mhat = mm.a[i] / c1;
        const double vhat = vv.a[i] / c2;
        t.a[i] = static_cast<float>(t.a[i] - lr * mhat / (std::sqrt(vhat) + cfg.eps));
      }
      ++ti;
    });
  }
};

// Rotation and per-axis scale applied to the coordinate columns of a feature
// matrix (mm space). Draws always happen so the stream is input-independent.
inline void augment_features(Mat<float>& X, FeatureSet fs, const AugmentConfig& acfg,
                             std::mt19937_64& rng) {
  const double theta = draw_rotation(rng);
  double f[3];
  for (double& fi : f) fi = 1.0 + acfg.scale_sigma * normal_unit(rng);
  if (!has_coords(fs)) return;
  if (f[0] <= 0.0 || f[1] <= 0.0 || f[2] <= 0.0) return;  // vanishing odds at small sigma
  const double c = std::cos(theta), s = std::sin(theta);
  for (int i = 0; i < X.rows; ++i) {
    const double x = X(i, 0), y = X(i, 1), z = X(i, 2);
    X(i, 0) = static_cast<float>((c * x - s * y) * f[0]);
    X(i, 1) = static_cast<float>((s * x + c * y) * f[1]);
    X(i, 2) = static_cast<float>(z * f[2]);
  }
}

}  // namespace detail

// Single-threaded, deterministic training: balanced batches, adaptive-moment
// updates, learning rate halved every lr_halve_every epochs, weights snapshot
// at the best validation mean sensitivity.
inline TrainResult train(const std::vector<LabeledCloud>& data, const ValContext& val,
                         const ModelConfig& mcfg, const TrainConfig& tcfg) {
  require(!data.empty(), Errc::too_few_points, "train: empty dataset");
  require(tcfg.epochs >= 1, Errc::bad_config, "train: epochs must be >= 1");
  require(tcfg.lr0 > 0.0, Errc::bad_config, "train: lr0 must be > 0");
  require(tcfg.lr_halve_every >= 1, Errc::bad_config, "train: lr_halve_every must be >= 1");

  std::vector<int> labels;
  labels.reserve(data.size());
  for (const LabeledCloud& lc : data) labels.push_back(lc.label);

  ModelWeights<float> w = init_weights<float>(mcfg, derive_seed(tcfg.seed, 0xC0DE));
  detail::Adam adam(w);
  BalancedBatches batches(labels, tcfg.batch, derive_seed(tcfg.seed, 0xBA7C));
  auto aug_rng = make_rng(derive_seed(tcfg.seed, 0xA06));

  const int per_epoch = tcfg.batches_per_epoch > 0
                            ? tcfg.batches_per_epoch
                            : std::max<int>(1, static_cast<int>((data.size() + tcfg.batch - 1) /
                                                                tcfg.batch));

  TrainResult res;
  res.weights = w;
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(tcfg, epoch);
    double loss_sum = 0.0;
    long loss_n = 0;
    for (int bi = 0; bi < per_epoch; ++bi) {
      ModelWeights<float> gsum = make_weights<float>(mcfg);
      for (std::size_t idx : batches.next()) {
        Mat<float> X = select_features<float>(data[idx].cloud, mcfg.feature_set);
        if (tcfg.augment_points) detail::augment_features(X, mcfg.feature_set, tcfg.augment, aug_rng);
        ForwardTrace<float> tr = forward(X, w);
        loss_sum += bce_loss(tr.prob, data[idx].label);
        ++loss_n;
        ModelWeights<float> g = backward(tr, data[idx].label, w);
        std::vector<Mat<float>*> gs;
        g.for_each_tensor([&](const std::string&, Mat<float>& t) { gs.push_back(&t); });
        std::size_t ti = 0;
        gsum.for_each_tensor([&](const std::string&, Mat<float>& t) {
          for (std::size_t i = 0; i < t.a.size(); ++i) t.a[i] += gs[ti]->a[i];
          ++ti;
        });
      }
      const float inv = 1.0f / static_cast<float>(tcfg.batch);
      gsum.for_each_tensor([&](const std::string&, Mat<float>& t) {
        for (auto& v : t.a) v *= inv;
      });
      adam.update(w, gsum, tcfg, lr);
    }

    EpochRow row;
    row.epoch = epoch;
    row.lr = lr;
    row.train_loss = loss_n ? loss_sum / loss_n : 0.0;
    if (!val.clouds.empty()) {
      row.val_mean_sens = evaluate_froc(w, val).mean_sens;
      if (row.val_mean_sens > res.best_val) {
        res.best_val = row.val_mean_sens;
        res.best_epoch = epoch;
        res.weights = w;
      }
    }
    res.log.push_back(row);
  }
  if (val.clouds.empty()) {
    res.weights = w;
    res.best_epoch = tcfg.epochs - 1;
  }
  return res;
}

inline void write_train_log(const std::filesystem::path& path,
                            const std::vector<EpochRow>& log) {
  std::ofstream out(path);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out << "epoch,lr,train_loss,val_mean_sens\n";
  char buf[128];
  for (const EpochRow& r : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.train_loss,
                  r.val_mean_sens);
    out << buf;
  }
}

}  // namespace pcfpr
