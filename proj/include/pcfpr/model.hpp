#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcfpr/cloud.hpp"
#include "pcfpr/linalg.hpp"
#include "pcfpr/rng.hpp"

// Point-set classifier: optional EdgeConv layer on the input features, a
// shared per-point MLP, a channel-wise max-pool over points, and a small
// dense head ending in a sigmoid. Forward keeps a trace so backward can
// produce exact analytic gradients (max-pool routes to the argmax point,
// ties to the lowest index).

namespace pcfpr {

enum class FeatureSet { xyz_hu_p, xyz_p, xyz_hu, xyz, hu_p };

inline int feature_dim(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::xyz_hu_p: return 5;
    case FeatureSet::xyz_p: return 4;
    case FeatureSet::xyz_hu: return 4;
    case FeatureSet::xyz: return 3;
    case FeatureSet::hu_p: return 2;
  }
  return 0;
}

inline bool has_coords(FeatureSet fs) { return fs != FeatureSet::hu_p; }

inline const char* feature_set_name(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::xyz_hu_p: return "xyz+hu+p";
    case FeatureSet::xyz_p: return "xyz+p";
    case FeatureSet::xyz_hu: return "xyz+hu";
    case FeatureSet::xyz: return "xyz";
    case FeatureSet::hu_p: return "hu+p";
  }
  return "?";
}

inline FeatureSet parse_feature_set(std::string s) {
  for (char& c : s)
    if (c == '_' || c == ' ' || c == '-') c = '+';
  if (s == "xyz+hu+p") return FeatureSet::xyz_hu_p;
  if (s == "xyz+p") return FeatureSet::xyz_p;
  if (s == "xyz+hu") return FeatureSet::xyz_hu;
  if (s == "xyz") return FeatureSet::xyz;
  if (s == "hu+p") return FeatureSet::hu_p;
  raise(Errc::bad_config, "unknown feature set '" + s + "'");
}

struct ModelConfig {
  FeatureSet feature_set = FeatureSet::xyz_hu_p;
  bool use_edgeconv = false;
  int k_neighbors = 10;
  double coord_scale_mm = 16.0;           // coordinates divided by this inside forward
  std::vector<int> mlp_widths = {64, 128, 256};
  int head_width = 64;
  int edge_width = 64;

  int input_dim() const { return feature_dim(feature_set); }
  int pooled_dim() const { return mlp_widths.back(); }
};

inline void validate_model(const ModelConfig& cfg) {
  require(!cfg.mlp_widths.empty(), Errc::bad_config, "model: mlp_widths must be non-empty");
  for (int w : cfg.mlp_widths)
    require(w > 0, Errc::bad_config, "model: mlp widths must be > 0");
  require(cfg.head_width > 0, Errc::bad_config, "model: head_width must be > 0");
  require(cfg.edge_width > 0, Errc::bad_config, "model: edge_width must be > 0");
  require(cfg.k_neighbors > 0, Errc::bad_config, "model: k_neighbors must be > 0");
  require(cfg.coord_scale_mm > 0.0, Errc::bad_config, "model: coord_scale_mm must be > 0");
}

// Columns restricted to the chosen channels, in x,y,z,hu,p order.
template <typename T>
Mat<T> select_features(const PointCloud& pc, FeatureSet fs) {
  const int d = feature_dim(fs);
  Mat<T> X(static_cast<int>(pc.points.size()), d);
  for (int i = 0; i < X.rows; ++i) {
    const CloudPoint& pt = pc.points[static_cast<std::size_t>(i)];
    int c = 0;
    if (has_coords(fs)) {
      X(i, c++) = static_cast<T>(pt.x);
      X(i, c++) = static_cast<T>(pt.y);
      X(i, c++) = static_cast<T>(pt.z);
    }
    if (fs == FeatureSet::xyz_hu_p || fs == FeatureSet::xyz_hu || fs == FeatureSet::hu_p)
      X(i, c++) = static_cast<T>(pt.hu);
    if (fs == FeatureSet::xyz_hu_p || fs == FeatureSet::xyz_p || fs == FeatureSet::hu_p)
      X(i, c++) = static_cast<T>(pt.p);
  }
  return X;
}

template <typename T>
struct ModelWeights {
  ModelConfig cfg;
  Mat<T> edge_W, edge_b;              // edge_width x 2*input_dim ; 1 x edge_width
  std::vector<Mat<T>> pw_W, pw_b;     // layer l: width_l x in_l ; 1 x width_l
  Mat<T> h1_W, h1_b;                  // head_width x pooled ; 1 x head_width
  Mat<T> h2_W, h2_b;                  // 1 x head_width ; 1 x 1

  // Visits tensors in a fixed order; used by init, Adam, and serialization.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    if (cfg.use_edgeconv) {
      fn("edge.W", edge_W);
      fn("edge.b", edge_b);
    }
    for (std::size_t l = 0; l < pw_W.size(); ++l) {
      const std::string tag = "pw" + std::to_string(l);
      fn(tag + ".W", pw_W[l]);
      fn(tag + ".b", pw_b[l]);
    }
    fn("head1.W", h1_W);
    fn("head1.b", h1_b);
    fn("head2.W", h2_W);
    fn("head2.b", h2_b);
  }
};

template <typename T>
ModelWeights<T> make_weights(const ModelConfig& cfg) {
  validate_model(cfg);
  ModelWeights<T> w;
  w.cfg = cfg;
  int in = cfg.input_dim();
  if (cfg.use_edgeconv) {
    w.edge_W = Mat<T>(cfg.edge_width, 2 * in);
    w.edge_b = Mat<T>(1, cfg.edge_width);
    in = cfg.edge_width;
  }
  for (int width : cfg.mlp_widths) {
    w.pw_W.emplace_back(width, in);
    w.pw_b.emplace_back(1, width);
    in = width;
  }
  w.h1_W = Mat<T>(cfg.head_width, cfg.pooled_dim());
  w.h1_b = Mat<T>(1, cfg.head_width);
  w.h2_W = Mat<T>(1, cfg.head_width);
  w.h2_b = Mat<T>(1, 1);
  return w;
}

// He-style normal init, biases zero, deterministic in the seed.
template <typename T>
ModelWeights<T> init_weights(const ModelConfig& cfg, std::uint64_t seed) {
  ModelWeights<T> w = make_weights<T>(cfg);
  auto rng = make_rng(seed);
  w.for_each_tensor([&](const std::string& name, Mat<T>& t) {
    if (name.ends_with(".b")) return;
    const double scale = std::sqrt(2.0 / std::max(1, t.cols));
    for (auto& v : t.a) v = static_cast<T>(scale * normal_unit(rng));
  });
  return w;
}

// Exact brute-force kNN in the given feature space; self excluded, ties by
// (distance^2, index) ascending. Returns row-major m x k neighbor indices.
template <typename T>
std::vector<int> knn_indices(const Mat<T>& X, int k) {
  const int m = X.rows;
  require(m >= k + 1, Errc::too_few_points,
          "knn: need at least k+1 points, have " + std::to_string(m));
  std::vector<int> out(static_cast<std::size_t>(m) * k);
  std::vector<std::pair<T, int>> cand(static_cast<std::size_t>(m - 1));
  for (int i = 0; i < m; ++i) {
    std::size_t n = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      T d2{};
      const T* xi = X.row(i);
      const T* xj = X.row(j);
      for (int c = 0; c < X.cols; ++c) {
        const T diff = xi[c] - xj[c];
        d2 += diff * diff;
      }
      cand[n++] = {d2, j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(i) * k + t] = cand[static_cast<std::size_t>(t)].second;
  }
  return out;
}

template <typename T>
struct ForwardTrace {
  Mat<T> X0;                    // scaled input, m x d0
  std::vector<int> knn;         // m*k neighbor indices (edgeconv only)
  Mat<T> edge_pre;              // (m*k) x edge_width pre-ReLU
  Mat<T> edge_out;              // m x edge_width after ReLU+max over k
  std::vector<int> edge_argmax; // m*edge_width winning neighbor slot
  std::vector<Mat<T>> pre;      // per layer pre-activation, m x w_l
  std::vector<Mat<T>> act;      // inputs consumed by each layer (act[0] = MLP input)
  Mat<T> pooled;                // 1 x pooled_dim
  std::vector<int> pool_argmax; // winning point per channel
  Mat<T> h1_pre, h1_act;        // 1 x head_width
  T logit{};
  T prob{};
  double min_kink_margin = 0.0; // distance to nearest ReLU kink / pool tie
};

namespace detail {

template <typename T>
void add_bias_rows(Mat<T>& Y, const Mat<T>& b) {
  for (int i = 0; i < Y.rows; ++i) {
    T* yi = Y.row(i);
    const T* bp = b.row(0);
    for (int j = 0; j < Y.cols; ++j) yi[j] += bp[j];
  }
}

}  // namespace detail

template <typename T>
ForwardTrace<T> forward(const Mat<T>& features, const ModelWeights<T>& w) {
  const ModelConfig& cfg = w.cfg;
  validate_model(cfg);
  require(features.cols == cfg.input_dim(), Errc::bad_config,
          "forward: feature dim " + std::to_string(features.cols) + " != model input dim " +
              std::to_string(cfg.input_dim()));
  require(features.rows > 0, Errc::too_few_points, "forward: empty feature matrix");

  ForwardTrace<T> tr;
  tr.min_kink_margin = 1e300;
  auto note_margin = [&](double m) { tr.min_kink_margin = std::min(tr.min_kink_margin, m); };

  const int m = features.rows;
  tr.X0 = features;
  if (has_coords(cfg.feature_set)) {
    const T inv = static_cast<T>(1.0 / cfg.coord_scale_mm);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < 3; ++c) tr.X0(i, c) *= inv;
  }

  const Mat<T>* cur = &tr.X0;
  if (cfg.use_edgeconv) {
    const int k = cfg.k_neighbors;
    tr.knn = knn_indices(tr.X0, k);
    const int d0 = tr.X0.cols;
    Mat<T> edges(m * k, 2 * d0);
    for (int i = 0; i < m; ++i) {
      const T* xi = tr.X0.row(i);
      for (int t = 0; t < k; ++t) {
        T* e = edges.row(i * k + t);
        const T* xj = tr.X0.row(tr.knn[static_cast<std::size_t>(i) * k + t]);
        for (int c = 0; c < d0; ++c) {
          e[c] = xi[c];
          e[d0 + c] = xj[c] - xi[c];
        }
      }
    }
    tr.edge_pre = Mat<T>(m * k, cfg.edge_width);
    gemm_nt(edges, w.edge_W, tr.edge_pre);
    detail::add_bias_rows(tr.edge_pre, w.edge_b);

    tr.edge_out = Mat<T>(m, cfg.edge_width);
    tr.edge_argmax.assign(static_cast<std::size_t>(m) * cfg.edge_width, 0);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < cfg.edge_width; ++c) {
        T best{}, second{};
        int best_t = 0;
        for (int t = 0; t < k; ++t) {
          const T preact = tr.edge_pre(i * k + t, c);
          note_margin(std::abs(static_cast<double>(preact)));
          const T z = preact > T(0) ? preact : T(0);
          if (t == 0 || z > best) {
            if (t != 0) second = best;
            best = z;
            best_t = t;
          } else if (t == 1 || z > second) {
            second = z;
          }
        }
        // A pool tie only threatens the gradient when the winner sits above
        // the ReLU floor; clamped runners-up cannot overtake under a small
        // perturbation (their own kinks are tracked via |preact| above).
        if (k > 1 && best > T(0)) note_margin(static_cast<double>(best - second));
        tr.edge_out(i, c) = best;
        tr.edge_argmax[static_cast<std::size_t>(i) * cfg.edge_width + c] = best_t;
      }
    cur = &tr.edge_out;
  }

  tr.act.push_back(*cur);
  const std::size_t L = w.pw_W.size();
  for (std::size_t l = 0; l < L; ++l) {
    Mat<T> P(m, w.pw_W[l].rows);
    gemm_nt(tr.act.back(), w.pw_W[l], P);
    detail::add_bias_rows(P, w.pw_b[l]);
    tr.pre.push_back(P);
    if (l + 1 < L) {
      Mat<T> A = P;
      for (auto& v : A.a) {
        note_margin(std::abs(static_cast<double>(v)));
        v = v > T(0) ? v : T(0);
      }
      tr.act.push_back(std::move(A));
    }
  }

  const Mat<T>& last = tr.pre.back();
  tr.pooled = Mat<T>(1, last.cols);
  tr.pool_argmax.assign(static_cast<std::size_t>(last.cols), 0);
  for (int c = 0; c < last.cols; ++c) {
    T best = last(0, c);
    T second{};
    bool have_second = false;
    int best_i = 0;
    for (int i = 1; i < m; ++i) {
      const T v = last(i, c);
      if (v > best) {
        second = best;
        have_second = true;
        best = v;
        best_i = i;
      } else if (!have_second || v > second) {
        second = v;
        have_second = true;
      }
    }
    // The argmax only flips when the runner-up closes the top-2 gap.
    if (have_second) note_margin(static_cast<double>(best - second));
    tr.pooled(0, c) = best;
    tr.pool_argmax[static_cast<std::size_t>(c)] = best_i;
  }

  tr.h1_pre = Mat<T>(1, cfg.head_width);
  gemm_nt(tr.pooled, w.h1_W, tr.h1_pre);
  detail::add_bias_rows(tr.h1_pre, w.h1_b);
  tr.h1_act = tr.h1_pre;
  for (auto& v : tr.h1_act.a) {
    note_margin(std::abs(static_cast<double>(v)));
    v = v > T(0) ? v : T(0);
  }

  Mat<T> logit(1, 1);
  gemm_nt(tr.h1_act, w.h2_W, logit);
  tr.logit = logit(0, 0) + w.h2_b(0, 0);
  tr.prob = T(1) / (T(1) + std::exp(-tr.logit));
  return tr;
}

template <typename T>
T predict(const Mat<T>& features, const ModelWeights<T>& w) {
  return forward(features, w).prob;
}

// Binary cross-entropy with the probability clamped away from {0,1}.
template <typename T>
T bce_loss(T prob, int label) {
  const T lo = static_cast<T>(1e-7);
  const T p = std::clamp(prob, lo, T(1) - lo);
  return label ? -std::log(p) : -std::log(T(1) - p);
}

// Gradients of bce_loss(forward(...)) w.r.t. every weight tensor. Exact while
// the probability clamp is inactive; d(loss)/d(logit) = prob - label.
template <typename T>
ModelWeights<T> backward(const ForwardTrace<T>& tr, int label, const ModelWeights<T>& w) {
  const ModelConfig& cfg = w.cfg;
  ModelWeights<T> g = make_weights<T>(cfg);
  const int m = tr.X0.rows;

  const T dlogit = tr.prob - static_cast<T>(label);

  // Head.
  for (int j = 0; j < cfg.head_width; ++j) g.h2_W(0, j) = dlogit * tr.h1_act(0, j);
  g.h2_b(0, 0) = dlogit;

  Mat<T> dh1(1, cfg.head_width);
  for (int j = 0; j < cfg.head_width; ++j)
    dh1(0, j) = tr.h1_pre(0, j) > T(0) ? dlogit * w.h2_W(0, j) : T(0);
  gemm_tn(dh1, tr.pooled, g.h1_W);
  g.h1_b = dh1;

  Mat<T> dpooled(1, cfg.pooled_dim());
  gemm_nn(dh1, w.h1_W, dpooled);

  // Route pooled gradient to each channel's winning point.
  Mat<T> dP(m, cfg.pooled_dim());
  for (int c = 0; c < cfg.pooled_dim(); ++c)
    dP(tr.pool_argmax[static_cast<std::size_t>(c)], c) = dpooled(0, c);

  // Per-point layers, last to first.
  const std::size_t L = w.pw_W.size();
  for (std::size_t l = L; l-- > 0;) {
    gemm_tn(dP, tr.act[l], g.pw_W[l]);
    for (int j = 0; j < dP.cols; ++j) {
      T s{};
      for (int i = 0; i < m; ++i) s += dP(i, j);
      g.pw_b[l](0, j) = s;
    }
    if (l == 0) {
      if (!cfg.use_edgeconv) break;
      Mat<T> dE(m, cfg.edge_width);
      gemm_nn(dP, w.pw_W[0], dE);

      // Max over neighbors, then ReLU, then the shared edge linear.
      const int k = cfg.k_neighbors;
      const int d0 = tr.X0.cols;
      Mat<T> dpre(m * k, cfg.edge_width);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < cfg.edge_width; ++c) {
          const int t = tr.edge_argmax[static_cast<std::size_t>(i) * cfg.edge_width + c];
          if (tr.edge_pre(i * k + t, c) > T(0)) dpre(i * k + t, c) = dE(i, c);
        }
      Mat<T> edges(m * k, 2 * d0);
      for (int i = 0; i < m; ++i) {
        const T* xi = tr.X0.row(i);
        for (int t = 0; t < k; ++t) {
          T* e = edges.row(i * k + t);
          const T* xj = tr.X0.row(tr.knn[static_cast<std::size_t>(i) * k + t]);
          for (int c = 0; c < d0; ++c) {
            e[c] = xi[c];
            e[d0 + c] = xj[c] - xi[c];
          }
        }
      }
      gemm_tn(dpre, edges, g.edge_W);
      for (int j = 0; j < cfg.edge_width; ++j) {
        T s{};
        for (int r = 0; r < dpre.rows; ++r) s += dpre(r, j);
        g.edge_b(0, j) = s;
      }
      break;
    }
    Mat<T> dA(m, static_cast<int>(tr.act[l].cols));
    gemm_nn(dP, w.pw_W[l], dA);
    dP = Mat<T>(m, dA.cols);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < dA.cols; ++j)
        dP(i, j) = tr.pre[l - 1](i, j) > T(0) ? dA(i, j) : T(0);
  }
  return g;
}

}  // namespace pcfpr
