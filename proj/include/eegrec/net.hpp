// include/eegrec/net.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <vector>

#include "eegrec/alphabet.hpp"
#include "eegrec/ctc.hpp"
#include "eegrec/errors.hpp"
#include "eegrec/io.hpp"
#include "eegrec/util.hpp"

namespace eegrec {
namespace net {

// ---------------------------------------------------------------------------
// Architecture configuration
// ---------------------------------------------------------------------------

struct NetConfig {
  int input_dim = 20;
  int hidden1 = 128;
  int hidden2 = 64;
  int filters = 32;        // causal conv output channels
  int kernel = 3;          // causal conv taps (left context = kernel - 1)
  int classes = 29;        // alphabet symbols + blank
  bool residual = false;   // add a learned 1x1 shortcut around the conv block
  double dropout = 0.1;    // applied after each GRU layer during training

  void validate() const {
    require_param(input_dim > 0 && hidden1 > 0 && hidden2 > 0, "net: dims must be positive");
    require_param(filters > 0 && kernel > 0, "net: conv shape must be positive");
    require_param(classes > 1, "net: need at least two classes");
    require_param(dropout >= 0.0 && dropout < 1.0, "net: dropout must be in [0, 1)");
  }
};

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct GruLayerParams {
  Eigen::MatrixXd w_z, w_r, w_c;  // hidden x input
  Eigen::MatrixXd u_z, u_r, u_c;  // hidden x hidden
  Eigen::VectorXd b_z, b_r, b_c;  // hidden

  int input_dim() const { return static_cast<int>(w_z.cols()); }
  int hidden_dim() const { return static_cast<int>(w_z.rows()); }

  void setZero() {
    w_z.setZero(); w_r.setZero(); w_c.setZero();
    u_z.setZero(); u_r.setZero(); u_c.setZero();
    b_z.setZero(); b_r.setZero(); b_c.setZero();
  }
};

// Named view of one parameter tensor; `data` aliases the owning matrix.
struct TensorRef {
  std::string name;
  double* data;
  Eigen::Index size;
  std::vector<Eigen::Index> dims;
};

struct ModelParams {
  NetConfig config;
  GruLayerParams gru1, gru2;
  std::vector<Eigen::MatrixXd> conv_w;  // kernel taps, each filters x hidden2
  Eigen::VectorXd conv_b;               // filters
  Eigen::MatrixXd res_w;                // filters x hidden2 (only when residual)
  Eigen::MatrixXd dense_w;              // classes x filters
  Eigen::VectorXd dense_b;              // classes

  static ModelParams zeros(const NetConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    auto gru = [](GruLayerParams& g, int in, int hidden) {
      g.w_z = Eigen::MatrixXd::Zero(hidden, in);
      g.w_r = g.w_z; g.w_c = g.w_z;
      g.u_z = Eigen::MatrixXd::Zero(hidden, hidden);
      g.u_r = g.u_z; g.u_c = g.u_z;
      g.b_z = Eigen::VectorXd::Zero(hidden);
      g.b_r = g.b_z; g.b_c = g.b_z;
    };
    gru(p.gru1, cfg.input_dim, cfg.hidden1);
    gru(p.gru2, cfg.hidden1, cfg.hidden2);
    p.conv_w.assign(static_cast<std::size_t>(cfg.kernel),
                    Eigen::MatrixXd::Zero(cfg.filters, cfg.hidden2));
    p.conv_b = Eigen::VectorXd::Zero(cfg.filters);
    if (cfg.residual) p.res_w = Eigen::MatrixXd::Zero(cfg.filters, cfg.hidden2);
    p.dense_w = Eigen::MatrixXd::Zero(cfg.classes, cfg.filters);
    p.dense_b = Eigen::VectorXd::Zero(cfg.classes);
    return p;
  }

  // Recurrent weights start orthogonal, input-side weights uniform in
  // +-1/sqrt(fan_in), biases zero.
  static ModelParams init(const NetConfig& cfg, std::uint64_t seed) {
    ModelParams p = zeros(cfg);
    Rng rng(mix_seed(seed, 0x696e6974 /* "init" */));
    auto uniform_fill = [&](Eigen::MatrixXd& m, int fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = rng.uniform(-bound, bound);
    };
    auto orthogonal_fill = [&](Eigen::MatrixXd& m) {
      const Eigen::Index n = m.rows();
      Eigen::MatrixXd a(n, n);
      for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      Eigen::MatrixXd q = qr.householderQ();
      const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (Eigen::Index i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
      m = q;
    };
    auto init_gru = [&](GruLayerParams& g) {
      uniform_fill(g.w_z, g.input_dim());
      uniform_fill(g.w_r, g.input_dim());
      uniform_fill(g.w_c, g.input_dim());
      orthogonal_fill(g.u_z);
      orthogonal_fill(g.u_r);
      orthogonal_fill(g.u_c);
    };
    init_gru(p.gru1);
    init_gru(p.gru2);
    for (auto& w : p.conv_w) uniform_fill(w, cfg.hidden2 * cfg.kernel);
    if (cfg.residual) uniform_fill(p.res_w, cfg.hidden2);
    uniform_fill(p.dense_w, cfg.filters);
    return p;
  }

  // Flat enumeration of every tensor; order is the serialization order.
  std::vector<TensorRef> tensors() {
    std::vector<TensorRef> out;
    auto add_m = [&](const std::string& name, Eigen::MatrixXd& m) {
      out.push_back({name, m.data(), m.size(), {m.rows(), m.cols()}});
    };
    auto add_v = [&](const std::string& name, Eigen::VectorXd& v) {
      out.push_back({name, v.data(), v.size(), {v.size()}});
    };
    auto add_gru = [&](const std::string& prefix, GruLayerParams& g) {
      add_m(prefix + ".w_z", g.w_z); add_m(prefix + ".w_r", g.w_r); add_m(prefix + ".w_c", g.w_c);
      add_m(prefix + ".u_z", g.u_z); add_m(prefix + ".u_r", g.u_r); add_m(prefix + ".u_c", g.u_c);
      add_v(prefix + ".b_z", g.b_z); add_v(prefix + ".b_r", g.b_r); add_v(prefix + ".b_c", g.b_c);
    };
    add_gru("gru1", gru1);
    add_gru("gru2", gru2);
    for (std::size_t k = 0; k < conv_w.size(); ++k)
      add_m("conv.w" + std::to_string(k), conv_w[k]);
    add_v("conv.b", conv_b);
    if (config.residual) add_m("conv.res_w", res_w);
    add_m("dense.w", dense_w);
    add_v("dense.b", dense_b);
    return out;
  }

  std::vector<TensorRef> tensors() const {
    return const_cast<ModelParams*>(this)->tensors();
  }

  void setZero() {
    for (auto& t : tensors()) std::fill(t.data, t.data + t.size, 0.0);
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& t : tensors()) n += t.size;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

namespace detail {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace detail

// One GRU update: update/reset gates with sigmoid, candidate with tanh on the
// reset-gated state, convex blend h = (1 - z) * h_prev + z * h_cand.
inline Eigen::VectorXd gru_step(const GruLayerParams& g, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& h_prev) {
  require_param(x.size() == g.input_dim(), "gru_step: input size mismatch");
  require_param(h_prev.size() == g.hidden_dim(), "gru_step: state size mismatch");
  const Eigen::VectorXd z =
      (g.w_z * x + g.u_z * h_prev + g.b_z).unaryExpr([](double v) { return detail::sigmoid(v); });
  const Eigen::VectorXd r =
      (g.w_r * x + g.u_r * h_prev + g.b_r).unaryExpr([](double v) { return detail::sigmoid(v); });
  const Eigen::VectorXd c =
      (g.w_c * x + g.u_c * (r.cwiseProduct(h_prev)) + g.b_c).array().tanh();
  return (1.0 - z.array()) * h_prev.array() + z.array() * c.array();
}

// Per-example activations retained for backpropagation. All matrices are
// time-major (T rows).
struct ForwardTrace {
  Eigen::MatrixXd x;                      // input features
  Eigen::MatrixXd z1, r1, c1, h1, rh1;    // layer-1 gates, state, r*h_prev
  Eigen::MatrixXd d1;                     // layer-1 output after dropout
  Eigen::MatrixXd mask1;                  // inverted dropout mask (train only)
  Eigen::MatrixXd z2, r2, c2, h2, rh2;
  Eigen::MatrixXd d2;
  Eigen::MatrixXd mask2;
  Eigen::MatrixXd pre;                    // conv pre-activation (bias included)
  Eigen::MatrixXd y;                      // conv output after relu
  Eigen::MatrixXd lattice;                // log-softmax over classes
};

namespace detail {

// Runs one GRU layer over the sequence. Input-side projections are batched
// into three GEMMs; the recurrence runs step by step.
inline void gru_forward(const GruLayerParams& g, const Eigen::MatrixXd& x,
                        Eigen::MatrixXd& z_out, Eigen::MatrixXd& r_out,
                        Eigen::MatrixXd& c_out, Eigen::MatrixXd& h_out,
                        Eigen::MatrixXd& rh_out) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index hidden = g.hidden_dim();
  const Eigen::MatrixXd xz = x * g.w_z.transpose();
  const Eigen::MatrixXd xr = x * g.w_r.transpose();
  const Eigen::MatrixXd xc = x * g.w_c.transpose();
  z_out.resize(t_len, hidden); r_out.resize(t_len, hidden);
  c_out.resize(t_len, hidden); h_out.resize(t_len, hidden);
  rh_out.resize(t_len, hidden);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::VectorXd z =
        (xz.row(t).transpose() + g.u_z * h + g.b_z).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd r =
        (xr.row(t).transpose() + g.u_r * h + g.b_r).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd rh = r.cwiseProduct(h);
    const Eigen::VectorXd c = (xc.row(t).transpose() + g.u_c * rh + g.b_c).array().tanh();
    const Eigen::VectorXd h_new =
        ((1.0 - z.array()) * h.array() + z.array() * c.array()).matrix();
    z_out.row(t) = z.transpose();
    r_out.row(t) = r.transpose();
    c_out.row(t) = c.transpose();
    rh_out.row(t) = rh.transpose();
    h_out.row(t) = h_new.transpose();
    h = h_new;
  }
}

// Inverted dropout: kept units are scaled by 1/(1-p) so evaluation needs no
// rescaling. Mask draws are ordered row-major over (frame, unit).
inline void dropout_forward(const Eigen::MatrixXd& in, double p, Rng& rng,
                            Eigen::MatrixXd& out, Eigen::MatrixXd& mask) {
  mask.resize(in.rows(), in.cols());
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index t = 0; t < in.rows(); ++t)
    for (Eigen::Index j = 0; j < in.cols(); ++j)
      mask(t, j) = rng.uniform01() < p ? 0.0 : scale;
  out = in.cwiseProduct(mask);
}

}  // namespace detail

// Full forward pass. In training mode the dropout masks are drawn from
// `dropout_seed` and kept in the trace; in evaluation mode dropout is the
// identity and the mask matrices stay empty.
inline Eigen::MatrixXd model_forward(const ModelParams& p, const Eigen::MatrixXd& feats,
                                     bool train_mode, std::uint64_t dropout_seed,
                                     ForwardTrace* trace_out = nullptr) {
  const NetConfig& cfg = p.config;
  require_param(feats.rows() > 0, "model_forward: empty input sequence");
  require_param(static_cast<int>(feats.cols()) == cfg.input_dim,
                "model_forward: expected " + std::to_string(cfg.input_dim) +
                    "-dim features, got " + std::to_string(feats.cols()));
  const Eigen::Index t_len = feats.rows();

  ForwardTrace local;
  ForwardTrace& tr = trace_out ? *trace_out : local;
  tr.x = feats;

  detail::gru_forward(p.gru1, tr.x, tr.z1, tr.r1, tr.c1, tr.h1, tr.rh1);
  Rng drop_rng(mix_seed(dropout_seed, 0x64726f70 /* "drop" */));
  if (train_mode && cfg.dropout > 0.0) {
    detail::dropout_forward(tr.h1, cfg.dropout, drop_rng, tr.d1, tr.mask1);
  } else {
    tr.d1 = tr.h1;
    tr.mask1.resize(0, 0);
  }

  detail::gru_forward(p.gru2, tr.d1, tr.z2, tr.r2, tr.c2, tr.h2, tr.rh2);
  if (train_mode && cfg.dropout > 0.0) {
    detail::dropout_forward(tr.h2, cfg.dropout, drop_rng, tr.d2, tr.mask2);
  } else {
    tr.d2 = tr.h2;
    tr.mask2.resize(0, 0);
  }

  // Causal convolution: tap k sees frame t - (kernel - 1) + k, frames before
  // the sequence start are zero.
  tr.pre = Eigen::MatrixXd::Zero(t_len, cfg.filters);
  tr.pre.rowwise() += p.conv_b.transpose();
  for (int k = 0; k < cfg.kernel; ++k) {
    const Eigen::Index offset = k - (cfg.kernel - 1);  // <= 0
    const Eigen::Index rows = t_len + offset;
    if (rows <= 0) continue;
    tr.pre.block(-offset, 0, rows, cfg.filters) +=
        tr.d2.block(0, 0, rows, cfg.hidden2) * p.conv_w[static_cast<std::size_t>(k)].transpose();
  }
  if (cfg.residual) tr.pre += tr.d2 * p.res_w.transpose();
  tr.y = tr.pre.cwiseMax(0.0);

  Eigen::MatrixXd logits = tr.y * p.dense_w.transpose();
  logits.rowwise() += p.dense_b.transpose();
  tr.lattice.resize(t_len, cfg.classes);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const double mx = logits.row(t).maxCoeff();
    const double lse = mx + std::log((logits.row(t).array() - mx).exp().sum());
    tr.lattice.row(t) = logits.row(t).array() - lse;
  }
  return tr.lattice;
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

namespace detail {

// Backpropagates one GRU layer. `d_out` carries dLoss/dh_t from the consumer;
// returns dLoss/dx and accumulates parameter gradients.
inline Eigen::MatrixXd gru_backward(const GruLayerParams& g, GruLayerParams& grad,
                                    const Eigen::MatrixXd& x, const Eigen::MatrixXd& z,
                                    const Eigen::MatrixXd& r, const Eigen::MatrixXd& c,
                                    const Eigen::MatrixXd& h, const Eigen::MatrixXd& rh,
                                    const Eigen::MatrixXd& d_out) {
  const Eigen::Index t_len = x.rows();
  const Eigen::Index hidden = g.hidden_dim();
  Eigen::MatrixXd da_z(t_len, hidden), da_r(t_len, hidden), da_c(t_len, hidden);
  Eigen::VectorXd carry = Eigen::VectorXd::Zero(hidden);
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const Eigen::ArrayXd zt = z.row(t).transpose().array();
    const Eigen::ArrayXd rt = r.row(t).transpose().array();
    const Eigen::ArrayXd ct = c.row(t).transpose().array();
    const Eigen::ArrayXd h_prev = t > 0 ? Eigen::ArrayXd(h.row(t - 1).transpose().array())
                                        : Eigen::ArrayXd(Eigen::ArrayXd::Zero(hidden));
    const Eigen::ArrayXd dh = d_out.row(t).transpose().array() + carry.array();

    const Eigen::ArrayXd dz = dh * (ct - h_prev);
    const Eigen::ArrayXd dc = dh * zt;
    Eigen::ArrayXd dh_prev = dh * (1.0 - zt);

    const Eigen::ArrayXd dac = dc * (1.0 - ct.square());
    const Eigen::VectorXd drh = g.u_c.transpose() * dac.matrix();
    const Eigen::ArrayXd dr = drh.array() * h_prev;
    dh_prev += drh.array() * rt;
    const Eigen::ArrayXd dar = dr * rt * (1.0 - rt);
    const Eigen::ArrayXd daz = dz * zt * (1.0 - zt);

    dh_prev += (g.u_z.transpose() * daz.matrix()).array();
    dh_prev += (g.u_r.transpose() * dar.matrix()).array();

    da_z.row(t) = daz.transpose();
    da_r.row(t) = dar.transpose();
    da_c.row(t) = dac.transpose();
    carry = dh_prev.matrix();
  }

  // Previous-state matrix: h shifted down one row with a zero first row.
  Eigen::MatrixXd h_prev_rows = Eigen::MatrixXd::Zero(t_len, hidden);
  if (t_len > 1) h_prev_rows.block(1, 0, t_len - 1, hidden) = h.block(0, 0, t_len - 1, hidden);

  grad.w_z += da_z.transpose() * x;
  grad.w_r += da_r.transpose() * x;
  grad.w_c += da_c.transpose() * x;
  grad.u_z += da_z.transpose() * h_prev_rows;
  grad.u_r += da_r.transpose() * h_prev_rows;
  grad.u_c += da_c.transpose() * rh;
  grad.b_z += da_z.colwise().sum().transpose();
  grad.b_r += da_r.colwise().sum().transpose();
  grad.b_c += da_c.colwise().sum().transpose();
  return da_z * g.w_z + da_r * g.w_r + da_c * g.w_c;
}

}  // namespace detail

// Backpropagation from dLoss/dlogits (T x classes) through the whole model;
// gradients are accumulated (+=) into `grads`, which must share shapes with
// `p` (use ModelParams::zeros to start).
inline void model_backward(const ModelParams& p, const ForwardTrace& tr,
                           const Eigen::MatrixXd& dlogits, ModelParams& grads) {
  const NetConfig& cfg = p.config;
  const Eigen::Index t_len = tr.x.rows();
  require_param(dlogits.rows() == t_len && static_cast<int>(dlogits.cols()) == cfg.classes,
                "model_backward: gradient shape mismatch");

  grads.dense_w += dlogits.transpose() * tr.y;
  grads.dense_b += dlogits.colwise().sum().transpose();
  Eigen::MatrixXd dy = dlogits * p.dense_w;

  // ReLU gate, then conv taps as shifted GEMMs.
  const Eigen::MatrixXd dpre =
      (tr.pre.array() > 0.0).cast<double>().matrix().cwiseProduct(dy);
  grads.conv_b += dpre.colwise().sum().transpose();
  Eigen::MatrixXd dd2 = Eigen::MatrixXd::Zero(t_len, cfg.hidden2);
  for (int k = 0; k < cfg.kernel; ++k) {
    const Eigen::Index offset = k - (cfg.kernel - 1);
    const Eigen::Index rows = t_len + offset;
    if (rows <= 0) continue;
    grads.conv_w[static_cast<std::size_t>(k)] +=
        dpre.block(-offset, 0, rows, cfg.filters).transpose() *
        tr.d2.block(0, 0, rows, cfg.hidden2);
    dd2.block(0, 0, rows, cfg.hidden2) +=
        dpre.block(-offset, 0, rows, cfg.filters) * p.conv_w[static_cast<std::size_t>(k)];
  }
  if (cfg.residual) {
    grads.res_w += dpre.transpose() * tr.d2;
    dd2 += dpre * p.res_w;
  }

  Eigen::MatrixXd dh2 = tr.mask2.size() > 0 ? dd2.cwiseProduct(tr.mask2) : dd2;
  Eigen::MatrixXd dd1 =
      detail::gru_backward(p.gru2, grads.gru2, tr.d1, tr.z2, tr.r2, tr.c2, tr.h2, tr.rh2, dh2);

  Eigen::MatrixXd dh1 = tr.mask1.size() > 0 ? dd1.cwiseProduct(tr.mask1) : dd1;
  detail::gru_backward(p.gru1, grads.gru1, tr.x, tr.z1, tr.r1, tr.c1, tr.h1, tr.rh1, dh1);
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over a flat parameter block.
inline void adam_update(double* theta, const double* grad, double* m, double* v,
                        Eigen::Index n, long long t, const AdamConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    theta[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

struct AdamState {
  ModelParams m, v;
  long long step = 0;

  explicit AdamState(const NetConfig& cfg)
      : m(ModelParams::zeros(cfg)), v(ModelParams::zeros(cfg)) {}
};

inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
                      const AdamConfig& cfg) {
  ++state.step;
  auto pt = params.tensors();
  const auto gt = grads.tensors();
  auto mt = state.m.tensors();
  auto vt = state.v.tensors();
  require_param(pt.size() == gt.size(), "adam_step: tensor layout mismatch");
  for (std::size_t i = 0; i < pt.size(); ++i) {
    for (Eigen::Index j = 0; j < gt[i].size; ++j)
      if (!std::isfinite(gt[i].data[j]))
        throw TrainingError("adam_step: non-finite gradient in " + gt[i].name);
    adam_update(pt[i].data, gt[i].data, mt[i].data, vt[i].data, pt[i].size, state.step, cfg);
  }
}

// Global-norm gradient clipping; returns the pre-clip norm.
inline double clip_gradients(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  auto ts = grads.tensors();
  for (const auto& t : ts)
    for (Eigen::Index i = 0; i < t.size; ++i) sq += t.data[i] * t.data[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& t : ts)
      for (Eigen::Index i = 0; i < t.size; ++i) t.data[i] *= scale;
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
  int epochs = 130;
  int batch_size = 32;
  AdamConfig adam;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  bool verbose = true;  // per-epoch progress on stderr
};

struct TrainExample {
  Eigen::MatrixXd feats;  // T x input_dim
  std::string transcript;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_curve;  // mean per-example CTC loss per epoch
  int skipped = 0;                 // examples dropped as CTC-infeasible
};

// Trains the CTC model. Batches are length-bucketed: shuffle, stable-sort by
// frame count, chunk, then shuffle batch order. Per-example gradients are
// summed in batch order so results do not depend on thread count.
inline TrainResult train(const std::vector<TrainExample>& dataset, const Alphabet& alphabet,
                         const NetConfig& net_cfg, const TrainConfig& cfg,
                         int num_threads = 1) {
  require_param(cfg.epochs > 0 && cfg.batch_size > 0, "train: epochs and batch size must be positive");
  require_param(net_cfg.classes == alphabet.num_classes(),
                "train: net class count must match alphabet");
  require_param(!dataset.empty(), "train: empty dataset");

  // Encode labels and drop infeasible examples up front.
  struct Item {
    const TrainExample* ex;
    std::vector<int> label;
    std::size_t dataset_index;
  };
  std::vector<Item> items;
  int skipped = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    std::vector<int> label = alphabet.encode(dataset[i].transcript);
    const int need = ctc::min_frames_for_label(label);
    if (dataset[i].feats.rows() < need) {
      std::cerr << "train: skipping example " << i << " (needs " << need << " frames, has "
                << dataset[i].feats.rows() << ")\n";
      ++skipped;
      continue;
    }
    items.push_back({&dataset[i], std::move(label), i});
  }
  if (items.empty()) throw TrainingError("train: no feasible examples");

  TrainResult result;
  result.params = ModelParams::init(net_cfg, cfg.seed);
  result.skipped = skipped;
  AdamState adam(net_cfg);
  Rng order_rng(mix_seed(cfg.seed, 0x6f726465 /* "orde" */));

  const int blank = alphabet.blank();
  long long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Length bucketing keeps batch members similar in length without fixing
    // the composition across epochs.
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return items[a].ex->feats.rows() < items[b].ex->feats.rows();
    });
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), i + static_cast<std::size_t>(cfg.batch_size));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    order_rng.shuffle(batches);

    double epoch_loss = 0.0;
    std::size_t epoch_count = 0;
    for (const auto& batch : batches) {
      ++step;
      const double inv_n = 1.0 / static_cast<double>(batch.size());
      // Forward/backward per example; gradient buffers are per-slot so worker
      // threads never share accumulators, and the final sum runs in batch
      // order regardless of thread count.
      std::vector<ModelParams> grad_slots;
      std::vector<double> losses(batch.size(), 0.0);
      grad_slots.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i)
        grad_slots.push_back(ModelParams::zeros(net_cfg));
      std::exception_ptr failure;
      std::mutex failure_mutex;
      parallel_for(batch.size(), num_threads, [&](std::size_t i) {
        try {
          const Item& item = items[batch[i]];
          ForwardTrace trace;
          const std::uint64_t drop_seed =
              mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), item.dataset_index);
          const Eigen::MatrixXd lattice =
              model_forward(result.params, item.ex->feats, true, drop_seed, &trace);
          ctc::CtcResult ctc_out = ctc::ctc_loss(lattice, item.label, blank);
          losses[i] = ctc_out.loss;
          model_backward(result.params, trace, ctc_out.grad_logits * inv_n, grad_slots[i]);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
      if (failure) std::rethrow_exception(failure);

      ModelParams& grads = grad_slots[0];
      auto dst = grads.tensors();
      for (std::size_t i = 1; i < grad_slots.size(); ++i) {
        const auto src = grad_slots[i].tensors();
        for (std::size_t t = 0; t < dst.size(); ++t)
          for (Eigen::Index j = 0; j < dst[t].size; ++j) dst[t].data[j] += src[t].data[j];
      }
      for (double l : losses) epoch_loss += l;
      epoch_count += batch.size();

      const double norm = clip_gradients(grads, cfg.clip_norm);
      if (norm > cfg.clip_norm && cfg.verbose)
        std::cerr << "train: step " << step << " gradient norm " << norm << " clipped to "
                  << cfg.clip_norm << "\n";
      adam_step(result.params, grads, adam, cfg.adam);
    }

    const double mean_loss = epoch_loss / static_cast<double>(epoch_count);
    if (!std::isfinite(mean_loss))
      throw TrainingError("train: loss diverged at epoch " + std::to_string(epoch + 1));
    result.loss_curve.push_back(mean_loss);
    if (cfg.verbose)
      std::cerr << "train: epoch " << (epoch + 1) << "/" << cfg.epochs << " mean_loss "
                << mean_loss << "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O
// ---------------------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const ModelParams& params,
                            const Alphabet& alphabet, const TrainConfig& train_cfg) {
  BinWriter w(path);
  w.magic("EEGC", 1);
  w.str(alphabet.symbols());
  const NetConfig& c = params.config;
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.hidden1));
  w.u32(static_cast<std::uint32_t>(c.hidden2));
  w.u32(static_cast<std::uint32_t>(c.filters));
  w.u32(static_cast<std::uint32_t>(c.kernel));
  w.u32(static_cast<std::uint32_t>(c.classes));
  w.u32(c.residual ? 1 : 0);
  w.f64(c.dropout);
  w.u32(static_cast<std::uint32_t>(train_cfg.epochs));
  w.u32(static_cast<std::uint32_t>(train_cfg.batch_size));
  w.f64(train_cfg.adam.lr);
  w.f64(train_cfg.adam.beta1);
  w.f64(train_cfg.adam.beta2);
  w.f64(train_cfg.adam.eps);
  w.f64(train_cfg.clip_norm);
  w.u64(train_cfg.seed);
  const auto ts = params.tensors();
  w.u32(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u64(static_cast<std::uint64_t>(d));
    w.f64_array(t.data, static_cast<std::size_t>(t.size));
  }
  w.close();
}

struct Checkpoint {
  ModelParams params;
  Alphabet alphabet;
  TrainConfig train_cfg;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  BinReader r(path);
  r.expect_magic("EEGC", 1, "model checkpoint");
  const std::string symbols = r.str();
  NetConfig c;
  c.input_dim = static_cast<int>(r.u32());
  c.hidden1 = static_cast<int>(r.u32());
  c.hidden2 = static_cast<int>(r.u32());
  c.filters = static_cast<int>(r.u32());
  c.kernel = static_cast<int>(r.u32());
  c.classes = static_cast<int>(r.u32());
  c.residual = r.u32() != 0;
  c.dropout = r.f64();
  TrainConfig tc;
  tc.epochs = static_cast<int>(r.u32());
  tc.batch_size = static_cast<int>(r.u32());
  tc.adam.lr = r.f64();
  tc.adam.beta1 = r.f64();
  tc.adam.beta2 = r.f64();
  tc.adam.eps = r.f64();
  tc.clip_norm = r.f64();
  tc.seed = r.u64();

  Checkpoint out{ModelParams::zeros(c), Alphabet(symbols), tc};
  require_data(out.alphabet.num_classes() == c.classes,
               "model checkpoint: alphabet does not match class count");
  const std::uint32_t count = r.u32();
  auto ts = out.params.tensors();
  require_data(count == ts.size(), "model checkpoint: unexpected tensor count");
  for (auto& t : ts) {
    const std::string name = r.str();
    require_data(name == t.name, "model checkpoint: expected tensor " + t.name + ", found " + name);
    const std::uint32_t rank = r.u32();
    require_data(rank == t.dims.size(), "model checkpoint: rank mismatch for " + t.name);
    for (auto d : t.dims)
      require_data(r.u64() == static_cast<std::uint64_t>(d),
                   "model checkpoint: shape mismatch for " + t.name);
    r.f64_array(t.data, static_cast<std::size_t>(t.size));
  }
  return out;
}

}  // namespace net
}  // namespace eegrec
