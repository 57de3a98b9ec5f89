// include/eegrec/kpca.hpp

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
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eegrec/errors.hpp"
#include "eegrec/io.hpp"

namespace eegrec::kpca {

struct KpcaConfig {
  int components = 20;
  int degree = 3;
  double gamma = 0.0;  // <= 0 selects 1/dim at fit time
  double offset = 1.0;
  // Per-dimension zero-mean/unit-variance scaling from the fit pool. The
  // raw feature dimensions mix microvolt RMS values with rates in [0,1],
  // so this is on by default; switch off for a scale-faithful kernel.
  bool standardize = true;
};

// (gamma * <x,y> + offset)^degree
inline double poly_kernel(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                          double gamma = 0.0, double offset = 1.0, int degree = 3) {
  require_param(x.size() == y.size(),
                "poly_kernel: dimension mismatch " + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()));
  require_param(x.size() > 0, "poly_kernel: empty vectors");
  const double g = gamma > 0.0 ? gamma : 1.0 / static_cast<double>(x.size());
  return std::pow(g * x.dot(y) + offset, degree);
}

inline constexpr char kKpcaMagic[4] = {'K', 'P', 'C', 'A'};
inline constexpr uint32_t kKpcaVersion = 1;

// Fitted kernel-PCA state: the (standardized) training pool, eigenpairs of
// the double-centered kernel matrix, and the kernel-row statistics needed
// to center unseen points.
class KpcaProjector {
 public:
  // X: n x d training pool (rows are points). Throws ParameterError when
  // n < components, DataError when fewer than `components` eigenvalues sit
  // above the 1e-10 * lambda_max floor (reports the usable rank).
  static KpcaProjector fit(const Eigen::MatrixXd& x, const KpcaConfig& cfg = {}) {
    require_param(cfg.components >= 1, "kpca fit: components must be >= 1");
    require_param(cfg.degree >= 1, "kpca fit: degree must be >= 1");
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    require_param(n >= cfg.components,
                  "kpca fit: need at least " + std::to_string(cfg.components) +
                      " rows, got " + std::to_string(n));
    require_data(x.allFinite(), "kpca fit: non-finite entries in training pool");

    KpcaProjector p;
    p.cfg_ = cfg;
    p.cfg_.gamma = cfg.gamma > 0.0 ? cfg.gamma : 1.0 / static_cast<double>(d);
    p.pool_raw_ = x;

    p.feat_mean_ = Eigen::VectorXd::Zero(d);
    p.feat_scale_ = Eigen::VectorXd::Ones(d);
    if (cfg.standardize) {
      p.feat_mean_ = x.colwise().mean();
      for (Eigen::Index j = 0; j < d; ++j) {
        const double var =
            (x.col(j).array() - p.feat_mean_[j]).square().sum() / static_cast<double>(n);
        p.feat_scale_[j] = var > 1e-24 ? std::sqrt(var) : 1.0;
      }
    }
    p.pool_ = p.standardized(x);

    Eigen::MatrixXd k = p.kernel_matrix(p.pool_, p.pool_);
    p.row_means_ = k.rowwise().mean();
    p.grand_mean_ = p.row_means_.mean();

    // Double centering: Kc(i,j) = K(i,j) - r_i - r_j + grand.
    Eigen::MatrixXd kc = k;
    kc.colwise() -= p.row_means_;
    kc.rowwise() -= p.row_means_.transpose();
    kc.array() += p.grand_mean_;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kc);
    require_data(es.info() == Eigen::Success, "kpca fit: eigendecomposition failed");

    // Eigen returns ascending order; flip to non-increasing.
    p.eigenvalues_ = es.eigenvalues().reverse();
    Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();

    const double lmax = p.eigenvalues_[0];
    const double floor = 1e-10 * std::max(lmax, 0.0);
    int usable = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (p.eigenvalues_[i] > floor && p.eigenvalues_[i] > 0.0) ++usable;
    if (usable < cfg.components)
      throw DataError("kpca fit: degenerate spectrum, usable rank " +
                      std::to_string(usable) + " < requested " +
                      std::to_string(cfg.components) + " components");

    p.alphas_.resize(n, cfg.components);
    for (int i = 0; i < cfg.components; ++i) {
      Eigen::VectorXd a = vecs.col(i) / std::sqrt(p.eigenvalues_[i]);
      // Deterministic sign: largest-magnitude coefficient positive.
      Eigen::Index imax = 0;
      a.cwiseAbs().maxCoeff(&imax);
      if (a[imax] < 0.0) a = -a;
      p.alphas_.col(i) = a;
    }
    p.train_proj_ = kc * p.alphas_;
    return p;
  }

  int components() const { return cfg_.components; }
  Eigen::Index dim() const { return pool_.cols(); }
  Eigen::Index pool_size() const { return pool_.rows(); }
  const KpcaConfig& config() const { return cfg_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& coefficients() const { return alphas_; }
  const Eigen::MatrixXd& training_projection() const { return train_proj_; }

  Eigen::VectorXd transform(const Eigen::VectorXd& x) const {
    require_param(x.size() == pool_.cols(),
                  "kpca transform: dimension mismatch " + std::to_string(x.size()) +
                      " vs " + std::to_string(pool_.cols()));
    Eigen::MatrixXd row(1, x.size());
    row.row(0) = x.transpose();
    return transform_matrix(row).row(0).transpose();
  }

  // Batch projection of T points (rows).
  Eigen::MatrixXd transform_matrix(const Eigen::MatrixXd& x) const {
    require_param(x.cols() == pool_.cols(), "kpca transform: dimension mismatch");
    const Eigen::MatrixXd xs = standardized(x);
    Eigen::MatrixXd k = kernel_matrix(xs, pool_);  // T x n
    const Eigen::VectorXd test_means = k.rowwise().mean();
    k.colwise() -= test_means;
    k.rowwise() -= row_means_.transpose();
    k.array() += grand_mean_;
    return k * alphas_;
  }

  // Cumulative explained-variance ratios over the full spectrum
  // (1-based component index; negative roundoff eigenvalues clamp to 0).
  std::vector<std::pair<int, double>> explained_variance_curve() const {
    const Eigen::Index n = eigenvalues_.size();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += std::max(eigenvalues_[i], 0.0);
    std::vector<std::pair<int, double>> curve;
    curve.reserve(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += std::max(eigenvalues_[i], 0.0);
      curve.emplace_back(static_cast<int>(i) + 1, acc / total);
    }
    return curve;
  }

  // ---- checkpoint (magic KPCA, version 1) ----
  // gamma, offset, degree, standardization vectors, raw training pool,
  // eigenvalues, coefficient matrix. Kernel-row means and training
  // projections are recomputed on load.

  void save(const std::filesystem::path& path) const {
    BinWriter w(path);
    w.magic(kKpcaMagic, kKpcaVersion);
    w.f64(cfg_.gamma);
    w.f64(cfg_.offset);
    w.u32(static_cast<uint32_t>(cfg_.degree));
    w.u32(cfg_.standardize ? 1 : 0);
    const auto n = static_cast<uint32_t>(pool_raw_.rows());
    const auto d = static_cast<uint32_t>(pool_raw_.cols());
    w.u32(d);
    for (uint32_t j = 0; j < d; ++j) w.f64(feat_mean_[j]);
    for (uint32_t j = 0; j < d; ++j) w.f64(feat_scale_[j]);
    w.u32(n);
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < d; ++j) w.f64(pool_raw_(i, j));
    for (uint32_t i = 0; i < n; ++i) w.f64(eigenvalues_[i]);
    const auto m = static_cast<uint32_t>(alphas_.cols());
    w.u32(m);
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < m; ++j) w.f64(alphas_(i, j));
    w.close();
  }

  static KpcaProjector load(const std::filesystem::path& path) {
    BinReader r(path);
    r.expect_magic(kKpcaMagic, kKpcaVersion, "kpca projector");
    KpcaProjector p;
    p.cfg_.gamma = r.f64();
    p.cfg_.offset = r.f64();
    p.cfg_.degree = static_cast<int>(r.u32());
    p.cfg_.standardize = r.u32() != 0;
    const uint32_t d = r.u32();
    p.feat_mean_.resize(d);
    p.feat_scale_.resize(d);
    for (uint32_t j = 0; j < d; ++j) p.feat_mean_[j] = r.f64();
    for (uint32_t j = 0; j < d; ++j) p.feat_scale_[j] = r.f64();
    const uint32_t n = r.u32();
    p.pool_raw_.resize(n, d);
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < d; ++j) p.pool_raw_(i, j) = r.f64();
    p.eigenvalues_.resize(n);
    for (uint32_t i = 0; i < n; ++i) p.eigenvalues_[i] = r.f64();
    const uint32_t m = r.u32();
    require_data(m >= 1 && m <= n, path.string() + ": invalid component count");
    p.cfg_.components = static_cast<int>(m);
    p.alphas_.resize(n, m);
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < m; ++j) p.alphas_(i, j) = r.f64();

    p.pool_ = p.standardized(p.pool_raw_);
    const Eigen::MatrixXd k = p.kernel_matrix(p.pool_, p.pool_);
    p.row_means_ = k.rowwise().mean();
    p.grand_mean_ = p.row_means_.mean();
    Eigen::MatrixXd kc = k;
    kc.colwise() -= p.row_means_;
    kc.rowwise() -= p.row_means_.transpose();
    kc.array() += p.grand_mean_;
    p.train_proj_ = kc * p.alphas_;
    return p;
  }

 private:
  Eigen::MatrixXd standardized(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out = x;
    out.rowwise() -= feat_mean_.transpose();
    out.array().rowwise() /= feat_scale_.transpose().array();
    return out;
  }

  // Elementwise (gamma * A B^T + offset)^degree.
  Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd k = cfg_.gamma * (a * b.transpose());
    k.array() += cfg_.offset;
    if (cfg_.degree == 3) {
      k = k.array() * k.array() * k.array();
    } else {
      k = k.array().pow(cfg_.degree);
    }
    return k;
  }

  KpcaConfig cfg_;
  Eigen::MatrixXd pool_raw_;   // as passed to fit
  Eigen::MatrixXd pool_;       // standardized
  Eigen::VectorXd feat_mean_, feat_scale_;
  Eigen::VectorXd eigenvalues_;  // full spectrum, non-increasing
  Eigen::MatrixXd alphas_;       // n x m, lambda_i * |alpha_i|^2 = 1
  Eigen::VectorXd row_means_;    // uncentered kernel row means
  double grand_mean_ = 0.0;
  Eigen::MatrixXd train_proj_;  // n x m
};

}  // namespace eegrec::kpca
