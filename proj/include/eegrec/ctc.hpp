// include/eegrec/ctc.hpp

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
#include <limits>
#include <vector>

#include "eegrec/errors.hpp"
#include "eegrec/util.hpp"

namespace eegrec {
namespace ctc {

// Raised when a label cannot be emitted in the available number of frames.
class FeasibilityError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

// Shortest frame count that can emit the label: one frame per symbol plus a
// mandatory blank between each adjacent repeated pair.
inline int min_frames_for_label(const std::vector<int>& label) {
  int repeats = 0;
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++repeats;
  return static_cast<int>(label.size()) + repeats;
}

inline bool feasible(int num_frames, const std::vector<int>& label) {
  return num_frames >= min_frames_for_label(label);
}

struct CtcResult {
  double loss = 0.0;            // -log P(label | inputs)
  Eigen::MatrixXd grad_logits;  // T x C, d loss / d logits = softmax - gamma
  Eigen::MatrixXd posterior;    // T x C symbol posterior gamma (rows sum to 1)
};

namespace detail {

inline void check_label(const std::vector<int>& label, int num_classes, int blank) {
  for (int s : label) {
    if (s < 0 || s >= num_classes)
      throw ParameterError("ctc: label symbol index out of range");
    if (s == blank) throw ParameterError("ctc: label contains the blank symbol");
  }
}

}  // namespace detail

// CTC negative log-likelihood with gradient, computed by the log-space
// forward/backward recursion over the blank-extended label. `lattice` holds
// per-frame log class probabilities (rows are log-softmax outputs); the
// returned gradient is with respect to the pre-softmax logits.
inline CtcResult ctc_loss(const Eigen::MatrixXd& lattice, const std::vector<int>& label,
                          int blank) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const int t_len = static_cast<int>(lattice.rows());
  const int classes = static_cast<int>(lattice.cols());
  require_param(t_len > 0 && classes > 1, "ctc: lattice must be non-empty");
  require_param(blank >= 0 && blank < classes, "ctc: blank index out of range");
  detail::check_label(label, classes, blank);
  if (!feasible(t_len, label))
    throw FeasibilityError("ctc: label needs at least " +
                           std::to_string(min_frames_for_label(label)) +
                           " frames, lattice has " + std::to_string(t_len));

  const int l_len = static_cast<int>(label.size());
  const int s_len = 2 * l_len + 1;  // blank-extended label length
  std::vector<int> ext(static_cast<std::size_t>(s_len), blank);
  for (int i = 0; i < l_len; ++i) ext[static_cast<std::size_t>(2 * i + 1)] = label[i];

  const auto lp = [&](int t, int s) { return lattice(t, ext[static_cast<std::size_t>(s)]); };
  // Transition into s from s-2 is allowed only when it skips a blank between
  // two distinct symbols.
  const auto allow_skip = [&](int s) {
    return s >= 2 && ext[static_cast<std::size_t>(s)] != blank &&
           ext[static_cast<std::size_t>(s)] != ext[static_cast<std::size_t>(s - 2)];
  };

  Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(t_len, s_len, kNegInf);
  alpha(0, 0) = lp(0, 0);
  if (s_len > 1) alpha(0, 1) = lp(0, 1);
  for (int t = 1; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = logaddexp(a, alpha(t - 1, s - 1));
      if (allow_skip(s)) a = logaddexp(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + lp(t, s);
    }
  }

  double log_prob = alpha(t_len - 1, s_len - 1);
  if (s_len > 1) log_prob = logaddexp(log_prob, alpha(t_len - 1, s_len - 2));
  if (!std::isfinite(log_prob))
    throw TrainingError("ctc: non-finite path probability");

  // Backward pass; beta(t, s) includes the emission at frame t, so the
  // posterior over lattice states is exp(alpha + beta - lp - log_prob).
  Eigen::MatrixXd beta = Eigen::MatrixXd::Constant(t_len, s_len, kNegInf);
  beta(t_len - 1, s_len - 1) = lp(t_len - 1, s_len - 1);
  if (s_len > 1) beta(t_len - 1, s_len - 2) = lp(t_len - 1, s_len - 2);
  for (int t = t_len - 2; t >= 0; --t) {
    for (int s = 0; s < s_len; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < s_len) b = logaddexp(b, beta(t + 1, s + 1));
      if (s + 2 < s_len && allow_skip(s + 2)) b = logaddexp(b, beta(t + 1, s + 2));
      if (b != kNegInf) beta(t, s) = b + lp(t, s);
    }
  }

  CtcResult result;
  result.loss = -log_prob;
  result.posterior = Eigen::MatrixXd::Zero(t_len, classes);
  for (int t = 0; t < t_len; ++t) {
    for (int s = 0; s < s_len; ++s) {
      const double occ = alpha(t, s) + beta(t, s) - lp(t, s) - log_prob;
      if (occ != kNegInf && !std::isnan(occ))
        result.posterior(t, ext[static_cast<std::size_t>(s)]) += std::exp(occ);
    }
  }
  result.grad_logits = lattice.array().exp().matrix() - result.posterior;
  return result;
}

// Loss-only variant for callers that do not need gradients.
inline double ctc_loss_value(const Eigen::MatrixXd& lattice, const std::vector<int>& label,
                             int blank) {
  return ctc_loss(lattice, label, blank).loss;
}

}  // namespace ctc
}  // namespace eegrec
