// tests/acceptance.cpp

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

// Release gate for the whole pipeline. Each numbered criterion prints exactly
// one [PASS]/[FAIL] line with the measured quantity, its tolerance, and the
// elapsed time where a budget applies. The process exits non-zero when any
// criterion fails.
//
// The end-to-end criterion runs the full 4-subject x 30-sentence x 3-session
// design with the default configuration (45-minute budget). Set
// EEGREC_REDUCED=1 (or pass --reduced) to run the scaled 2 x 10 x 3 fallback
// with the same thresholds and a 10-minute budget instead; the fallback is
// meant for hosts where the full design exceeds its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eegrec/alphabet.hpp"
#include "eegrec/ctc.hpp"
#include "eegrec/data.hpp"
#include "eegrec/decode.hpp"
#include "eegrec/dsp.hpp"
#include "eegrec/eval.hpp"
#include "eegrec/features.hpp"
#include "eegrec/kpca.hpp"
#include "eegrec/lm.hpp"
#include "eegrec/net.hpp"
#include "eegrec/pipeline.hpp"
#include "eegrec/util.hpp"
#include "oracles.hpp"

using namespace eegrec;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

int g_passed = 0;
int g_failed = 0;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return std::string(buf);
}

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d. %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (ok)
    ++g_passed;
  else
    ++g_failed;
}

Eigen::MatrixXd random_log_lattice(Rng& rng, int t_len, int classes) {
  Eigen::MatrixXd m(t_len, classes);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-3.0, 3.0);
  for (int t = 0; t < t_len; ++t) {
    const double peak = m.row(t).maxCoeff();
    double acc = 0.0;
    for (int c = 0; c < classes; ++c) acc += std::exp(m(t, c) - peak);
    const double lse = peak + std::log(acc);
    for (int c = 0; c < classes; ++c) m(t, c) -= lse;
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

// ---- criterion 1: CTC loss against full path enumeration ----

void criterion_ctc_oracle() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00001ULL);
    double max_diff = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      const int t_len = 1 + static_cast<int>(rng.index(6));     // 1..6
      const int symbols = 1 + static_cast<int>(rng.index(4));   // 1..4
      const int classes = symbols + 1;
      const int blank = symbols;
      std::vector<int> label(rng.index(4));                     // length 0..3
      for (int& s : label) s = static_cast<int>(rng.index(static_cast<std::size_t>(symbols)));
      while (!ctc::feasible(t_len, label)) label.pop_back();
      const Eigen::MatrixXd lat = random_log_lattice(rng, t_len, classes);
      const double lib = ctc::ctc_loss_value(lat, label, blank);
      const double ref = oracles::ctc_loss_brute_force(lat, label, blank);
      max_diff = std::max(max_diff, std::abs(lib - ref));
    }
    const double secs = timer.seconds();
    ok = max_diff <= 1e-9 && secs < 10.0;
    detail = fmt("200 random lattices (T<=6, <=4 symbols, labels<=3), max |loss diff| %.3g "
                 "(tol 1e-9), %.2f s (limit 10)",
                 max_diff, secs);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(1, "ctc loss matches path enumeration", ok, detail);
}

// ---- criterion 2: analytic gradients against central differences ----

void criterion_gradients() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00002ULL);
    double max_rel = 0.0;
    int draws = 0;
    const double h = 1e-5;
    const struct {
      bool residual;
      double dropout;
    } cases[] = {{false, 0.0}, {true, 0.0}, {false, 0.1}};
    for (const auto& cs : cases) {
      net::NetConfig cfg;
      cfg.input_dim = 3;
      cfg.hidden1 = 4;
      cfg.hidden2 = 3;
      cfg.filters = 3;
      cfg.kernel = 2;
      cfg.classes = 4;
      cfg.residual = cs.residual;
      cfg.dropout = cs.dropout;
      net::ModelParams params = net::ModelParams::init(cfg, 99);
      const int t_len = 5;
      Eigen::MatrixXd feats(t_len, cfg.input_dim);
      for (Eigen::Index i = 0; i < feats.size(); ++i) feats.data()[i] = rng.uniform(-1.0, 1.0);
      const std::vector<int> label = {0, 2};
      const int blank = cfg.classes - 1;
      const bool train_mode = cfg.dropout > 0.0;
      const std::uint64_t dseed = 77;

      net::ForwardTrace trace;
      const Eigen::MatrixXd lat = net::model_forward(params, feats, train_mode, dseed, &trace);
      const ctc::CtcResult res = ctc::ctc_loss(lat, label, blank);
      net::ModelParams grads = net::ModelParams::zeros(cfg);
      net::model_backward(params, trace, res.grad_logits, grads);
      auto pten = params.tensors();
      auto gten = grads.tensors();

      for (int draw = 0; draw < 14; ++draw) {
        const std::size_t ti = rng.index(pten.size());
        const Eigen::Index k =
            static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pten[ti].size)));
        const double orig = pten[ti].data[k];
        pten[ti].data[k] = orig + h;
        const double lp = ctc::ctc_loss_value(net::model_forward(params, feats, train_mode, dseed),
                                              label, blank);
        pten[ti].data[k] = orig - h;
        const double lm = ctc::ctc_loss_value(net::model_forward(params, feats, train_mode, dseed),
                                              label, blank);
        pten[ti].data[k] = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = gten[ti].data[k];
        const double rel =
            std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        max_rel = std::max(max_rel, rel);
        ++draws;
      }
    }
    const double secs = timer.seconds();
    ok = max_rel <= 1e-5 && draws >= 20 && secs < 60.0;
    detail = fmt("%d parameter draws over 3 model variants, max rel err %.3g "
                 "(tol 1e-5, denom max(1,|g|)), %.2f s (limit 60)",
                 draws, max_rel, secs);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(2, "backprop matches central differences", ok, detail);
}

// ---- criterion 3: beam search exactness at exhaustive width ----

void criterion_beam_exact() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00003ULL);
    double max_diff = 0.0;
    int top_mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const Alphabet ab(trial % 2 == 0 ? "ab" : "abc");
      const int t_len = 1 + static_cast<int>(rng.index(4));  // 1..4
      const Eigen::MatrixXd lat = random_log_lattice(rng, t_len, ab.num_classes());
      const auto dist = oracles::label_distribution_brute_force(lat, ab.blank());
      std::vector<int> best;
      double best_p = -1.0;
      for (const auto& [lab, p] : dist) {
        if (p > best_p) {
          best_p = p;
          best = lab;
        }
      }
      decode::BeamConfig bc;
      bc.beam_width = 200;  // >= 121 reachable prefixes at T=4 over 3 symbols
      bc.nbest = 200;
      bc.lm_weight = 0.0;
      bc.insertion_bonus = 0.0;
      const auto hyps = decode::beam_search(lat, ab, nullptr, bc);
      if (hyps.front().text != ab.decode(best)) ++top_mismatches;
      for (const auto& hyp : hyps) {
        const double ref = std::log(dist.at(ab.encode(hyp.text)));
        max_diff = std::max(max_diff, std::abs(hyp.log_prob - ref));
      }
    }
    ok = top_mismatches == 0 && max_diff <= 1e-9;
    detail = fmt("100 lattices (T<=4), top labeling mismatches %d, max |log-prob diff| %.3g "
                 "(tol 1e-9), %.2f s",
                 top_mismatches, max_diff, timer.seconds());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(3, "exhaustive beam equals label enumeration", ok, detail);
}

// ---- criterion 4: filter frequency response compliance ----

void criterion_filters() {
  std::string detail;
  bool ok = true;
  try {
    const auto bp = dsp::design_bandpass(0.1, 70.0, 1000.0);
    const double lo = dsp::frequency_response(bp, 0.1);
    const double hi = dsp::frequency_response(bp, 70.0);
    const auto notch = dsp::design_notch(60.0, 30.0, 1000.0);
    const double at60 = dsp::frequency_response(notch, 60.0);
    const double at50 = dsp::frequency_response(notch, 50.0);
    const double at70 = dsp::frequency_response(notch, 70.0);
    ok = std::abs(lo + 3.0) <= 0.5 && std::abs(hi + 3.0) <= 0.5 && at60 <= -30.0 &&
         at50 >= -0.5 && at70 >= -0.5;
    detail = fmt("band edges %+.3f / %+.3f dB (want -3 +- 0.5), notch %+.1f dB at 60 Hz "
                 "(<= -30), %+.4f / %+.4f dB at 50/70 Hz (>= -0.5)",
                 lo, hi, at60, at50, at70);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(4, "bandpass and notch responses in-spec", ok, detail);
}

// ---- criterion 5: kernel PCA against a dense eigensolver oracle ----

struct OracleKpca {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd projections;
};

OracleKpca kpca_oracle(const Eigen::MatrixXd& x_in, const kpca::KpcaConfig& cfg) {
  const Eigen::Index n = x_in.rows();
  Eigen::MatrixXd x = x_in;
  if (cfg.standardize) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double mean = x.col(j).mean();
      double var = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
      var /= static_cast<double>(n);
      const double scale = var > 1e-24 ? std::sqrt(var) : 1.0;
      for (Eigen::Index i = 0; i < n; ++i) x(i, j) = (x(i, j) - mean) / scale;
    }
  }
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      k(i, j) = kpca::poly_kernel(x.row(i).transpose(), x.row(j).transpose(), cfg.gamma,
                                  cfg.offset, cfg.degree);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd kc = k - ones * k - k * ones + ones * k * ones;
  const auto eig = oracles::jacobi_eigh(kc);
  OracleKpca out;
  out.eigenvalues.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues[i] = eig.eigenvalues[i];
  Eigen::MatrixXd alphas(n, cfg.components);
  for (int c = 0; c < cfg.components; ++c) {
    Eigen::VectorXd a = eig.eigenvectors.col(c) / std::sqrt(eig.eigenvalues[c]);
    Eigen::Index imax = 0;
    a.cwiseAbs().maxCoeff(&imax);
    if (a[imax] < 0.0) a = -a;
    alphas.col(c) = a;
  }
  out.projections = kc * alphas;
  return out;
}

void criterion_kpca() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00005ULL);
    double max_eig = 0.0;    // scaled: |a-b| / max(1, |a|, |b|)
    double max_proj = 0.0;   // absolute, sign-fixed
    double max_end = 0.0;    // |last curve value - 1|
    bool monotone = true;
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.index(16));  // 5..20
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.index(9));   // 2..10
      kpca::KpcaConfig cfg;
      cfg.components = 2 + static_cast<int>(rng.index(3));  // 2..4
      cfg.standardize = trial % 2 == 0;
      Eigen::MatrixXd x(n, d);
      for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2.0, 2.0);

      const auto fitted = kpca::KpcaProjector::fit(x, cfg);
      const auto oracle = kpca_oracle(x, cfg);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = fitted.eigenvalues()[i];
        const double b = oracle.eigenvalues[i];
        max_eig = std::max(max_eig, std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}));
      }
      for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < cfg.components; ++c)
          max_proj = std::max(
              max_proj, std::abs(fitted.training_projection()(i, c) - oracle.projections(i, c)));

      const auto curve = fitted.explained_variance_curve();
      for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].second < curve[i - 1].second) monotone = false;
      max_end = std::max(max_end, std::abs(curve.back().second - 1.0));
    }
    ok = max_eig <= 1e-8 && max_proj <= 1e-8 && monotone && max_end <= 1e-9;
    detail = fmt("50 datasets (n<=20, d<=10), max eigenvalue diff %.3g (tol 1e-8 scaled), "
                 "max projection diff %.3g (tol 1e-8), variance curve monotone %s, "
                 "|final ratio - 1| %.3g (tol 1e-9), %.2f s",
                 max_eig, max_proj, monotone ? "yes" : "NO", max_end, timer.seconds());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(5, "kernel pca matches dense eigensolver", ok, detail);
}

// ---- criterion 6: window features against direct-definition oracles ----

void criterion_features() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00006ULL);
    double max_rel = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t len = 2 + rng.index(199);  // 2..200
      std::vector<double> w(len);
      bool any = false;
      for (double& v : w) {
        v = rng.uniform01() < 0.1 ? 0.0 : rng.uniform(-5.0, 5.0);
        any = any || v != 0.0;
      }
      if (!any) w[0] = 1.0;
      const std::span<const double> s(w);
      const double pairs[5][2] = {
          {features::rms(s), oracles::rms_oracle(w)},
          {features::zero_crossing_rate(s), oracles::zcr_oracle(w)},
          {features::moving_window_average(s), oracles::mwa_oracle(w)},
          {features::kurtosis(s), oracles::kurtosis_oracle(w)},
          {features::power_spectral_entropy(s), oracles::pse_oracle(w)},
      };
      for (const auto& pr : pairs) {
        const double rel =
            std::abs(pr[0] - pr[1]) / std::max({1.0, std::abs(pr[0]), std::abs(pr[1])});
        max_rel = std::max(max_rel, rel);
      }
    }
    bool layout_ok = true;
    for (int dim = 0; dim < features::kRawFeatureDim; ++dim) {
      const auto [channel, feature] = features::feature_layout(dim);
      if (channel != dim / 5 || feature != dim % 5 || dim != 5 * channel + feature ||
          channel < 0 || channel >= 31)
        layout_ok = false;
    }
    ok = max_rel <= 1e-9 && layout_ok;
    detail = fmt("1000 windows x 5 features, max rel diff %.3g (tol 1e-9), "
                 "dim = 5*channel + feature holds for all 155 dims: %s, %.2f s",
                 max_rel, layout_ok ? "yes" : "NO", timer.seconds());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(6, "window features match definition oracles", ok, detail);
}

// ---- criterion 7: edit distance and WER against a recursive oracle ----

void criterion_wer() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    Rng rng(0xACC00007ULL);
    const std::vector<std::string> vocab = {"go", "stop", "left"};
    int mismatches = 0;
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<std::string> a(rng.index(7)), b(rng.index(7));  // lengths 0..6
      for (auto& tok : a) tok = vocab[rng.index(3)];
      for (auto& tok : b) tok = vocab[rng.index(3)];
      if (eval::edit_distance(a, b).total() != oracles::edit_distance_recursive(a, b))
        ++mismatches;
    }
    const std::vector<eval::ScorePair> pinned = {{"the cat sat", "the bat"}};
    const double w = eval::wer(pinned);
    const bool pinned_ok = std::abs(w - 200.0 / 3.0) <= 1e-9;
    ok = mismatches == 0 && pinned_ok;
    detail = fmt("300 token-pair draws (len<=6, 3-token vocab), mismatches %d; "
                 "wer(\"the cat sat\" vs \"the bat\") = %.2f%% (want 66.67), %.2f s",
                 mismatches, w, timer.seconds());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(7, "edit distance and wer match recursion", ok, detail);
}

// ---- criteria 8-10: end-to-end pipeline, determinism, report fidelity ----

struct E2eState {
  bool ran = false;
  pipeline::PipelineConfig cfg_a;
};

// Default configuration with only the knobs that cannot affect artifacts:
// work_dir (placement), threads (proven output-invariant by the unit suites),
// and train verbosity (stderr logging only).
pipeline::PipelineConfig gate_config(const fs::path& work) {
  pipeline::PipelineConfig cfg;
  cfg.threads = 0;
  cfg.train_cfg.verbose = false;
  cfg.work_dir = work.string();
  return cfg;
}

void criterion_end_to_end(E2eState& st, bool reduced) {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    const fs::path root = fs::temp_directory_path() / "eegrec_acceptance";
    fs::remove_all(root);
    pipeline::PipelineConfig cfg = gate_config(root / "e2e");
    if (reduced) {
      cfg.synth.subjects = 2;
      cfg.num_sentences = 10;
    }
    st.cfg_a = cfg;

    pipeline::run_all(st.cfg_a);
    const double secs = timer.seconds();
    st.ran = true;

    const auto curve_lines = read_lines(pipeline::paths::loss_curve(st.cfg_a));
    const double first = std::stod(split_csv(curve_lines.at(1)).at(1));
    const double last = std::stod(split_csv(curve_lines.back()).at(1));

    double wer30 = -1.0;
    for (const auto& line : read_lines(pipeline::paths::report_csv(st.cfg_a))) {
      const auto f = split_csv(line);
      if (f.size() >= 8 && f[0] == "30" && !f[6].empty()) wer30 = std::stod(f[6]);
    }

    const double limit = reduced ? 600.0 : 2700.0;
    ok = last < 0.2 * first && wer30 >= 0.0 && wer30 <= 25.0 && secs < limit;
    detail = fmt("%s design with default config, loss %.1f -> %.1f (%.1f%% of epoch 1, "
                 "want < 20%%), k=30 test wer %.2f%% (<= 25), %.0f s (limit %.0f)",
                 reduced ? "2x10x3 fallback" : "4x30x3", first, last, 100.0 * last / first,
                 wer30, secs, limit);
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(8, "end-to-end training converges and generalizes", ok, detail);
}

void criterion_determinism() {
  Timer timer;
  std::string detail;
  bool ok = true;
  try {
    // Two fresh runs with identical config and seed. The fallback-scale design
    // keeps the gate's runtime bounded; bit-identity is scale-independent and
    // thread-count independence is covered by the unit suites.
    const fs::path root = fs::temp_directory_path() / "eegrec_acceptance";
    pipeline::PipelineConfig cfg_a = gate_config(root / "det_a");
    pipeline::PipelineConfig cfg_b = gate_config(root / "det_b");
    cfg_a.synth.subjects = cfg_b.synth.subjects = 2;
    cfg_a.num_sentences = cfg_b.num_sentences = 10;
    pipeline::run_all(cfg_a);
    pipeline::run_all(cfg_b);
    const std::pair<fs::path, fs::path> artifacts[] = {
        {pipeline::paths::kpca_model(cfg_a), pipeline::paths::kpca_model(cfg_b)},
        {pipeline::paths::lm_model(cfg_a), pipeline::paths::lm_model(cfg_b)},
        {pipeline::paths::model_checkpoint(cfg_a), pipeline::paths::model_checkpoint(cfg_b)},
        {pipeline::paths::loss_curve(cfg_a), pipeline::paths::loss_curve(cfg_b)},
        {pipeline::paths::decoded_csv(cfg_a), pipeline::paths::decoded_csv(cfg_b)},
        {pipeline::paths::report_csv(cfg_a), pipeline::paths::report_csv(cfg_b)},
        {pipeline::paths::report_table(cfg_a), pipeline::paths::report_table(cfg_b)},
    };
    int identical = 0;
    std::string first_diff;
    for (const auto& [a, b] : artifacts) {
      const std::string ca = slurp(a);
      if (!ca.empty() && ca == slurp(b))
        ++identical;
      else if (first_diff.empty())
        first_diff = a.filename().string();
    }
    ok = identical == 7;
    if (ok)
      detail = fmt("two 2x10x3 runs, identical config and seed: all 7 artifacts "
                   "byte-for-byte equal (checkpoint, kpca, lm, loss curve, decodes, "
                   "reports), %.0f s",
                   timer.seconds());
    else
      detail = fmt("%d/7 artifacts identical, first difference in %s", identical,
                   first_diff.c_str());
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(9, "repeated runs are bit-identical", ok, detail);
}

void criterion_report_fidelity(const E2eState& st) {
  std::string detail;
  bool ok = true;
  try {
    // Hand-tallied fixture: ids pick which ladder rungs see each sentence.
    const std::vector<eval::SweepItem> items = {
        {"the cat", "the cat", 2}, {"a dog", "a hog", 7}, {"the cat", "the bat", 12}};
    const auto rep = eval::vocab_sweep(items, {5, 10, 15, 20, 25, 30});
    struct Expect {
      int k;
      std::size_t sents, uniq_sents, words, uniq_words, letters;
      double wer, cer;
    };
    const Expect want[] = {
        {5, 1, 1, 2, 2, 6, 0.0, 0.0},
        {10, 2, 2, 4, 4, 10, 25.0, 100.0 / 12.0},
        {15, 3, 2, 6, 4, 16, 100.0 / 3.0, 200.0 / 19.0},
        {20, 3, 2, 6, 4, 16, 100.0 / 3.0, 200.0 / 19.0},
        {25, 3, 2, 6, 4, 16, 100.0 / 3.0, 200.0 / 19.0},
        {30, 3, 2, 6, 4, 16, 100.0 / 3.0, 200.0 / 19.0},
    };
    int bad_rows = 0;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      const auto& w = want[i];
      const bool row_ok = r.k == w.k && r.present && r.total_sentences == w.sents &&
                          r.unique_sentences == w.uniq_sents && r.total_words == w.words &&
                          r.unique_words == w.uniq_words && r.letters == w.letters &&
                          std::abs(r.wer - w.wer) <= 1e-12 && std::abs(r.cer - w.cer) <= 1e-12;
      if (!row_ok) ++bad_rows;
    }
    const bool counts_ok = rep.rows.size() == 6 && bad_rows == 0;

    bool ladder_ok = false;
    if (st.ran) {
      std::vector<int> ks;
      const auto lines = read_lines(pipeline::paths::report_csv(st.cfg_a));
      for (std::size_t i = 1; i < lines.size(); ++i)
        if (!lines[i].empty()) ks.push_back(std::stoi(split_csv(lines[i]).at(0)));
      ladder_ok = ks == std::vector<int>({5, 10, 15, 20, 25, 30});
    }
    ok = counts_ok && ladder_ok;
    detail = fmt("sweep counts vs hand tallies: %s (6 rows, %d bad); pipeline report ladder "
                 "5,10,15,20,25,30: %s",
                 counts_ok ? "match" : "MISMATCH", bad_rows,
                 ladder_ok ? "present" : "MISSING");
  } catch (const std::exception& e) {
    ok = false;
    detail = std::string("exception: ") + e.what();
  }
  report(10, "vocabulary sweep report is faithful", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  bool reduced = false;
  const char* env = std::getenv("EEGREC_REDUCED");
  if (env != nullptr && env[0] == '1') reduced = true;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--reduced") reduced = true;

  std::printf("acceptance suite, %s end-to-end design\n",
              reduced ? "reduced 2x10x3 fallback" : "full 4x30x3");
  Timer total;

  criterion_ctc_oracle();
  criterion_gradients();
  criterion_beam_exact();
  criterion_filters();
  criterion_kpca();
  criterion_features();
  criterion_wer();

  E2eState st;
  criterion_end_to_end(st, reduced);
  criterion_determinism();
  criterion_report_fidelity(st);

  std::printf("%d/%d criteria passed, %.0f s total\n", g_passed, g_passed + g_failed,
              total.seconds());
  if (g_failed == 0) {
    std::error_code ec;
    fs::remove_all(fs::temp_directory_path() / "eegrec_acceptance", ec);
  } else {
    std::printf("work directories kept under %s for inspection\n",
                (fs::temp_directory_path() / "eegrec_acceptance").string().c_str());
  }
  return g_failed == 0 ? 0 : 1;
}
