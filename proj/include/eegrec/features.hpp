// include/eegrec/features.hpp

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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegrec/errors.hpp"
#include "eegrec/io.hpp"
#include "eegrec/recording.hpp"

namespace eegrec::features {

inline constexpr int kFeaturesPerChannel = 5;
inline constexpr int kRawFeatureDim = kNumChannels * kFeaturesPerChannel;  // 155

// Analysis windows: 100 ms of the 1000 Hz signal per frame, advanced by
// 10 samples so the feature stream comes out at 100 Hz.
struct WindowConfig {
  int window_len_samples = 100;
  int hop_samples = 10;
  double input_rate_hz = kRawSampleRateHz;

  void validate() const {
    require_param(window_len_samples > 0, "window length must be positive");
    require_param(hop_samples > 0, "hop must be positive");
    require_param(input_rate_hz > 0, "input rate must be positive");
  }

  double output_rate_hz() const { return input_rate_hz / hop_samples; }
};

struct FeatureSequence {
  Eigen::MatrixXd frames;  // T x D
  double frame_rate_hz = 100.0;
  bool reduced = false;  // false: 155-dim channel stats, true: KPCA output
  int subject_id = 0;
  int session_id = 0;
  int sentence_id = 0;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }
};

// ---- the five per-window statistics ----

inline double rms(std::span<const double> w) {
  require_param(!w.empty(), "rms: empty window");
  double acc = 0.0;
  for (double v : w) acc += v * v;
  return std::sqrt(acc / static_cast<double>(w.size()));
}

// Fraction of adjacent pairs with a strict sign change. A pair landing on
// zero is never a crossing (sign(0) = 0), so [1,0,-1] scores one crossing
// out of two pairs.
inline double zero_crossing_rate(std::span<const double> w) {
  require_param(w.size() >= 2, "zero_crossing_rate: window length must be >= 2");
  int crossings = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const int prev = (w[i - 1] > 0.0) - (w[i - 1] < 0.0);
    const int cur = (w[i] > 0.0) - (w[i] < 0.0);
    if (cur != 0 && cur != prev) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(w.size() - 1);
}

inline double moving_window_average(std::span<const double> w) {
  require_param(!w.empty(), "moving_window_average: empty window");
  double acc = 0.0;
  for (double v : w) acc += v;
  return acc / static_cast<double>(w.size());
}

// Biased excess kurtosis m4/m2^2 - 3; a (near-)constant window maps to 0
// instead of 0/0.
inline double kurtosis(std::span<const double> w) {
  require_param(w.size() >= 2, "kurtosis: window length must be >= 2");
  const double n = static_cast<double>(w.size());
  double mean = 0.0, maxabs = 0.0;
  for (double v : w) {
    mean += v;
    maxabs = std::max(maxabs, std::fabs(v));
  }
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : w) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (m2 <= 1e-12 * maxabs * maxabs) return 0.0;
  return m4 / (m2 * m2) - 3.0;
}

// Shannon entropy (nats) of the normalized one-sided periodogram
// S_k = |DFT(w)_k|^2, k = 0..floor(L/2). All-zero window maps to 0.
inline double power_spectral_entropy(std::span<const double> w) {
  require_param(!w.empty(), "power_spectral_entropy: empty window");
  const std::size_t len = w.size();
  const std::size_t bins = len / 2 + 1;

  // One period of the DFT twiddle factors; index (k*n) mod len.
  std::vector<double> cos_t(len), sin_t(len);
  for (std::size_t m = 0; m < len; ++m) {
    const double ang = -2.0 * M_PI * static_cast<double>(m) / static_cast<double>(len);
    cos_t[m] = std::cos(ang);
    sin_t[m] = std::sin(ang);
  }

  std::vector<double> power(bins);
  double total = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t n = 0; n < len; ++n) {
      re += w[n] * cos_t[idx];
      im += w[n] * sin_t[idx];
      idx += k;
      if (idx >= len) idx -= len;
    }
    power[k] = re * re + im * im;
    total += power[k];
  }
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    const double p = power[k] / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// Windowed extraction over all 31 channels. Frame t (0-based) covers input
// samples [(t+1)*hop - W, (t+1)*hop - 1]; indices outside the signal read as
// zero, so T = ceil(N / hop) regardless of W. Layout is channel-major with
// the per-channel feature order [rms, zcr, mwa, kurtosis, pse].
inline FeatureSequence extract_features(const EegRecording& rec,
                                        const WindowConfig& cfg = {}) {
  cfg.validate();
  require_data(rec.samples.cols() == kNumChannels,
               "extract_features: expected 31 channels, got " +
                   std::to_string(rec.samples.cols()));
  require_data(rec.samples.rows() >= 1, "extract_features: empty recording");

  const Eigen::Index n = rec.samples.rows();
  const int hop = cfg.hop_samples;
  const int wlen = cfg.window_len_samples;
  const Eigen::Index t_count = (n + hop - 1) / hop;

  FeatureSequence fs;
  fs.frame_rate_hz = cfg.output_rate_hz();
  fs.subject_id = rec.subject_id;
  fs.session_id = rec.session_id;
  fs.sentence_id = rec.sentence_id;
  fs.frames.resize(t_count, kRawFeatureDim);

  std::vector<double> window(static_cast<std::size_t>(wlen));
  for (int c = 0; c < kNumChannels; ++c) {
    for (Eigen::Index t = 0; t < t_count; ++t) {
      const Eigen::Index last = (t + 1) * hop - 1;
      for (int j = 0; j < wlen; ++j) {
        const Eigen::Index s = last - (wlen - 1) + j;
        window[static_cast<std::size_t>(j)] =
            (s >= 0 && s < n) ? rec.samples(s, c) : 0.0;
      }
      const int base = c * kFeaturesPerChannel;
      fs.frames(t, base + 0) = rms(window);
      fs.frames(t, base + 1) = zero_crossing_rate(window);
      fs.frames(t, base + 2) = moving_window_average(window);
      fs.frames(t, base + 3) = kurtosis(window);
      fs.frames(t, base + 4) = power_spectral_entropy(window);
    }
  }
  return fs;
}

// Dim index -> (channel, feature) within the channel-major layout, 0-based.
inline std::pair<int, int> feature_layout(int dim_index) {
  return {dim_index / kFeaturesPerChannel, dim_index % kFeaturesPerChannel};
}

// ---- feature file format (magic EEGF, version 1) ----
// u32 T, u32 D, row-major f32 matrix, then a UTF-8 JSON metadata string.

inline constexpr char kFeatureMagic[4] = {'E', 'E', 'G', 'F'};
inline constexpr uint32_t kFeatureVersion = 1;

inline void write_feature_file(const std::filesystem::path& path,
                               const FeatureSequence& fs,
                               const WindowConfig& cfg = {}) {
  BinWriter w(path);
  w.magic(kFeatureMagic, kFeatureVersion);
  const auto t_count = static_cast<uint32_t>(fs.frames.rows());
  const auto d = static_cast<uint32_t>(fs.frames.cols());
  w.u32(t_count);
  w.u32(d);
  std::vector<float> row(d);
  for (uint32_t t = 0; t < t_count; ++t) {
    for (uint32_t j = 0; j < d; ++j) row[j] = static_cast<float>(fs.frames(t, j));
    w.f32_array(row.data(), row.size());
  }
  nlohmann::json meta{{"subject_id", fs.subject_id},
                      {"session_id", fs.session_id},
                      {"sentence_id", fs.sentence_id},
                      {"reduced", fs.reduced},
                      {"frame_rate_hz", fs.frame_rate_hz},
                      {"window_len_samples", cfg.window_len_samples},
                      {"hop_samples", cfg.hop_samples}};
  w.str(meta.dump());
  w.close();
}

inline FeatureSequence read_feature_file(const std::filesystem::path& path) {
  BinReader r(path);
  r.expect_magic(kFeatureMagic, kFeatureVersion, "feature");
  const uint32_t t_count = r.u32();
  const uint32_t d = r.u32();
  require_data(t_count >= 1 && d >= 1, path.string() + ": empty feature matrix");
  FeatureSequence fs;
  fs.frames.resize(t_count, d);
  std::vector<float> row(d);
  for (uint32_t t = 0; t < t_count; ++t) {
    r.f32_array(row.data(), row.size());
    for (uint32_t j = 0; j < d; ++j) fs.frames(t, j) = row[j];
  }
  const auto meta = nlohmann::json::parse(r.str());
  fs.subject_id = meta.value("subject_id", 0);
  fs.session_id = meta.value("session_id", 0);
  fs.sentence_id = meta.value("sentence_id", 0);
  fs.reduced = meta.value("reduced", false);
  fs.frame_rate_hz = meta.value("frame_rate_hz", 100.0);
  return fs;
}

}  // namespace eegrec::features
