// include/eegrec/recording.hpp

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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "eegrec/errors.hpp"

namespace eegrec {

// 32 wet electrodes minus the ground electrode.
inline constexpr int kNumChannels = 31;
inline constexpr double kRawSampleRateHz = 1000.0;

// Multichannel raw EEG plus transcript and session metadata. Samples are
// stored as an N x 31 matrix (one column per channel, microvolts).
struct EegRecording {
  Eigen::MatrixXd samples;  // N x kNumChannels
  double sample_rate_hz = kRawSampleRateHz;
  std::string transcript;
  int subject_id = 0;
  int session_id = 0;
  int sentence_id = 0;

  Eigen::Index num_samples() const { return samples.rows(); }

  void validate() const {
    require_data(samples.cols() == kNumChannels,
                 "recording must have exactly 31 channels, got " +
                     std::to_string(samples.cols()));
    require_data(samples.rows() >= 1, "recording must contain at least one sample");
  }
};

// On-disk recording format: a header line
//   channels=31,fs=1000,sentence_id=<id>
// followed by CSV rows of 31 floating-point values, one row per sample.

inline void write_recording_file(const std::filesystem::path& path,
                                 const EegRecording& rec) {
  rec.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "channels=" << kNumChannels << ",fs="
      << static_cast<long long>(rec.sample_rate_hz)
      << ",sentence_id=" << rec.sentence_id << "\n";
  const Eigen::Index n = rec.samples.rows();
  std::string line;
  line.reserve(kNumChannels * 12);
  char buf[32];
  for (Eigen::Index i = 0; i < n; ++i) {
    line.clear();
    for (int c = 0; c < kNumChannels; ++c) {
      const int len = std::snprintf(buf, sizeof(buf), "%.4f", rec.samples(i, c));
      if (c) line.push_back(',');
      line.append(buf, static_cast<std::size_t>(len));
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw DataError("write failed: " + path.string());
}

inline EegRecording read_recording_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::string header;
  if (!std::getline(in, header))
    throw DataError(path.string() + ": empty recording file");

  EegRecording rec;
  int channels = 0;
  long long fs = 0;
  if (std::sscanf(header.c_str(), "channels=%d,fs=%lld,sentence_id=%d",
                  &channels, &fs, &rec.sentence_id) != 3)
    throw DataError(path.string() + ": malformed header line: " + header);
  require_data(channels == kNumChannels,
               path.string() + ": channel-count mismatch, header says " +
                   std::to_string(channels));
  require_data(fs > 0, path.string() + ": non-positive sample rate in header");
  rec.sample_rate_hz = static_cast<double>(fs);

  std::vector<double> values;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    int got = 0;
    while (p < end) {
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc())
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": malformed value");
      if (!std::isfinite(v))
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": non-finite sample value");
      values.push_back(v);
      ++got;
      p = next;
      if (p < end) {
        if (*p != ',')
          throw DataError(path.string() + ":" + std::to_string(lineno) +
                          ": expected ',' between values");
        ++p;
      }
    }
    if (got != kNumChannels)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": row has " +
                      std::to_string(got) + " columns, expected 31");
  }
  const std::size_t n = values.size() / kNumChannels;
  require_data(n >= 1, path.string() + ": recording has no samples");
  rec.samples.resize(static_cast<Eigen::Index>(n), kNumChannels);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < kNumChannels; ++c)
      rec.samples(static_cast<Eigen::Index>(i), c) = values[i * kNumChannels + c];
  return rec;
}

}  // namespace eegrec
