// include/eegrec/dsp.hpp

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

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "eegrec/errors.hpp"
#include "eegrec/recording.hpp"

namespace eegrec::dsp {

// One normalized second-order section:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct BiquadSection {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;

  // Real-coefficient stability triangle: |a2| < 1 and |a1| < 1 + a2.
  bool is_stable() const { return std::fabs(a2) < 1.0 && std::fabs(a1) < 1.0 + a2; }
};

struct BiquadCascade {
  std::vector<BiquadSection> sections;
  double sample_rate_hz = 0.0;

  bool is_stable() const {
    if (sections.empty()) return false;
    for (const auto& s : sections)
      if (!s.is_stable()) return false;
    return true;
  }
};

namespace detail {

inline std::complex<double> section_response(const BiquadSection& s, double theta) {
  const std::complex<double> z1 = std::polar(1.0, -theta);
  const std::complex<double> z2 = z1 * z1;
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

inline std::complex<double> cascade_response(const BiquadCascade& f, double theta) {
  std::complex<double> h = 1.0;
  for (const auto& s : f.sections) h *= section_response(s, theta);
  return h;
}

}  // namespace detail

// 20*log10 |H(e^{j 2 pi f / fs})| evaluated from the coefficients.
inline double frequency_response(const BiquadCascade& filter, double f_hz) {
  require_param(!filter.sections.empty(), "frequency_response: empty cascade");
  require_param(filter.sample_rate_hz > 0, "frequency_response: invalid sample rate");
  require_param(f_hz >= 0.0 && f_hz <= filter.sample_rate_hz / 2.0,
                "frequency_response: frequency " + std::to_string(f_hz) +
                    " Hz outside [0, Nyquist]");
  const double theta = 2.0 * M_PI * f_hz / filter.sample_rate_hz;
  return 20.0 * std::log10(std::abs(detail::cascade_response(filter, theta)));
}

// 4th-order Butterworth band-pass: 2nd-order analog low-pass prototype,
// band transform, bilinear transform with edge pre-warping. Both cutoffs
// land at -3 dB. Realized as two second-order sections (the high-frequency
// pole pair carries the z=-1 zeros, the low-frequency pair the z=+1 zeros)
// to keep the 0.1 Hz edge numerically well conditioned.
inline BiquadCascade design_bandpass(double lo_hz, double hi_hz, double fs_hz) {
  require_param(fs_hz > 0, "design_bandpass: non-positive sample rate");
  require_param(lo_hz > 0 && lo_hz < hi_hz && hi_hz < fs_hz / 2.0,
                "design_bandpass: need 0 < lo < hi < fs/2, got lo=" +
                    std::to_string(lo_hz) + " hi=" + std::to_string(hi_hz) +
                    " fs=" + std::to_string(fs_hz));

  using cd = std::complex<double>;
  const double k = 2.0 * fs_hz;
  const double w1 = k * std::tan(M_PI * lo_hz / fs_hz);
  const double w2 = k * std::tan(M_PI * hi_hz / fs_hz);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;

  // Prototype pole with positive imaginary part; its conjugate is implicit.
  const cd proto = std::polar(1.0, 3.0 * M_PI / 4.0);

  // Low-pass -> band-pass: each prototype pole p yields the two roots of
  // s^2 - p*bw*s + w0^2 = 0.
  const cd pb = proto * bw;
  const cd disc = std::sqrt(pb * pb - 4.0 * w0sq);
  const cd s_hi = (pb + disc) / 2.0;  // larger natural frequency
  const cd s_lo = (pb - disc) / 2.0;

  const auto bilinear = [&](cd s) { return (k + s) / (k - s); };
  const cd z_hi = bilinear(s_hi);
  const cd z_lo = bilinear(s_lo);

  const auto pole_pair_section = [](cd z, double bz0, double bz1, double bz2) {
    BiquadSection s;
    s.b0 = bz0;
    s.b1 = bz1;
    s.b2 = bz2;
    s.a1 = -2.0 * z.real();
    s.a2 = std::norm(z);
    return s;
  };

  BiquadCascade f;
  f.sample_rate_hz = fs_hz;
  f.sections.push_back(pole_pair_section(z_lo, 1.0, -2.0, 1.0));  // zeros at z=+1
  f.sections.push_back(pole_pair_section(z_hi, 1.0, 2.0, 1.0));   // zeros at z=-1

  // Normalize to unit gain at the (warped) center frequency.
  const double theta0 = 2.0 * std::atan(std::sqrt(w0sq) / k);
  const double g = std::abs(detail::cascade_response(f, theta0));
  f.sections[0].b0 /= g;
  f.sections[0].b1 /= g;
  f.sections[0].b2 /= g;
  return f;
}

// Second-order notch with a zero pair on the unit circle at +-2*pi*f0/fs
// and unit gain away from f0 (RBJ form).
inline BiquadCascade design_notch(double f0_hz, double q, double fs_hz) {
  require_param(fs_hz > 0, "design_notch: non-positive sample rate");
  require_param(f0_hz > 0 && f0_hz < fs_hz / 2.0,
                "design_notch: need 0 < f0 < fs/2, got f0=" + std::to_string(f0_hz));
  require_param(q > 0, "design_notch: Q must be positive");

  const double w0 = 2.0 * M_PI * f0_hz / fs_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;

  BiquadSection s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * c / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;

  BiquadCascade f;
  f.sample_rate_hz = fs_hz;
  f.sections.push_back(s);
  return f;
}

// Causal forward pass through the cascade, direct form II transposed,
// zero initial state. Output length equals input length.
inline std::vector<double> filter_apply(const BiquadCascade& filter,
                                        std::span<const double> signal) {
  require_param(!filter.sections.empty(), "filter_apply: empty cascade");
  require_param(filter.is_stable(), "filter_apply: unstable filter");
  for (std::size_t i = 0; i < signal.size(); ++i)
    if (!std::isfinite(signal[i]))
      throw DataError("filter_apply: non-finite sample at index " + std::to_string(i));

  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : filter.sections) {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + s1;
      s1 = s.b1 * x - s.a1 * out + s2;
      s2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

struct PreprocessParams {
  double bandpass_lo_hz = 0.1;
  double bandpass_hi_hz = 70.0;
  double notch_hz = 60.0;
  double notch_q = 30.0;
};

// Band-pass then notch, each channel independently; metadata untouched.
inline EegRecording preprocess_recording(const EegRecording& rec,
                                         const PreprocessParams& p = {}) {
  rec.validate();
  const BiquadCascade bp =
      design_bandpass(p.bandpass_lo_hz, p.bandpass_hi_hz, rec.sample_rate_hz);
  const BiquadCascade notch = design_notch(p.notch_hz, p.notch_q, rec.sample_rate_hz);

  EegRecording out = rec;
  const Eigen::Index n = rec.samples.rows();
  std::vector<double> chan(static_cast<std::size_t>(n));
  for (int c = 0; c < kNumChannels; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = rec.samples(i, c);
      if (!std::isfinite(v))
        throw DataError("preprocess_recording: channel " + std::to_string(c + 1) +
                        ", sample index " + std::to_string(i) + ": non-finite value");
      chan[static_cast<std::size_t>(i)] = v;
    }
    std::vector<double> f = filter_apply(bp, chan);
    f = filter_apply(notch, f);
    for (Eigen::Index i = 0; i < n; ++i)
      out.samples(i, c) = f[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace eegrec::dsp
