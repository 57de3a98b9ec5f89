// include/eegrec/data.hpp

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

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eegrec/alphabet.hpp"
#include "eegrec/errors.hpp"
#include "eegrec/recording.hpp"
#include "eegrec/util.hpp"

namespace eegrec {
namespace data {

inline constexpr int kMaxSentenceId = 30;
inline constexpr int kMaxSessions = 3;

// Lowercases ASCII letters, maps whitespace to single spaces, keeps
// apostrophes, drops everything else (punctuation, digits, non-ASCII bytes),
// and collapses/trims spaces.
inline std::string normalize_transcript(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    char mapped = 0;
    if (c >= 'A' && c <= 'Z') {
      mapped = static_cast<char>(c - 'A' + 'a');
    } else if ((c >= 'a' && c <= 'z') || c == '\'') {
      mapped = static_cast<char>(c);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      if (!out.empty()) pending_space = true;
      continue;
    } else {
      continue;  // punctuation, digits, bytes outside ASCII
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(mapped);
  }
  if (out.empty()) throw DataError("transcript is empty after normalization");
  return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string path;
  std::string transcript;
  int subject_id = 0;
  int session_id = 0;
  int sentence_id = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

namespace detail {

inline int parse_int_field(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("manifest: bad " + what + " value \"" + s + "\"");
  return v;
}

inline void validate_entry(const ManifestEntry& e, const Alphabet& alphabet) {
  require_data(!e.path.empty(), "manifest: empty path");
  require_data(e.subject_id >= 1, "manifest: subject must be >= 1");
  require_data(e.session_id >= 1 && e.session_id <= kMaxSessions,
               "manifest: session must be in 1.." + std::to_string(kMaxSessions));
  require_data(e.sentence_id >= 1 && e.sentence_id <= kMaxSentenceId,
               "manifest: sentence_id must be in 1.." + std::to_string(kMaxSentenceId) +
                   ", got " + std::to_string(e.sentence_id));
  require_data(!e.transcript.empty(), "manifest: empty transcript");
  for (char c : e.transcript)
    if (alphabet.index_of(c) < 0)
      throw DataError(std::string("manifest: transcript character '") + c +
                      "' outside the alphabet");
}

}  // namespace detail

inline void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << "path,transcript,subject,session,sentence_id\n";
  for (const auto& e : manifest.entries)
    out << e.path << ',' << e.transcript << ',' << e.subject_id << ',' << e.session_id << ','
        << e.sentence_id << "\n";
  out.close();
  if (!out) throw DataError("write failed: " + path.string());
}

// Loads and validates a manifest. Checks id ranges, alphabet membership,
// a consistent sentence_id -> transcript binding, and (unless disabled) that
// every referenced recording file exists.
inline Manifest load_manifest(const std::filesystem::path& path, bool check_paths = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  const Alphabet alphabet = Alphabet::standard();
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  if (line != "path,transcript,subject,session,sentence_id")
    throw DataError(path.string() + ": unexpected manifest header \"" + line + "\"");

  Manifest manifest;
  std::map<int, std::string> binding;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 5)
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected 5 fields, got " + std::to_string(fields.size()));
    ManifestEntry e;
    e.path = fields[0];
    e.transcript = fields[1];
    e.subject_id = detail::parse_int_field(fields[2], "subject");
    e.session_id = detail::parse_int_field(fields[3], "session");
    e.sentence_id = detail::parse_int_field(fields[4], "sentence_id");
    detail::validate_entry(e, alphabet);
    const auto [it, inserted] = binding.emplace(e.sentence_id, e.transcript);
    if (!inserted && it->second != e.transcript)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": sentence_id " +
                      std::to_string(e.sentence_id) + " bound to two different transcripts");
    if (check_paths && !std::filesystem::exists(e.path))
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": recording file not found: " + e.path);
    manifest.entries.push_back(std::move(e));
  }
  require_data(!manifest.entries.empty(), path.string() + ": manifest has no entries");
  return manifest;
}

// Reads the referenced recording and attaches the manifest metadata. The
// sentence id stored in the recording header must agree with the manifest.
inline EegRecording load_recording(const ManifestEntry& entry) {
  EegRecording rec = read_recording_file(entry.path);
  if (rec.sentence_id != entry.sentence_id)
    throw DataError(entry.path + ": header sentence_id " + std::to_string(rec.sentence_id) +
                    " disagrees with manifest value " + std::to_string(entry.sentence_id));
  rec.transcript = entry.transcript;
  rec.subject_id = entry.subject_id;
  rec.session_id = entry.session_id;
  return rec;
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

struct SplitResult {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;
};

// Seeded shuffled split; both sides are guaranteed non-empty and keep the
// original manifest order internally.
inline SplitResult split_train_test(const std::vector<ManifestEntry>& entries, double ratio,
                                    std::uint64_t seed) {
  require_param(entries.size() >= 2, "split: need at least two entries");
  require_param(ratio > 0.0 && ratio < 1.0, "split: ratio must be in (0, 1)");
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x73706c74 /* "splt" */));
  rng.shuffle(order);
  std::size_t n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(entries.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, entries.size() - 1);
  std::vector<std::size_t> train_idx(order.begin(),
                                     order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  SplitResult out;
  for (auto i : train_idx) out.train.push_back(entries[i]);
  for (auto i : test_idx) out.test.push_back(entries[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generator
// ---------------------------------------------------------------------------

struct SynthConfig {
  int subjects = 4;
  int sessions = 3;
  std::vector<std::string> sentences;     // empty selects default_sentences()
  double char_duration_ms = 150.0;        // mean per-character segment length
  double jitter_frac = 0.2;               // uniform +-20% duration jitter
  double noise_std = 0.3;                 // white noise sigma (signal RMS is 1)
  std::uint64_t seed = 0;

  void validate() const {
    require_param(subjects >= 1, "synth: subjects must be >= 1");
    require_param(sessions >= 1 && sessions <= kMaxSessions,
                  "synth: sessions must be in 1.." + std::to_string(kMaxSessions));
    require_param(char_duration_ms > 0.0, "synth: character duration must be positive");
    require_param(jitter_frac >= 0.0 && jitter_frac < 1.0, "synth: jitter must be in [0, 1)");
    require_param(noise_std >= 0.0, "synth: noise level must be >= 0");
  }
};

// Thirty fixed short sentences over the recognizer alphabet. Keeping them to
// two or three words keeps the CTC lattices small enough that the default
// training budget converges on commodity hardware, and the words are chosen
// pairwise at least two edits apart so no single character confusion turns
// one vocabulary word into another.
inline std::vector<std::string> default_sentences() {
  return {
      "the cat purred",
      "birds fly south",
      "rain fell hard",
      "wind blows cold",
      "snow melted fast",
      "waves hit rocks",
      "stars shine",
      "fires glow dim",
      "bells rang twice",
      "kids play games",
      "owls hunt mice",
      "frogs jump high",
      "ships sail west",
      "trains run late",
      "clocks tick away",
      "drums beat loud",
      "pipes burst open",
      "doors swing shut",
      "lamps faded out",
      "horns blare near",
      "gears grind on",
      "seeds sprout up",
      "vines climb",
      "tides pull boats",
      "moths drift by",
      "storms won't pass",
      "don't stop here",
      "the soup is warm",
      "we read books",
      "we walk to town",
  };
}

namespace detail {

// Seed-stream tags so jitter, noise, signatures, phases, and subject scales
// never share draws.
inline constexpr std::uint64_t kTagSignature = 0x73696731;  // "sig1"
inline constexpr std::uint64_t kTagPhase = 0x70687331;      // "phs1"
inline constexpr std::uint64_t kTagGain = 0x67616e31;       // "gan1"
inline constexpr std::uint64_t kTagSubject = 0x73756231;    // "sub1"
inline constexpr std::uint64_t kTagDuration = 0x64757231;   // "dur1"
inline constexpr std::uint64_t kTagNoise = 0x6e736531;      // "nse1"

inline constexpr int kSignatureComponents = 3;

// Quiet lead-in and lead-out around the rendered sentence, in samples at the
// raw rate. Edge characters then have complete feature windows on both sides.
inline constexpr int kPadSamples = 100;

// Fixed per-character sinusoid mixture. The three components are stratified
// across separated bands (5-15, 17-27, 29-39 Hz) so every character carries
// low, mid, and high frequency content and no two characters collapse onto
// the same spectral profile. The mixture is normalized to unit RMS and then
// scaled by a per-character level, so amplitude features carry character
// identity while the noise level still sets the SNR against a known base.
struct CharSignature {
  std::array<double, kSignatureComponents> freq_hz;
  std::array<double, kSignatureComponents> amp;
  double norm;   // sqrt(sum amp^2 / 2)
  double level;  // per-character RMS target in [0.6, 1.4]

  static CharSignature make(std::uint64_t seed, char c) {
    Rng rng(mix_seed(seed, kTagSignature, static_cast<std::uint64_t>(static_cast<unsigned char>(c))));
    CharSignature s{};
    double power = 0.0;
    for (int m = 0; m < kSignatureComponents; ++m) {
      const double band_lo = 5.0 + 12.0 * m;
      s.freq_hz[static_cast<std::size_t>(m)] = rng.uniform(band_lo, band_lo + 10.0);
      s.amp[static_cast<std::size_t>(m)] = rng.uniform(0.5, 1.0);
      power += s.amp[static_cast<std::size_t>(m)] * s.amp[static_cast<std::size_t>(m)] / 2.0;
    }
    s.norm = std::sqrt(power);
    s.level = rng.uniform(0.6, 1.4);
    return s;
  }
};

inline std::array<double, kSignatureComponents> channel_phases(std::uint64_t seed, char c,
                                                               int channel) {
  Rng rng(mix_seed(seed, kTagPhase, static_cast<std::uint64_t>(static_cast<unsigned char>(c)),
                   static_cast<std::uint64_t>(channel)));
  std::array<double, kSignatureComponents> phases{};
  for (auto& p : phases) p = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  return phases;
}

// Per-character, per-channel gain in [0.7, 1.3]. Across the 31 channels this
// forms a spatial amplitude fingerprint for the character, mimicking how
// articulation classes light up electrode sites unevenly.
inline double channel_gain(std::uint64_t seed, char c, int channel) {
  Rng rng(mix_seed(seed, kTagGain, static_cast<std::uint64_t>(static_cast<unsigned char>(c)),
                   static_cast<std::uint64_t>(channel)));
  return rng.uniform(0.7, 1.3);
}

}  // namespace detail

// Per-subject amplitude factor, uniform in [0.95, 1.05]. The band is kept
// narrow so held-out sessions stay recognizable across subjects; most
// scale-sensitive features are normalized downstream anyway.
inline double subject_scale(std::uint64_t seed, int subject_id) {
  Rng rng(mix_seed(seed, detail::kTagSubject, static_cast<std::uint64_t>(subject_id)));
  return rng.uniform(0.95, 1.05);
}

struct SynthOutput {
  std::vector<EegRecording> recordings;
  Manifest manifest;                        // paths are empty until written
  std::vector<std::vector<int>> segments;   // per-recording character lengths
};

// Generates the synthetic corpus: for every (subject, session, sentence) one
// recording, built from per-character signature segments with jittered
// durations plus white noise. Each character contributes its own spectral
// profile, RMS level, and per-channel gain pattern, so both spectral and
// amplitude features identify it. Segments restart the mixture phase, like a
// phase-locked evoked response, so every occurrence of a character renders
// the same channel waveforms up to duration jitter. A quiet 100 ms lead-in
// and lead-out bracket the sentence. Jitter and noise use separate streams,
// so noise_std = 0 leaves the clean signal unchanged.
inline SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> raw_sentences =
      cfg.sentences.empty() ? default_sentences() : cfg.sentences;
  require_param(static_cast<int>(raw_sentences.size()) <= kMaxSentenceId,
                "synth: at most " + std::to_string(kMaxSentenceId) + " sentences");
  std::vector<std::string> sentences;
  for (const auto& s : raw_sentences) sentences.push_back(normalize_transcript(s));

  // Signatures, phases, and channel gains are fixed for the whole corpus.
  std::map<char, detail::CharSignature> signatures;
  std::map<char, std::vector<std::array<double, detail::kSignatureComponents>>> phases;
  std::map<char, std::vector<double>> gains;
  for (const auto& s : sentences) {
    for (char c : s) {
      if (signatures.count(c)) continue;
      signatures.emplace(c, detail::CharSignature::make(cfg.seed, c));
      auto& per_channel = phases[c];
      per_channel.reserve(kNumChannels);
      auto& per_channel_gain = gains[c];
      per_channel_gain.reserve(kNumChannels);
      for (int ch = 0; ch < kNumChannels; ++ch) {
        per_channel.push_back(detail::channel_phases(cfg.seed, c, ch));
        per_channel_gain.push_back(detail::channel_gain(cfg.seed, c, ch));
      }
    }
  }

  SynthOutput out;
  const double fs = kRawSampleRateHz;
  for (int subject = 1; subject <= cfg.subjects; ++subject) {
    const double scale = subject_scale(cfg.seed, subject);
    for (int session = 1; session <= cfg.sessions; ++session) {
      for (int idx = 0; idx < static_cast<int>(sentences.size()); ++idx) {
        const std::string& text = sentences[static_cast<std::size_t>(idx)];
        const int sentence_id = idx + 1;
        Rng dur_rng(mix_seed(mix_seed(cfg.seed, detail::kTagDuration,
                                      static_cast<std::uint64_t>(subject)),
                             static_cast<std::uint64_t>(session),
                             static_cast<std::uint64_t>(sentence_id)));
        std::vector<int> seg_samples;
        seg_samples.reserve(text.size());
        long long total = 0;
        for (std::size_t i = 0; i < text.size(); ++i) {
          const double u = 2.0 * dur_rng.uniform01() - 1.0;
          const double ms = cfg.char_duration_ms * (1.0 + cfg.jitter_frac * u);
          const int n = std::max(1, static_cast<int>(std::llround(ms * fs / 1000.0)));
          seg_samples.push_back(n);
          total += n;
        }

        EegRecording rec;
        rec.sample_rate_hz = fs;
        rec.transcript = text;
        rec.subject_id = subject;
        rec.session_id = session;
        rec.sentence_id = sentence_id;
        const long long rows = total + 2LL * detail::kPadSamples;
        rec.samples.setZero(rows, kNumChannels);
        long long n0 = detail::kPadSamples;
        for (std::size_t i = 0; i < text.size(); ++i) {
          const char c = text[i];
          const auto& sig = signatures.at(c);
          const auto& ph = phases.at(c);
          const auto& gn = gains.at(c);
          const int len = seg_samples[i];
          for (int n = 0; n < len; ++n) {
            const double t = static_cast<double>(n) / fs;
            for (int ch = 0; ch < kNumChannels; ++ch) {
              double v = 0.0;
              for (int m = 0; m < detail::kSignatureComponents; ++m)
                v += sig.amp[static_cast<std::size_t>(m)] *
                     std::sin(2.0 * 3.14159265358979323846 *
                                  sig.freq_hz[static_cast<std::size_t>(m)] * t +
                              ph[static_cast<std::size_t>(ch)][static_cast<std::size_t>(m)]);
              rec.samples(n0 + n, ch) =
                  scale * sig.level * gn[static_cast<std::size_t>(ch)] * v / sig.norm;
            }
          }
          n0 += len;
        }

        if (cfg.noise_std > 0.0) {
          Rng noise_rng(mix_seed(mix_seed(cfg.seed, detail::kTagNoise,
                                          static_cast<std::uint64_t>(subject)),
                                 static_cast<std::uint64_t>(session),
                                 static_cast<std::uint64_t>(sentence_id)));
          for (long long n = 0; n < rows; ++n)
            for (int ch = 0; ch < kNumChannels; ++ch)
              rec.samples(n, ch) += cfg.noise_std * noise_rng.normal();
        }

        out.recordings.push_back(std::move(rec));
        out.segments.push_back(std::move(seg_samples));
        ManifestEntry e;
        e.transcript = text;
        e.subject_id = subject;
        e.session_id = session;
        e.sentence_id = sentence_id;
        out.manifest.entries.push_back(std::move(e));
      }
    }
  }
  return out;
}

// Reads one sentence per non-empty line.
inline std::vector<std::string> load_sentences_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line)
      if (c != ' ' && c != '\t') blank = false;
    if (!blank) out.push_back(line);
  }
  require_data(!out.empty(), path.string() + ": no sentences");
  return out;
}

}  // namespace data
}  // namespace eegrec
