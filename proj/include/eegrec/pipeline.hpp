// include/eegrec/pipeline.hpp

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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "eegrec/data.hpp"
#include "eegrec/decode.hpp"
#include "eegrec/dsp.hpp"
#include "eegrec/errors.hpp"
#include "eegrec/eval.hpp"
#include "eegrec/features.hpp"
#include "eegrec/kpca.hpp"
#include "eegrec/lm.hpp"
#include "eegrec/net.hpp"
#include "eegrec/util.hpp"

namespace eegrec {
namespace pipeline {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string work_dir = "work";
  double split_ratio = 0.8;

  data::SynthConfig synth;                 // synth.seed is overridden by seed
  std::string sentences_file;              // optional replacement sentence list
  int num_sentences = 0;                   // 0 = all bundled sentences
  dsp::PreprocessParams preprocess;
  features::WindowConfig window;
  kpca::KpcaConfig kpca_cfg;
  int kpca_fit_pool = 4000;                // frame cap for the kernel matrix
  int lm_order = 4;
  double lm_discount = 0.75;
  net::NetConfig net_cfg;
  net::TrainConfig train_cfg;              // train_cfg.seed is overridden by seed
  decode::BeamConfig beam;

  void validate() const {
    require_param(split_ratio > 0.0 && split_ratio < 1.0, "config: split_ratio must be in (0, 1)");
    require_param(threads >= 0, "config: threads must be >= 0");
    require_param(kpca_fit_pool >= 1, "config: kpca fit pool must be >= 1");
    synth.validate();
    window.validate();
    net_cfg.validate();
    beam.validate();
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where,
                       const std::vector<std::string>& allowed) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParameterError("config: unknown key \"" + key + "\" in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::maybe;
  PipelineConfig cfg;
  check_keys(j, "root",
             {"seed", "threads", "work_dir", "split_ratio", "synth", "preprocess", "window",
              "kpca", "lm", "net", "train", "decoder"});
  maybe(j, "seed", cfg.seed);
  maybe(j, "threads", cfg.threads);
  maybe(j, "work_dir", cfg.work_dir);
  maybe(j, "split_ratio", cfg.split_ratio);
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    check_keys(s, "synth",
               {"subjects", "sessions", "num_sentences", "sentences_file", "char_duration_ms",
                "jitter_frac", "noise_std"});
    maybe(s, "subjects", cfg.synth.subjects);
    maybe(s, "sessions", cfg.synth.sessions);
    maybe(s, "num_sentences", cfg.num_sentences);
    maybe(s, "sentences_file", cfg.sentences_file);
    maybe(s, "char_duration_ms", cfg.synth.char_duration_ms);
    maybe(s, "jitter_frac", cfg.synth.jitter_frac);
    maybe(s, "noise_std", cfg.synth.noise_std);
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    check_keys(p, "preprocess", {"band_lo_hz", "band_hi_hz", "notch_hz", "notch_q"});
    maybe(p, "band_lo_hz", cfg.preprocess.bandpass_lo_hz);
    maybe(p, "band_hi_hz", cfg.preprocess.bandpass_hi_hz);
    maybe(p, "notch_hz", cfg.preprocess.notch_hz);
    maybe(p, "notch_q", cfg.preprocess.notch_q);
  }
  if (j.contains("window")) {
    const auto& w = j.at("window");
    check_keys(w, "window", {"window_len", "hop"});
    maybe(w, "window_len", cfg.window.window_len_samples);
    maybe(w, "hop", cfg.window.hop_samples);
  }
  if (j.contains("kpca")) {
    const auto& k = j.at("kpca");
    check_keys(k, "kpca", {"components", "degree", "gamma", "offset", "standardize", "fit_pool"});
    maybe(k, "components", cfg.kpca_cfg.components);
    maybe(k, "degree", cfg.kpca_cfg.degree);
    maybe(k, "gamma", cfg.kpca_cfg.gamma);
    maybe(k, "offset", cfg.kpca_cfg.offset);
    maybe(k, "standardize", cfg.kpca_cfg.standardize);
    maybe(k, "fit_pool", cfg.kpca_fit_pool);
  }
  if (j.contains("lm")) {
    const auto& l = j.at("lm");
    check_keys(l, "lm", {"order", "discount"});
    maybe(l, "order", cfg.lm_order);
    maybe(l, "discount", cfg.lm_discount);
  }
  if (j.contains("net")) {
    const auto& n = j.at("net");
    check_keys(n, "net", {"hidden1", "hidden2", "filters", "kernel", "residual", "dropout"});
    maybe(n, "hidden1", cfg.net_cfg.hidden1);
    maybe(n, "hidden2", cfg.net_cfg.hidden2);
    maybe(n, "filters", cfg.net_cfg.filters);
    maybe(n, "kernel", cfg.net_cfg.kernel);
    maybe(n, "residual", cfg.net_cfg.residual);
    maybe(n, "dropout", cfg.net_cfg.dropout);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, "train",
               {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "clip_norm"});
    maybe(t, "epochs", cfg.train_cfg.epochs);
    maybe(t, "batch_size", cfg.train_cfg.batch_size);
    maybe(t, "lr", cfg.train_cfg.adam.lr);
    maybe(t, "beta1", cfg.train_cfg.adam.beta1);
    maybe(t, "beta2", cfg.train_cfg.adam.beta2);
    maybe(t, "eps", cfg.train_cfg.adam.eps);
    maybe(t, "clip_norm", cfg.train_cfg.clip_norm);
  }
  if (j.contains("decoder")) {
    const auto& d = j.at("decoder");
    check_keys(d, "decoder", {"beam_width", "lm_weight", "insertion_bonus", "nbest"});
    maybe(d, "beam_width", cfg.beam.beam_width);
    maybe(d, "lm_weight", cfg.beam.lm_weight);
    maybe(d, "insertion_bonus", cfg.beam.insertion_bonus);
    maybe(d, "nbest", cfg.beam.nbest);
  }

  cfg.synth.seed = cfg.seed;
  cfg.train_cfg.seed = cfg.seed;
  if (cfg.num_sentences < 0)
    throw ParameterError("config: num_sentences must be >= 0");
  cfg.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["work_dir"] = cfg.work_dir;
  j["split_ratio"] = cfg.split_ratio;
  j["synth"] = {{"subjects", cfg.synth.subjects},
                {"sessions", cfg.synth.sessions},
                {"num_sentences", cfg.num_sentences},
                {"sentences_file", cfg.sentences_file},
                {"char_duration_ms", cfg.synth.char_duration_ms},
                {"jitter_frac", cfg.synth.jitter_frac},
                {"noise_std", cfg.synth.noise_std}};
  j["preprocess"] = {{"band_lo_hz", cfg.preprocess.bandpass_lo_hz},
                     {"band_hi_hz", cfg.preprocess.bandpass_hi_hz},
                     {"notch_hz", cfg.preprocess.notch_hz},
                     {"notch_q", cfg.preprocess.notch_q}};
  j["window"] = {{"window_len", cfg.window.window_len_samples}, {"hop", cfg.window.hop_samples}};
  j["kpca"] = {{"components", cfg.kpca_cfg.components}, {"degree", cfg.kpca_cfg.degree},
               {"gamma", cfg.kpca_cfg.gamma},           {"offset", cfg.kpca_cfg.offset},
               {"standardize", cfg.kpca_cfg.standardize}, {"fit_pool", cfg.kpca_fit_pool}};
  j["lm"] = {{"order", cfg.lm_order}, {"discount", cfg.lm_discount}};
  j["net"] = {{"hidden1", cfg.net_cfg.hidden1}, {"hidden2", cfg.net_cfg.hidden2},
              {"filters", cfg.net_cfg.filters}, {"kernel", cfg.net_cfg.kernel},
              {"residual", cfg.net_cfg.residual}, {"dropout", cfg.net_cfg.dropout}};
  j["train"] = {{"epochs", cfg.train_cfg.epochs},   {"batch_size", cfg.train_cfg.batch_size},
                {"lr", cfg.train_cfg.adam.lr},      {"beta1", cfg.train_cfg.adam.beta1},
                {"beta2", cfg.train_cfg.adam.beta2}, {"eps", cfg.train_cfg.adam.eps},
                {"clip_norm", cfg.train_cfg.clip_norm}};
  j["decoder"] = {{"beam_width", cfg.beam.beam_width},
                  {"lm_weight", cfg.beam.lm_weight},
                  {"insertion_bonus", cfg.beam.insertion_bonus},
                  {"nbest", cfg.beam.nbest}};
  return j;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(path.string() + ": invalid JSON (" + e.what() + ")");
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(path.string() + ": bad config value (" + e.what() + ")");
  }
}

// ---------------------------------------------------------------------------
// Work directory layout
// ---------------------------------------------------------------------------

namespace paths {
inline std::filesystem::path raw_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "raw";
}
inline std::filesystem::path preprocessed_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "preprocessed";
}
inline std::filesystem::path features_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "features";
}
inline std::filesystem::path kpca_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "kpca";
}
inline std::filesystem::path reduced_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "reduced";
}
inline std::filesystem::path lm_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "lm";
}
inline std::filesystem::path model_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "model";
}
inline std::filesystem::path decode_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "decode";
}
inline std::filesystem::path report_dir(const PipelineConfig& c) {
  return std::filesystem::path(c.work_dir) / "report";
}
inline std::filesystem::path kpca_model(const PipelineConfig& c) {
  return kpca_dir(c) / "kpca.bin";
}
inline std::filesystem::path kpca_variance_csv(const PipelineConfig& c) {
  return kpca_dir(c) / "explained_variance.csv";
}
inline std::filesystem::path lm_model(const PipelineConfig& c) { return lm_dir(c) / "char4.clm"; }
inline std::filesystem::path model_checkpoint(const PipelineConfig& c) {
  return model_dir(c) / "model.eegc";
}
inline std::filesystem::path loss_curve(const PipelineConfig& c) {
  return model_dir(c) / "loss_curve.csv";
}
inline std::filesystem::path decoded_csv(const PipelineConfig& c) {
  return decode_dir(c) / "decoded.csv";
}
inline std::filesystem::path report_csv(const PipelineConfig& c) {
  return report_dir(c) / "report.csv";
}
inline std::filesystem::path report_table(const PipelineConfig& c) {
  return report_dir(c) / "report.txt";
}
}  // namespace paths

namespace detail {

// Every stage re-writes the effective configuration next to its outputs so a
// work directory is self-describing.
inline void echo_config(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.work_dir);
  std::ofstream out(std::filesystem::path(cfg.work_dir) / "config.json", std::ios::trunc);
  if (!out) throw DataError("cannot write config echo in " + cfg.work_dir);
  out << config_to_json(cfg).dump(2) << "\n";
}

inline std::string recording_stem(const data::ManifestEntry& e) {
  std::ostringstream name;
  name << "rec_s" << std::setw(2) << std::setfill('0') << e.subject_id << "_e" << e.session_id
       << "_n" << std::setw(2) << std::setfill('0') << e.sentence_id;
  return name.str();
}

inline data::Manifest load_stage_manifest(const std::filesystem::path& dir,
                                          const std::string& stage) {
  const auto path = dir / "manifest.csv";
  if (!std::filesystem::exists(path))
    throw DataError("missing " + path.string() + "; run the " + stage + " stage first");
  return data::load_manifest(path);
}

inline std::vector<std::string> effective_sentences(const PipelineConfig& cfg) {
  std::vector<std::string> sentences = cfg.sentences_file.empty()
                                           ? data::default_sentences()
                                           : data::load_sentences_file(cfg.sentences_file);
  if (cfg.num_sentences > 0) {
    require_param(cfg.num_sentences <= static_cast<int>(sentences.size()),
                  "config: num_sentences exceeds the sentence list");
    sentences.resize(static_cast<std::size_t>(cfg.num_sentences));
  }
  return sentences;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

// Writes raw recordings and the manifest under <work>/raw.
inline void stage_synth(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::SynthConfig synth_cfg = cfg.synth;
  synth_cfg.sentences = detail::effective_sentences(cfg);
  data::SynthOutput out = data::synth_generate(synth_cfg);

  const auto dir = paths::raw_dir(cfg);
  std::filesystem::create_directories(dir);
  long long total_samples = 0;
  for (std::size_t i = 0; i < out.recordings.size(); ++i) {
    auto& entry = out.manifest.entries[i];
    const auto path = dir / (detail::recording_stem(entry) + ".txt");
    write_recording_file(path.string(), out.recordings[i]);
    entry.path = path.string();
    total_samples += out.recordings[i].samples.rows();
  }
  data::save_manifest(dir / "manifest.csv", out.manifest);
  std::cout << "synth: wrote " << out.recordings.size() << " recordings (" << total_samples
            << " samples) to " << dir.string() << "\n";
}

// Band-pass + notch filtering of every raw recording into <work>/preprocessed.
inline void stage_preprocess(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest = detail::load_stage_manifest(paths::raw_dir(cfg), "synth");
  const auto dir = paths::preprocessed_dir(cfg);
  std::filesystem::create_directories(dir);
  for (auto& entry : manifest.entries) {
    EegRecording rec = data::load_recording(entry);
    EegRecording filtered = dsp::preprocess_recording(rec, cfg.preprocess);
    const auto path = dir / (detail::recording_stem(entry) + ".txt");
    write_recording_file(path.string(), filtered);
    entry.path = path.string();
  }
  data::save_manifest(dir / "manifest.csv", manifest);
  std::cout << "preprocess: filtered " << manifest.entries.size() << " recordings to "
            << dir.string() << "\n";
}

// Windowed statistical features for every preprocessed recording.
inline void stage_features(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest =
      detail::load_stage_manifest(paths::preprocessed_dir(cfg), "preprocess");
  const auto dir = paths::features_dir(cfg);
  std::filesystem::create_directories(dir);
  long long total_frames = 0;
  for (auto& entry : manifest.entries) {
    EegRecording rec = data::load_recording(entry);
    features::FeatureSequence seq = features::extract_features(rec, cfg.window);
    const auto path = dir / (detail::recording_stem(entry) + ".feat");
    features::write_feature_file(path.string(), seq);
    entry.path = path.string();
    total_frames += seq.num_frames();
  }
  data::save_manifest(dir / "manifest.csv", manifest);
  std::cout << "features: " << manifest.entries.size() << " sequences, " << total_frames
            << " frames of dim " << features::kRawFeatureDim << "\n";
}

namespace detail {

// Stacks frames of the training-split feature files, deterministically
// subsampled to at most `cap` rows with even coverage.
inline Eigen::MatrixXd gather_fit_pool(const std::vector<data::ManifestEntry>& train_entries,
                                       int cap) {
  std::vector<features::FeatureSequence> seqs;
  long long total = 0;
  for (const auto& e : train_entries) {
    seqs.push_back(features::read_feature_file(e.path));
    total += seqs.back().num_frames();
  }
  require_data(total > 0, "kpca: no training frames");
  const Eigen::Index dim = seqs.front().dim();
  Eigen::MatrixXd all(total, dim);
  Eigen::Index row = 0;
  for (const auto& s : seqs) {
    all.block(row, 0, s.num_frames(), dim) = s.frames;
    row += s.num_frames();
  }
  if (total <= cap) return all;
  Eigen::MatrixXd pool(cap, dim);
  for (int i = 0; i < cap; ++i) {
    const auto src = static_cast<Eigen::Index>(
        (static_cast<long long>(i) * total) / cap);
    pool.row(i) = all.row(src);
  }
  return pool;
}

}  // namespace detail

// Fits the kernel projector on the training split of the feature files.
inline void stage_kpca_fit(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest = detail::load_stage_manifest(paths::features_dir(cfg), "features");
  const data::SplitResult split =
      data::split_train_test(manifest.entries, cfg.split_ratio, cfg.seed);
  const Eigen::MatrixXd pool = detail::gather_fit_pool(split.train, cfg.kpca_fit_pool);
  const kpca::KpcaProjector proj = kpca::KpcaProjector::fit(pool, cfg.kpca_cfg);
  std::filesystem::create_directories(paths::kpca_dir(cfg));
  proj.save(paths::kpca_model(cfg).string());
  const auto curve = proj.explained_variance_curve();
  std::ofstream ev(paths::kpca_variance_csv(cfg), std::ios::trunc);
  if (!ev) throw DataError("cannot write " + paths::kpca_variance_csv(cfg).string());
  ev << "component,cumulative_ratio\n";
  ev << std::setprecision(17);
  for (const auto& [idx, ratio] : curve) ev << idx << ',' << ratio << "\n";
  double kept_ratio = 0.0;
  if (proj.components() <= static_cast<int>(curve.size()))
    kept_ratio = curve[static_cast<std::size_t>(proj.components()) - 1].second;
  std::cout << "kpca-fit: pool " << pool.rows() << "x" << pool.cols() << ", kept "
            << proj.components() << " components, cumulative explained variance "
            << kept_ratio << "\n";
}

// Projects every feature file onto the kernel components.
inline void stage_kpca_transform(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest = detail::load_stage_manifest(paths::features_dir(cfg), "features");
  if (!std::filesystem::exists(paths::kpca_model(cfg)))
    throw DataError("missing " + paths::kpca_model(cfg).string() + "; run kpca-fit first");
  const kpca::KpcaProjector proj = kpca::KpcaProjector::load(paths::kpca_model(cfg).string());
  const auto dir = paths::reduced_dir(cfg);
  std::filesystem::create_directories(dir);
  for (auto& entry : manifest.entries) {
    features::FeatureSequence seq = features::read_feature_file(entry.path);
    features::FeatureSequence reduced = seq;
    reduced.frames = proj.transform_matrix(seq.frames);
    reduced.reduced = true;
    const auto path = dir / (detail::recording_stem(entry) + ".feat");
    features::write_feature_file(path.string(), reduced);
    entry.path = path.string();
  }
  data::save_manifest(dir / "manifest.csv", manifest);
  std::cout << "kpca-transform: reduced " << manifest.entries.size() << " sequences to dim "
            << proj.components() << "\n";
}

// Trains the character language model on the training-split transcripts.
inline void stage_lm_train(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest = detail::load_stage_manifest(paths::raw_dir(cfg), "synth");
  const data::SplitResult split =
      data::split_train_test(manifest.entries, cfg.split_ratio, cfg.seed);
  std::vector<std::string> corpus;
  for (const auto& e : split.train) corpus.push_back(e.transcript);
  const lm::CharLm model =
      lm::CharLm::train(corpus, Alphabet::standard(), cfg.lm_order, cfg.lm_discount);
  std::filesystem::create_directories(paths::lm_dir(cfg));
  model.save(paths::lm_model(cfg).string());
  std::cout << "lm-train: " << corpus.size() << " sentences, " << model.context_count()
            << " contexts\n";
}

// Trains the CTC network on the training split of the reduced features.
inline void stage_train(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest =
      detail::load_stage_manifest(paths::reduced_dir(cfg), "kpca-transform");
  const data::SplitResult split =
      data::split_train_test(manifest.entries, cfg.split_ratio, cfg.seed);

  const Alphabet alphabet = Alphabet::standard();
  std::vector<net::TrainExample> dataset;
  for (const auto& e : split.train) {
    const features::FeatureSequence seq = features::read_feature_file(e.path);
    dataset.push_back({seq.frames, e.transcript});
  }
  net::NetConfig net_cfg = cfg.net_cfg;
  net_cfg.input_dim = cfg.kpca_cfg.components;
  net_cfg.classes = alphabet.num_classes();
  const net::TrainResult result =
      net::train(dataset, alphabet, net_cfg, cfg.train_cfg, cfg.threads);

  std::filesystem::create_directories(paths::model_dir(cfg));
  net::save_checkpoint(paths::model_checkpoint(cfg).string(), result.params, alphabet,
                       cfg.train_cfg);
  std::ofstream curve(paths::loss_curve(cfg), std::ios::trunc);
  if (!curve) throw DataError("cannot write " + paths::loss_curve(cfg).string());
  curve << "epoch,mean_loss\n";
  curve << std::setprecision(17);
  for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
    curve << (i + 1) << ',' << result.loss_curve[i] << "\n";
  std::cout << "train: " << dataset.size() << " examples, " << result.loss_curve.size()
            << " epochs, final mean loss " << result.loss_curve.back();
  if (result.skipped > 0) std::cout << " (" << result.skipped << " skipped)";
  std::cout << "\n";
}

// Beam-decodes the test split and writes reference/hypothesis pairs.
inline void stage_decode(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  data::Manifest manifest =
      detail::load_stage_manifest(paths::reduced_dir(cfg), "kpca-transform");
  const data::SplitResult split =
      data::split_train_test(manifest.entries, cfg.split_ratio, cfg.seed);
  if (!std::filesystem::exists(paths::model_checkpoint(cfg)))
    throw DataError("missing " + paths::model_checkpoint(cfg).string() + "; run train first");
  const net::Checkpoint ckpt = net::load_checkpoint(paths::model_checkpoint(cfg).string());

  const bool use_lm = cfg.beam.lm_weight > 0.0;
  lm::CharLm lm_model = lm::CharLm::uniform(ckpt.alphabet, cfg.lm_order, cfg.lm_discount);
  if (use_lm) {
    if (!std::filesystem::exists(paths::lm_model(cfg)))
      throw DataError("missing " + paths::lm_model(cfg).string() + "; run lm-train first");
    lm_model = lm::CharLm::load(paths::lm_model(cfg).string());
  }

  std::filesystem::create_directories(paths::decode_dir(cfg));
  std::ofstream out(paths::decoded_csv(cfg), std::ios::trunc);
  if (!out) throw DataError("cannot write " + paths::decoded_csv(cfg).string());
  out << "subject,session,sentence_id,ref,hyp\n";

  std::vector<const data::ManifestEntry*> entries;
  for (const auto& e : split.test) entries.push_back(&e);
  std::vector<std::string> hyps(entries.size());
  parallel_for(entries.size(), cfg.threads, [&](std::size_t i) {
    const features::FeatureSequence seq = features::read_feature_file(entries[i]->path);
    const Eigen::MatrixXd lattice =
        net::model_forward(ckpt.params, seq.frames, /*train_mode=*/false, 0);
    hyps[i] = decode::beam_search(lattice, ckpt.alphabet, use_lm ? &lm_model : nullptr,
                                  cfg.beam)
                  .front()
                  .text;
  });
  for (std::size_t i = 0; i < entries.size(); ++i)
    out << entries[i]->subject_id << ',' << entries[i]->session_id << ','
        << entries[i]->sentence_id << ',' << entries[i]->transcript << ',' << hyps[i] << "\n";
  out.close();
  if (!out) throw DataError("write failed: " + paths::decoded_csv(cfg).string());
  std::cout << "decode: " << entries.size() << " test sentences -> "
            << paths::decoded_csv(cfg).string() << "\n";
}

// Scores the decoded test split and writes the subset-ladder report.
inline void stage_eval(const PipelineConfig& cfg) {
  detail::echo_config(cfg);
  const auto decoded = paths::decoded_csv(cfg);
  if (!std::filesystem::exists(decoded))
    throw DataError("missing " + decoded.string() + "; run decode first");
  std::ifstream in(decoded);
  if (!in) throw DataError("cannot open: " + decoded.string());
  std::string line;
  if (!std::getline(in, line) || line != "subject,session,sentence_id,ref,hyp")
    throw DataError(decoded.string() + ": unexpected header");
  std::vector<eval::SweepItem> items;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    // subject,session,sentence_id,ref,hyp with no commas inside transcripts
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 5)
      throw DataError(decoded.string() + ":" + std::to_string(line_no) + ": expected 5 fields");
    eval::SweepItem item;
    item.sentence_id = data::detail::parse_int_field(fields[2], "sentence_id");
    item.ref = fields[3];
    item.hyp = fields[4];
    items.push_back(std::move(item));
  }
  require_data(!items.empty(), decoded.string() + ": no decoded sentences");

  const eval::SweepReport report = eval::vocab_sweep(items, {5, 10, 15, 20, 25, 30}, &std::cerr);
  std::filesystem::create_directories(paths::report_dir(cfg));
  std::ofstream csv(paths::report_csv(cfg), std::ios::trunc);
  if (!csv) throw DataError("cannot write " + paths::report_csv(cfg).string());
  eval::write_sweep_csv(csv, report);
  std::ofstream table(paths::report_table(cfg), std::ios::trunc);
  if (!table) throw DataError("cannot write " + paths::report_table(cfg).string());
  eval::write_sweep_table(table, report);
  eval::write_sweep_table(std::cout, report);

  std::vector<eval::ScorePair> pairs;
  for (const auto& it : items) pairs.push_back({it.ref, it.hyp});
  std::cout << "eval: overall wer " << std::fixed << std::setprecision(2) << eval::wer(pairs)
            << " cer " << eval::cer(pairs) << std::defaultfloat << "\n";
}

inline void run_all(const PipelineConfig& cfg) {
  stage_synth(cfg);
  stage_preprocess(cfg);
  stage_features(cfg);
  stage_kpca_fit(cfg);
  stage_kpca_transform(cfg);
  stage_lm_train(cfg);
  stage_train(cfg);
  stage_decode(cfg);
  stage_eval(cfg);
}

}  // namespace pipeline
}  // namespace eegrec
