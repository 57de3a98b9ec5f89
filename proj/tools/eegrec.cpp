// tools/eegrec.cpp

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

// Command-line front end for the recognition pipeline. Every subcommand maps
// to one stage; run-all chains them in order. Exit codes: 0 success, 2 bad
// usage or parameters, 3 data or file problems, 4 training/numeric failures.

#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "eegrec/errors.hpp"
#include "eegrec/pipeline.hpp"

namespace {

using eegrec::pipeline::PipelineConfig;

struct Overrides {
  CLI::App* app = nullptr;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string work_dir;
  std::string config_path;
  int beam_width = 0;
  double lm_weight = 0.0;
  double insertion_bonus = 0.0;
  int nbest = 0;
  int epochs = 0;
  double noise_std = 0.0;

  void apply(PipelineConfig& cfg) const {
    if (app->count("--seed")) {
      cfg.seed = seed;
      cfg.synth.seed = seed;
      cfg.train_cfg.seed = seed;
    }
    if (app->count("--threads")) cfg.threads = threads;
    if (app->count("--work-dir")) cfg.work_dir = work_dir;
    if (app->count("--beam-width")) cfg.beam.beam_width = beam_width;
    if (app->count("--lm-weight")) cfg.beam.lm_weight = lm_weight;
    if (app->count("--ins-bonus")) cfg.beam.insertion_bonus = insertion_bonus;
    if (app->count("--nbest")) cfg.beam.nbest = nbest;
    if (app->count("--epochs")) cfg.train_cfg.epochs = epochs;
    if (app->count("--noise-std")) cfg.synth.noise_std = noise_std;
    cfg.validate();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"silent-speech recognition pipeline on synthetic EEG"};
  app.require_subcommand(1);

  Overrides ov;
  ov.app = &app;
  app.add_option("--config", ov.config_path, "pipeline configuration JSON");
  app.add_option("--seed", ov.seed, "master random seed");
  app.add_option("--threads", ov.threads, "worker threads (0 = hardware)");
  app.add_option("--work-dir", ov.work_dir, "artifact directory");
  app.add_option("--beam-width", ov.beam_width, "decoder beam width");
  app.add_option("--lm-weight", ov.lm_weight, "LM shallow-fusion weight");
  app.add_option("--ins-bonus", ov.insertion_bonus, "per-character insertion bonus");
  app.add_option("--nbest", ov.nbest, "hypotheses to keep per sentence");
  app.add_option("--epochs", ov.epochs, "training epochs");
  app.add_option("--noise-std", ov.noise_std, "synthetic noise level");

  const std::map<std::string, std::pair<const char*, std::function<void(const PipelineConfig&)>>>
      stages = {
          {"synth", {"generate the synthetic corpus", eegrec::pipeline::stage_synth}},
          {"preprocess", {"band-pass and notch filter the recordings",
                          eegrec::pipeline::stage_preprocess}},
          {"features", {"extract windowed channel statistics", eegrec::pipeline::stage_features}},
          {"kpca-fit", {"fit the kernel PCA projector", eegrec::pipeline::stage_kpca_fit}},
          {"kpca-transform", {"project features onto kernel components",
                              eegrec::pipeline::stage_kpca_transform}},
          {"lm-train", {"train the character n-gram model", eegrec::pipeline::stage_lm_train}},
          {"train", {"train the CTC network", eegrec::pipeline::stage_train}},
          {"decode", {"beam-decode the test split", eegrec::pipeline::stage_decode}},
          {"eval", {"score hypotheses and write the subset report",
                    eegrec::pipeline::stage_eval}},
          {"run-all", {"run every stage in order", eegrec::pipeline::run_all}},
      };
  for (const auto& [name, stage] : stages) app.add_subcommand(name, stage.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg;
    if (!ov.config_path.empty()) cfg = eegrec::pipeline::load_config(ov.config_path);
    ov.apply(cfg);
    const std::string chosen = app.get_subcommands().front()->get_name();
    stages.at(chosen).second(cfg);
    return 0;
  } catch (const eegrec::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const eegrec::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const eegrec::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
