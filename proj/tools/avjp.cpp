// Copyright (c) 2026 The avjp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// avjp command-line entry point. Exit codes: 0 success, 2 contract or
// usage error, 1 anything else.

#include <cstdio>
#include <exception>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "avjp/archive.hpp"
#include "avjp/checkpoint.hpp"
#include "avjp/config.hpp"
#include "avjp/corpus.hpp"
#include "avjp/evaluate.hpp"
#include "avjp/synthdata.hpp"
#include "avjp/train.hpp"

namespace {

using namespace avjp;

void cmd_train(const std::string& config_path, const std::string& out) {
  const RunConfig cfg = load_config(config_path);
  const auto ckpt = run_train(cfg, [](const LossRecord& r) {
    std::printf("%-16s epoch %2u  total %.5f  aam %.5f  adv %.5f  cycle %.5f  ortho %.5f\n",
                r.stage.c_str(), r.epoch, r.loss.total, r.loss.aam, r.loss.adversarial,
                r.loss.cycle, r.loss.ortho);
    std::fflush(stdout);
  });
  save_checkpoint(out, ckpt);
}

void cmd_eval(const std::string& ckpt_path, const std::string& manifest,
              const std::string& trials_path, const std::string& modality, bool snorm,
              const std::string& scores_out, const std::string& embeddings_out) {
  const auto ckpt = load_checkpoint(ckpt_path);
  const auto kind = parse_modality(modality);
  const auto entries = read_manifest(manifest);
  const auto trials = read_trials(trials_path);

  std::set<std::string> wanted;
  for (const auto& t : trials.trials) {
    wanted.insert(t.enroll_id);
    wanted.insert(t.test_id);
  }
  std::vector<Utterance> utts;
  for (const auto& e : entries)
    if (wanted.contains(e.utt_id)) utts.push_back(load_utterance(e));
  const auto table = extract_embeddings(restore_model(ckpt), utts);
  const auto report = score_trials(ckpt, table, trials, kind, snorm);
  std::cout << format_report(report);
  write_scores(scores_out, report.requested().scores);

  if (!embeddings_out.empty()) {
    std::vector<EmbeddingRecord> records;
    for (const auto& u : utts) {
      const auto& e = table.at(u.utt_id);
      const auto& v = kind == EvalModality::audio    ? e.audio
                      : kind == EvalModality::visual ? e.visual
                                                     : e.fused;
      records.push_back({u.utt_id, std::vector<float>(v.data(), v.data() + v.size())});
    }
    write_embeddings(embeddings_out, records);
  }
}

void cmd_heatmap(const std::string& ckpt_path, const std::string& utt, std::string manifest,
                 const std::string& out) {
  const auto ckpt = load_checkpoint(ckpt_path);
  if (manifest.empty()) manifest = ckpt.config.manifest;
  require(!manifest.empty(), "heatmap: no --manifest given and the checkpoint names none");
  for (const auto& e : read_manifest(manifest)) {
    if (e.utt_id != utt) continue;
    emit_heatmap(compute_heatmap(ckpt, load_utterance(e)), out);
    return;
  }
  throw ContractError("heatmap: utterance '" + utt + "' not in " + manifest);
}

void cmd_synth(const std::string& config_path, const std::string& out) {
  const RunConfig cfg = load_config(config_path);
  write_synthetic_corpus(cfg.synth, cfg.bank_dims(), out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual person verification with joint attentive pooling"};
  app.require_subcommand(1);

  std::string config, out, ckpt, manifest, trials, modality, scores, embeddings, utt;
  bool snorm = false;

  auto* train = app.add_subcommand("train", "Train a model from a config file");
  train->add_option("--config", config, "Config file")->required();
  train->add_option("--out", out, "Checkpoint to write")->required();

  auto* eval = app.add_subcommand("eval", "Score a trial list");
  eval->add_option("--ckpt", ckpt, "Checkpoint")->required();
  eval->add_option("--manifest", manifest, "Corpus manifest")->required();
  eval->add_option("--trials", trials, "Trial list")->required();
  eval->add_option("--modality", modality, "audio, visual, fused or ensemble")->required();
  eval->add_flag("--snorm", snorm, "Apply adaptive s-norm");
  eval->add_option("--scores", scores, "Score file to write")->required();
  eval->add_option("--embeddings", embeddings, "Optional embedding archive to write");

  auto* heatmap = app.add_subcommand("heatmap", "Write attention maps for one utterance");
  heatmap->add_option("--ckpt", ckpt, "Checkpoint")->required();
  heatmap->add_option("--utt", utt, "Utterance id")->required();
  heatmap->add_option("--out", out, "Output directory")->required();
  heatmap->add_option("--manifest", manifest, "Manifest (default: the training manifest)");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  synth->add_option("--config", config, "Config file")->required();
  synth->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) cmd_train(config, out);
    if (*eval) cmd_eval(ckpt, manifest, trials, modality, snorm, scores, embeddings);
    if (*heatmap) cmd_heatmap(ckpt, utt, manifest, out);
    if (*synth) cmd_synth(config, out);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
