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

#include "avjp/evaluate.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "avjp/archive.hpp"
#include "avjp/scoring.hpp"

namespace avjp {

namespace {

const Eigen::VectorXd& pick(const Embeddings& e, EvalModality m) {
  switch (m) {
    case EvalModality::audio: return e.audio;
    case EvalModality::visual: return e.visual;
    default: return e.fused;
  }
}

void finish_metrics(SystemReport& rep, const TrialList& trials);

SystemReport score_system(const Checkpoint& ckpt, const EmbeddingTable& table,
                          const TrialList& trials, EvalModality modality, bool snorm) {
  SystemReport rep;
  rep.name = std::string(to_string(modality));
  std::map<std::string, TopKStats<double>> stats;
  CohortStats<double> cohort;
  if (snorm) {
    const auto* arr = ckpt.find("cohort." + rep.name);
    require(arr != nullptr, "checkpoint has no " + rep.name + " cohort for s-norm");
    cohort.embeddings = arr->values;
    cohort.top_k = std::min<Eigen::Index>(ckpt.config.snorm_top_k, arr->values.rows());
  }
  const auto side = [&](const std::string& id) -> const TopKStats<double>& {
    auto it = stats.find(id);
    if (it == stats.end())
      it = stats.emplace(id, cohort_top_k_stats(pick(table.at(id), modality), cohort)).first;
    return it->second;
  };
  for (const auto& t : trials.trials) {
    const auto& e = pick(table.at(t.enroll_id), modality);
    const auto& x = pick(table.at(t.test_id), modality);
    double s = cosine_score(e, x);
    if (snorm) s = snorm_from_stats(s, side(t.enroll_id), side(t.test_id));
    rep.scores.push_back({t.enroll_id, t.test_id, s});
  }
  finish_metrics(rep, trials);
  return rep;
}

void finish_metrics(SystemReport& rep, const TrialList& trials) {
  ScoreSet<double> set;
  for (std::size_t i = 0; i < trials.size(); ++i)
    (trials.trials[i].target ? set.target_scores : set.nontarget_scores)
        .push_back(rep.scores[i].score);
  const auto eer = compute_eer(set);
  rep.eer = eer.eer;
  rep.eer_threshold = eer.threshold;
  rep.mindcf = compute_mindcf(set);
}

}  // namespace

EvalModality parse_modality(std::string_view s) {
  if (s == "audio") return EvalModality::audio;
  if (s == "visual") return EvalModality::visual;
  if (s == "fused") return EvalModality::fused;
  if (s == "ensemble") return EvalModality::ensemble;
  throw ContractError("unknown modality '" + std::string(s) +
                      "' (expected audio, visual, fused or ensemble)");
}

std::string_view to_string(EvalModality m) {
  switch (m) {
    case EvalModality::audio: return "audio";
    case EvalModality::visual: return "visual";
    case EvalModality::fused: return "fused";
    case EvalModality::ensemble: return "ensemble";
  }
  return "?";
}

EmbeddingTable extract_embeddings(const Model& m, const std::vector<Utterance>& utterances) {
  EmbeddingTable table;
  for (const auto& u : utterances) table.emplace(u.utt_id, embed(m, u));
  return table;
}

const SystemReport* EvalReport::find(std::string_view name) const {
  for (const auto& s : systems)
    if (s.name == name) return &s;
  return nullptr;
}

EvalReport score_trials(const Checkpoint& ckpt, const EmbeddingTable& table,
                        const TrialList& trials, EvalModality modality, bool snorm) {
  require(!trials.empty(), "trial list is empty");
  std::set<std::string> missing;
  for (const auto& t : trials.trials)
    for (const auto* id : {&t.enroll_id, &t.test_id})
      if (!table.contains(*id)) missing.insert(*id);
  if (!missing.empty()) {
    std::string msg = "trials reference " + std::to_string(missing.size()) + " unknown utterance id(s):";
    for (const auto& id : missing) msg += ' ' + id;
    throw ContractError(msg);
  }

  EvalReport report;
  if (modality != EvalModality::ensemble) {
    report.systems.push_back(score_system(ckpt, table, trials, modality, snorm));
    return report;
  }
  std::vector<std::vector<double>> parts;
  for (auto m : {EvalModality::audio, EvalModality::visual, EvalModality::fused}) {
    report.systems.push_back(score_system(ckpt, table, trials, m, snorm));
    std::vector<double> s;
    for (const auto& l : report.systems.back().scores) s.push_back(l.score);
    parts.push_back(std::move(s));
  }
  const auto fused = ensemble_scores(parts);
  SystemReport ens;
  ens.name = "ensemble";
  for (std::size_t i = 0; i < trials.size(); ++i)
    ens.scores.push_back({trials.trials[i].enroll_id, trials.trials[i].test_id, fused[i]});
  finish_metrics(ens, trials);
  report.systems.push_back(std::move(ens));
  return report;
}

EvalReport run_eval(const Checkpoint& ckpt, const std::vector<ManifestEntry>& manifest,
                    const TrialList& trials, EvalModality modality, bool snorm) {
  std::set<std::string> wanted;
  for (const auto& t : trials.trials) {
    wanted.insert(t.enroll_id);
    wanted.insert(t.test_id);
  }
  std::vector<Utterance> utts;
  for (const auto& e : manifest)
    if (wanted.contains(e.utt_id)) utts.push_back(load_utterance(e));
  const Model m = restore_model(ckpt);
  return score_trials(ckpt, extract_embeddings(m, utts), trials, modality, snorm);
}

std::string format_report(const EvalReport& report) {
  std::string out;
  char buf[160];
  for (const auto& s : report.systems) {
    std::snprintf(buf, sizeof(buf), "%-8s EER=%.4f%% minDCF=%.4f\n", s.name.c_str(),
                  100.0 * s.eer, s.mindcf);
    out += buf;
  }
  return out;
}

Heatmap compute_heatmap(const Checkpoint& ckpt, const Utterance& u) {
  const Model m = restore_model(ckpt);
  const auto view = attend(m, ckpt.config, u);
  return {view.track_a, view.track_v, view.audio.state.weights, view.visual.state.weights};
}

std::string format_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), c == 0 ? "%.6f" : ",%.6f", m(r, c));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      require(used == cell.size() && used > 0, "csv: bad number '" + cell + "'");
      row.push_back(v);
    }
    require(rows.empty() || row.size() == rows.front().size(), "csv: ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(Eigen::Index(rows.size()), rows.empty() ? 0 : Eigen::Index(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  return m;
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) { return parse_csv(io::read_file(path)); }

void emit_heatmap(const Heatmap& h, const std::filesystem::path& out_dir) {
  io::write_file(out_dir / "temporal_audio.csv", format_csv(h.temporal_audio.transpose()));
  io::write_file(out_dir / "temporal_visual.csv", format_csv(h.temporal_visual.transpose()));
  io::write_file(out_dir / "alpha_audio.csv", format_csv(h.alpha_audio));
  io::write_file(out_dir / "alpha_visual.csv", format_csv(h.alpha_visual));
}

}  // namespace avjp
