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

#include <cmath>
#include <random>
#include <regex>
#include <sstream>

#include "avjp/archive.hpp"
#include "avjp/evaluate.hpp"
#include "avjp/train.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "tempdir.hpp"

using namespace avjp;
using Eigen::MatrixXd;

namespace {

/// One tiny corpus shared by every test in this file.
struct Corpus {
  testing::TempDir dir{"train"};
  RunConfig cfg = testing::tiny_config();
  TrainingSet data;
  std::vector<ManifestEntry> test_entries;
  TrialList trials;

  Corpus() {
    testing::make_corpus(cfg, dir.path());
    data = make_training_set(load_corpus(read_manifest(cfg.manifest)));
    test_entries = read_manifest(dir / "manifest_test.txt");
    trials = read_trials(dir / "trials.txt");
  }
};

Corpus& corpus() {
  static Corpus c;
  return c;
}

const MatrixXd& array(const Checkpoint& c, const std::string& name) {
  const auto* a = c.find(name);
  REQUIRE(a != nullptr);
  return a->values;
}

bool same_group(const Checkpoint& a, const Checkpoint& b, const std::string& prefix) {
  bool any = false;
  for (const auto& x : a.arrays) {
    if (!x.name.starts_with(prefix)) continue;
    any = true;
    if (array(b, x.name) != x.values) return false;
  }
  return any;
}

}  // namespace

TEST_CASE("training set labels follow sorted identity ids") {
  std::vector<Utterance> utts(3);
  utts[0].identity_id = "zed";
  utts[1].identity_id = "amy";
  utts[2].identity_id = "zed";
  const auto set = make_training_set(utts);
  CHECK(set.identities == std::vector<std::string>{"amy", "zed"});
  CHECK(set.labels == std::vector<Eigen::Index>{1, 0, 1});
  CHECK_THROWS_AS(make_training_set({}), ContractError);
}

TEST_CASE("learning-rate schedule halves every two epochs") {
  const RunConfig cfg;
  CHECK(learning_rate(cfg, 1) == 0.01);
  CHECK(learning_rate(cfg, 2) == 0.01);
  CHECK(learning_rate(cfg, 3) == 0.005);
  CHECK(learning_rate(cfg, 4) == 0.005);
  CHECK(learning_rate(cfg, 5) == 0.0025);
}

TEST_CASE("zero epochs give initialized parameters and empty history") {
  auto& c = corpus();
  auto cfg = c.cfg;
  cfg.epochs = 0;
  const auto ckpt = run_train(cfg, c.data);
  CHECK(ckpt.history.empty());
  CHECK(ckpt.epochs_completed == 0);
  CHECK(ckpt.num_classes == 4);
  std::mt19937_64 rng(cfg.seed);
  Model fresh = init_model(cfg, 4, rng);
  const auto arrays = model_arrays(fresh);
  for (const auto& a : arrays) CHECK(array(ckpt, a.name) == a.values);
  CHECK(array(ckpt, "cohort.fused").rows() == 4);
  CHECK(array(ckpt, "cohort.audio").cols() == 2 * cfg.channels);
}

TEST_CASE("same config and seed give byte-identical checkpoints") {
  auto& c = corpus();
  const auto a = encode_checkpoint(run_train(c.cfg, c.data));
  const auto b = encode_checkpoint(run_train(c.cfg, c.data));
  CHECK(a == b);
  auto other = c.cfg;
  other.seed = 2;
  CHECK(encode_checkpoint(run_train(other, c.data)) != a);
}

TEST_CASE("two-stage history") {
  auto& c = corpus();
  std::vector<LossRecord> seen;
  const auto ckpt = run_train(c.cfg, c.data, [&](const LossRecord& r) { seen.push_back(r); });
  REQUIRE(ckpt.history.size() == 3 * std::size_t(c.cfg.epochs + 1));
  CHECK(seen.size() == ckpt.history.size());
  CHECK(ckpt.epochs_completed == 3 * std::uint32_t(c.cfg.epochs));
  CHECK(ckpt.history.front().stage == "unimodal_audio");
  CHECK(ckpt.history.front().epoch == 0);
  CHECK(ckpt.history.back().stage == "joint");
  CHECK(ckpt.history.back().epoch == std::uint32_t(c.cfg.epochs));
  for (const auto& r : ckpt.history) {
    CHECK(std::isfinite(r.loss.total));
    if (r.stage != "joint") CHECK(r.loss.cycle == 0.0);
  }
}

TEST_CASE("joint loss falls on the tiny corpus") {
  auto& c = corpus();
  auto cfg = c.cfg;
  cfg.epochs = 6;
  const auto ckpt = run_train(cfg, c.data);
  double first = -1, last = -1;
  for (const auto& r : ckpt.history) {
    if (r.stage != "joint") continue;
    if (r.epoch == 0) first = r.loss.total;
    last = r.loss.total;
  }
  CHECK(last < first);
}

TEST_CASE("stage isolation through init_ckpt") {
  auto& c = corpus();
  testing::TempDir dir("stages");
  auto cfg = c.cfg;
  cfg.stage = "unimodal_audio";
  const auto audio = run_train(cfg, c.data);
  save_checkpoint(dir / "a.ckpt", audio);

  cfg.stage = "unimodal_visual";
  cfg.init_ckpt = (dir / "a.ckpt").string();
  const auto visual = run_train(cfg, c.data);
  save_checkpoint(dir / "v.ckpt", visual);
  CHECK(same_group(audio, visual, "audio_encoder."));
  CHECK(same_group(audio, visual, "audio_pooling."));
  CHECK_FALSE(same_group(audio, visual, "visual_encoder."));
  CHECK(visual.history.size() == audio.history.size() + std::size_t(cfg.epochs + 1));

  SUBCASE("loading into the joint stage loses nothing") {
    auto joint = cfg;
    joint.stage = "joint";
    joint.init_ckpt = (dir / "v.ckpt").string();
    joint.epochs = 0;
    const auto loaded = run_train(joint, c.data);
    for (const auto& a : visual.arrays)
      if (!a.name.starts_with("cohort.")) CHECK(array(loaded, a.name) == a.values);
  }
  SUBCASE("frozen backbones stay fixed in the joint stage") {
    auto joint = cfg;
    joint.stage = "joint";
    joint.init_ckpt = (dir / "v.ckpt").string();
    joint.freeze_backbones = true;
    const auto tuned = run_train(joint, c.data);
    CHECK(same_group(visual, tuned, "audio_encoder."));
    CHECK(same_group(visual, tuned, "visual_encoder."));
    CHECK_FALSE(same_group(visual, tuned, "fusion."));
    CHECK_FALSE(same_group(visual, tuned, "cycle_f."));
  }
  SUBCASE("class count must match") {
    auto joint = cfg;
    joint.stage = "joint";
    joint.init_ckpt = (dir / "v.ckpt").string();
    std::vector<Utterance> kept;
    for (const auto& u : c.data.utterances)
      if (u.identity_id != c.data.identities.back()) kept.push_back(u);
    CHECK_THROWS_AS(run_train(joint, make_training_set(kept)), ContractError);
  }
}

TEST_CASE("training needs a manifest") {
  auto cfg = testing::tiny_config();
  try {
    run_train(cfg);
    FAIL("expected a ContractError");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("'manifest'") != std::string::npos);
  }
}

TEST_CASE("evaluation") {
  auto& c = corpus();
  const auto ckpt = run_train(c.cfg, c.data);
  SUBCASE("ensemble reports every system, requested last") {
    const auto r = run_eval(ckpt, c.test_entries, c.trials, EvalModality::ensemble, true);
    REQUIRE(r.systems.size() == 4);
    CHECK(r.requested().name == "ensemble");
    CHECK(r.find("audio") != nullptr);
    CHECK(r.find("missing") == nullptr);
    for (const auto& s : r.systems) {
      CHECK(s.scores.size() == c.trials.size());
      CHECK(s.eer >= 0.0);
      CHECK(s.eer <= 1.0);
    }
    const auto single = run_eval(ckpt, c.test_entries, c.trials, EvalModality::visual, true);
    REQUIRE(single.systems.size() == 1);
    CHECK(single.requested().eer == r.find("visual")->eer);
    const std::regex line(R"(^(audio|visual|fused|ensemble) +EER=[0-9]+\.[0-9]{4}% minDCF=[0-9]+\.[0-9]{4}$)");
    std::istringstream text(format_report(r));
    std::string l;
    int lines = 0;
    while (std::getline(text, l)) {
      CHECK(std::regex_match(l, line));
      ++lines;
    }
    CHECK(lines == 4);
  }
  SUBCASE("s-norm changes scores but not the score format") {
    const auto raw = run_eval(ckpt, c.test_entries, c.trials, EvalModality::fused, false);
    const auto norm = run_eval(ckpt, c.test_entries, c.trials, EvalModality::fused, true);
    const auto a = format_scores(raw.requested().scores);
    const auto b = format_scores(norm.requested().scores);
    CHECK(a != b);
    const auto pa = parse_scores(a), pb = parse_scores(b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa[i].enroll_id == pb[i].enroll_id);
      CHECK(pa[i].test_id == pb[i].test_id);
    }
  }
  SUBCASE("a matched and a mismatched pair give EER 0") {
    const auto& u = c.test_entries.front();
    const auto& v = c.test_entries.back();
    REQUIRE(u.identity_id != v.identity_id);
    TrialList t;
    t.trials = {{u.utt_id, u.utt_id, true}, {u.utt_id, v.utt_id, false}};
    for (auto m : {EvalModality::audio, EvalModality::visual, EvalModality::fused})
      CHECK(run_eval(ckpt, c.test_entries, t, m, false).requested().eer == 0.0);
  }
  SUBCASE("unknown ids are listed") {
    TrialList t;
    t.trials = {{"ghost-1", c.test_entries[0].utt_id, true}, {c.test_entries[1].utt_id, "ghost-2", false}};
    try {
      run_eval(ckpt, c.test_entries, t, EvalModality::fused, false);
      FAIL("expected a ContractError");
    } catch (const ContractError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("ghost-1") != std::string::npos);
      CHECK(msg.find("ghost-2") != std::string::npos);
    }
  }
  SUBCASE("s-norm needs a cohort") {
    auto bare = ckpt;
    std::erase_if(bare.arrays, [](const NamedArray& a) { return a.name == "cohort.fused"; });
    CHECK_THROWS_AS(run_eval(bare, c.test_entries, c.trials, EvalModality::fused, true),
                    ContractError);
    CHECK_NOTHROW(run_eval(bare, c.test_entries, c.trials, EvalModality::fused, false));
  }
  SUBCASE("modality names") {
    for (auto m : {EvalModality::audio, EvalModality::visual, EvalModality::fused, EvalModality::ensemble})
      CHECK(parse_modality(to_string(m)) == m);
    CHECK_THROWS_AS(parse_modality("both"), ContractError);
  }
}

TEST_CASE("heatmaps") {
  auto& c = corpus();
  const auto ckpt = run_train(c.cfg, c.data);
  const auto utt = load_utterance(c.test_entries.front());
  testing::TempDir dir("heatmap");

  SUBCASE("files re-read to six decimals") {
    const auto h = compute_heatmap(ckpt, utt);
    emit_heatmap(h, dir.path());
    const MatrixXd ta = read_csv(dir / "temporal_audio.csv");
    const MatrixXd tv = read_csv(dir / "temporal_visual.csv");
    const MatrixXd aa = read_csv(dir / "alpha_audio.csv");
    const MatrixXd av = read_csv(dir / "alpha_visual.csv");
    CHECK(ta.rows() == 1);
    CHECK(ta.cols() == c.cfg.len_a);
    CHECK(tv.cols() == c.cfg.len_v);
    CHECK((ta.transpose() - h.temporal_audio).cwiseAbs().maxCoeff() <= 5e-7);
    CHECK((tv.transpose() - h.temporal_visual).cwiseAbs().maxCoeff() <= 5e-7);
    CHECK((aa - h.alpha_audio).cwiseAbs().maxCoeff() <= 5e-7);
    CHECK((av - h.alpha_visual).cwiseAbs().maxCoeff() <= 5e-7);
    CHECK(aa.allFinite());
    CHECK(((h.alpha_audio.colwise().sum().array() - 1).abs() < 1e-12).all());
    CHECK(((h.alpha_visual.colwise().sum().array() - 1).abs() < 1e-12).all());
  }
  SUBCASE("constant input gives uniform attention rows") {
    Utterance flat = utt;
    flat.audio.rowwise() = utt.audio.row(0);
    flat.visual.rowwise() = utt.visual.row(0);
    const auto h = compute_heatmap(ckpt, flat);
    const double ua = 1.0 / double(flat.audio.rows()), uv = 1.0 / double(flat.visual.rows());
    CHECK((h.alpha_audio.array() - ua).abs().maxCoeff() < 1e-12);
    CHECK((h.alpha_visual.array() - uv).abs().maxCoeff() < 1e-12);
    CHECK((h.temporal_audio.array() - h.temporal_audio(0)).abs().maxCoeff() < 1e-12);
  }
}
