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
#include <string>
#include <vector>

#include "avjp/checkpoint.hpp"
#include "avjp/model.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "gradcheck.hpp"

using namespace avjp;
using Eigen::MatrixXd;

namespace {

Utterance random_utterance(const RunConfig& cfg, int frames_a, int frames_v, std::mt19937_64& rng) {
  Utterance u;
  u.utt_id = "u";
  u.identity_id = "s";
  u.audio = testing::random_matrix(frames_a, cfg.audio_in_dim, rng);
  u.visual = testing::random_matrix(frames_v, cfg.visual_height * cfg.visual_width, rng);
  return u;
}

/// A model with every parameter perturbed away from its structured init.
Model perturbed_model(const RunConfig& cfg, Eigen::Index classes, std::mt19937_64& rng) {
  Model m = init_model(cfg, classes, rng);
  m.for_each([&](unsigned, const std::string&, auto& p) {
    p += testing::random_matrix(p.rows(), p.cols(), rng, 0.2);
  });
  return m;
}

/// Parameter copies in Model::for_each order.
std::vector<NamedArray> snapshot(Model m) { return model_arrays(m); }

}  // namespace

TEST_CASE("initial model") {
  const auto cfg = testing::tiny_config();
  std::mt19937_64 rng(1);
  Model m = init_model(cfg, 5, rng);
  CHECK(m.num_classes() == 5);
  CHECK(m.att_a.V.isZero(0.0));
  CHECK((m.att_a.k.array() == 1.0).all());
  CHECK(m.fusion.gate.W.isZero(0.0));

  std::mt19937_64 rng2(1);
  Model same = init_model(cfg, 5, rng2);
  const auto a = snapshot(m), b = snapshot(same);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);

  for (const auto& v : snapshot(zero_model(cfg, 5))) CHECK(v.values.isZero(0.0));
  for (const auto& v : a) CHECK(v.values.allFinite());
}

TEST_CASE("embeddings and attention views") {
  const auto cfg = testing::tiny_config();
  std::mt19937_64 rng(2);
  const Model m = perturbed_model(cfg, 4, rng);
  const auto u = random_utterance(cfg, 11, 5, rng);
  SUBCASE("shapes") {
    const auto e = embed(m, u);
    CHECK(e.audio.size() == 2 * cfg.channels);
    CHECK(e.visual.size() == 2 * cfg.channels);
    CHECK(e.fused.size() == cfg.embed_dim);
    const auto v = attend(m, cfg, u);
    CHECK(v.track_a.size() == cfg.len_a);
    CHECK(v.track_v.size() == cfg.len_v);
    CHECK(v.audio.state.weights.rows() == 11);
    CHECK(v.visual.state.weights.rows() == 5);
  }
  SUBCASE("attention columns sum to one") {
    const auto v = attend(m, cfg, u);
    for (const auto* w : {&v.audio.state.weights, &v.visual.state.weights})
      CHECK((w->colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("constant input gives uniform attention") {
    Utterance c = u;
    c.audio.rowwise() = u.audio.row(0);
    c.visual.rowwise() = u.visual.row(0);
    const auto v = attend(m, cfg, c);
    CHECK((v.audio.state.weights.array() - 1.0 / 11).abs().maxCoeff() < 1e-12);
    CHECK((v.visual.state.weights.array() - 1.0 / 5).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("input dimension mismatch") {
    Utterance bad = u;
    bad.audio = MatrixXd::Ones(4, cfg.audio_in_dim + 1);
    CHECK_THROWS_AS(embed(m, bad), ContractError);
  }
}

TEST_CASE("utterance loss gradients match central differences") {
  auto cfg = testing::tiny_config();
  cfg.ortho_weight = 0.3;
  const Eigen::Index classes = 3;
  for (const Stage stage : {Stage::unimodal_audio, Stage::unimodal_visual, Stage::joint}) {
    CAPTURE(to_string(stage));
    for (int trial = 0; trial < 3; ++trial) {
      std::mt19937_64 rng(100 + trial);
      Model m = perturbed_model(cfg, classes, rng);
      const auto u = random_utterance(cfg, 7 + trial, 3 + trial, rng);
      const Eigen::Index label = trial % classes;
      Model grad = zero_model(cfg, classes);
      const auto parts = utterance_loss(m, cfg, stage, u, label, &grad, 1.0);
      CHECK(std::isfinite(parts.total));

      const auto grads = snapshot(grad);
      std::size_t i = 0;
      m.for_each([&](unsigned, const std::string& name, auto& p) {
        CAPTURE(name);
        const MatrixXd numeric = testing::numeric_gradient(
            p, [&] { return utterance_loss(m, cfg, stage, u, label).total; });
        CHECK(testing::relative_error(grads[i++].values, numeric) < testing::kGradTolerance);
      });
    }
  }
}

TEST_CASE("stage losses touch only their groups") {
  const auto cfg = testing::tiny_config();
  std::mt19937_64 rng(7);
  const Model m = perturbed_model(cfg, 3, rng);
  const auto u = random_utterance(cfg, 8, 4, rng);
  const auto touched = [&](Stage stage, bool skip) {
    Model grad = zero_model(cfg, 3);
    utterance_loss(m, cfg, stage, u, 1, &grad, 1.0, skip);
    unsigned groups = 0;
    grad.for_each([&](unsigned g, const std::string&, auto& p) {
      if (!p.isZero(0.0)) groups |= g;
    });
    return groups;
  };
  CHECK(touched(Stage::unimodal_audio, false) == (kAudioBackbone | kAudioPooling | kAudioHead));
  CHECK(touched(Stage::unimodal_visual, false) == (kVisualBackbone | kVisualPooling | kVisualHead));
  CHECK(touched(Stage::joint, false) == kAllGroups);
  CHECK(touched(Stage::joint, true) == (kAllGroups & ~(kAudioBackbone | kVisualBackbone)));
}

TEST_CASE("loss weighting") {
  const auto cfg = testing::tiny_config();
  std::mt19937_64 rng(8);
  const Model m = perturbed_model(cfg, 3, rng);
  const auto u = random_utterance(cfg, 8, 4, rng);
  Model g1 = zero_model(cfg, 3), g2 = zero_model(cfg, 3);
  const auto l1 = utterance_loss(m, cfg, Stage::joint, u, 0, &g1, 1.0);
  const auto l2 = utterance_loss(m, cfg, Stage::joint, u, 0, &g2, 0.25);
  CHECK(l1.total == l2.total);
  CHECK(l1.total == doctest::Approx(l1.aam + cfg.beta * l1.adversarial + cfg.gamma * l1.cycle +
                                    cfg.ortho_weight * l1.ortho));
  const auto a = snapshot(g1), b = snapshot(g2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i].values.isApprox(0.25 * a[i].values));
  CHECK_THROWS_AS(utterance_loss(m, cfg, Stage::two_stage, u, 0), ContractError);
  CHECK_THROWS_AS(utterance_loss(m, cfg, Stage::joint, u, 3), ContractError);
}
