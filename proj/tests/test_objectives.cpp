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

#include "avjp/objectives.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace avjp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ClassifierHead<double> head(const MatrixXd& w, double m, double s) {
  ClassifierHead<double> h;
  h.weights = w;
  h.margin = m;
  h.scale = s;
  return h;
}

/// Embedding at angle theta from class row e_0 in the (e_0, e_1) plane.
VectorXd at_angle(double theta) {
  VectorXd x = VectorXd::Zero(3);
  x(0) = std::cos(theta);
  x(1) = std::sin(theta);
  return x;
}

}  // namespace

TEST_CASE("AAM softmax fixtures") {
  const VectorXd e0 = (VectorXd(2) << 1, 0).finished();
  SUBCASE("margin-free, unit scale") {
    CHECK(aam_softmax_loss<double>(e0, 0, head(MatrixXd::Identity(2, 2), 0.0, 1.0)) ==
          doctest::Approx(0.313261687518222834).epsilon(1e-14));
  }
  SUBCASE("default margin and scale") {
    const double loss = aam_softmax_loss<double>(e0, 0, head(MatrixXd::Identity(2, 2), 0.5, 30.0));
    CHECK(loss == doctest::Approx(3.68232467983622239e-12).epsilon(1e-3));
  }
  SUBCASE("zero margin is normalized-softmax cross-entropy") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
      const MatrixXd w = testing::random_matrix(5, 4, rng);
      const VectorXd x = testing::random_vector(4, rng);
      const Eigen::Index y = Eigen::Index(rng() % 5);
      const VectorXd logits =
          7.0 * (w.rowwise().normalized() * x.normalized());
      const double ce = -logits(y) + std::log(logits.array().exp().sum());
      CHECK(aam_softmax_loss<double>(x, y, head(w, 0.0, 7.0)) == doctest::Approx(ce).epsilon(1e-12));
    }
  }
  SUBCASE("contract errors") {
    const auto h = head(MatrixXd::Identity(2, 2), 0.5, 30.0);
    CHECK_THROWS_AS(aam_softmax_loss<double>(VectorXd::Zero(2), 0, h), ContractError);
    CHECK_THROWS_AS(aam_softmax_loss<double>(e0, 2, h), ContractError);
    CHECK_THROWS_AS(aam_softmax_loss<double>(VectorXd::Ones(3), 0, h), ContractError);
  }
}

TEST_CASE("AAM monotonicity") {
  const MatrixXd w = MatrixXd::Identity(3, 3);
  SUBCASE("loss decreases as the target cosine grows") {
    // Competitor orthogonal to the rotation plane keeps its logit fixed.
    MatrixXd fixed_rival = MatrixXd::Zero(2, 3);
    fixed_rival(0, 0) = 1;
    fixed_rival(1, 2) = 1;
    double prev = 1e300;
    for (double theta = 2.5; theta >= 0.0; theta -= 0.05) {
      const double loss = aam_softmax_loss<double>(at_angle(theta), 0, head(fixed_rival, 0.5, 30.0));
      CHECK(loss >= 0.0);
      CHECK(loss <= prev + 1e-12);
      prev = loss;
    }
  }
  SUBCASE("loss is non-decreasing in the margin") {
    for (double theta : {0.1, 0.7, 1.3, 2.0}) {
      double prev = -1.0;
      for (double m = 0.0; m < 1.5 && theta + m <= 3.14159; m += 0.05) {
        const double loss = aam_softmax_loss<double>(at_angle(theta), 0, head(w, m, 30.0));
        CHECK(loss >= prev - 1e-12);
        prev = loss;
      }
    }
  }
}

TEST_CASE("AAM gradients match central differences") {
  std::mt19937_64 rng(31);
  for (int instance = 0; instance < 24; ++instance) {
    const Eigen::Index classes = 2 + Eigen::Index(rng() % 5);
    const Eigen::Index d = 2 + Eigen::Index(rng() % 5);
    MatrixXd w = testing::random_matrix(classes, d, rng);
    VectorXd x = testing::random_vector(d, rng);
    const Eigen::Index y = Eigen::Index(rng() % std::uint64_t(classes));
    if (instance % 6 == 0) x = -w.row(y).transpose() + 0.1 * testing::random_vector(d, rng);
    const double m = instance % 2 ? 0.5 : 0.3;
    const double s = instance % 3 ? 30.0 : 4.0;
    auto loss = [&] { return aam_softmax_loss<double>(x, y, head(w, m, s)); };
    const auto r = aam_softmax<double>(x, y, head(w, m, s));
    CHECK(testing::relative_error(r.d_embedding, testing::numeric_gradient(x, loss)) <
          testing::kGradTolerance);
    CHECK(testing::relative_error(r.d_weights, testing::numeric_gradient(w, loss)) <
          testing::kGradTolerance);
  }
}

TEST_CASE("total loss") {
  const LossWeights<double> w;
  CHECK(w.beta == 1.0);
  CHECK(w.gamma == 0.5);
  CHECK(total_loss(1.0, 0.2, 0.4, 0.0, w) == doctest::Approx(1.4));
  CHECK(total_loss(0.0, 0.0, 0.0, 0.0, w) == 0.0);
  CHECK(total_loss(2.0, 0.0, 0.0, 0.0, LossWeights<double>{3.0, 7.0, 9.0}) == 2.0);
  const LossWeights<double> eq10{1.0, 0.5, 0.0};
  CHECK(total_loss(1.5, 0.3, 0.8, 123.0, eq10) == doctest::Approx(1.5 + 0.3 + 0.4));
}
