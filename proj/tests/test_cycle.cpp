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
#include <numbers>
#include <random>

#include "avjp/cycle.hpp"
#include "doctest.h"
#include "gradcheck.hpp"

using namespace avjp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

/// Linear encoder computing W1 x with W2 = W3 = I.
WeightEncoder<double> linear_encoder(EncoderDirection d, const MatrixXd& map) {
  WeightEncoder<double> enc;
  enc.direction = d;
  enc.activation = Activation::linear;
  enc.weights = {map, MatrixXd::Identity(map.rows(), map.rows()),
                 MatrixXd::Identity(map.rows(), map.rows())};
  enc.biases = {VectorXd::Zero(map.rows()), VectorXd::Zero(map.rows()),
                VectorXd::Zero(map.rows())};
  return enc;
}

TemporalAttention<double> audio(const VectorXd& v) { return {v, Modality::audio}; }
TemporalAttention<double> visual(const VectorXd& v) { return {v, Modality::visual}; }

MatrixXd rotation(double angle) {
  MatrixXd r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

}  // namespace

TEST_CASE("weight encoder forward") {
  std::mt19937_64 rng(3);
  SUBCASE("zero network gives zeros") {
    auto enc = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 6, 4, rng);
    enc.set_zero();
    const auto out = encode(enc, audio(VectorXd::Random(6)));
    CHECK(out.values.size() == 4);
    CHECK(out.values.isZero());
    CHECK(out.modality == Modality::visual);
  }
  SUBCASE("identity-initialized square encoder") {
    const auto enc = linear_encoder(EncoderDirection::visual_to_audio,
                                    MatrixXd::Identity(5, 5));
    const VectorXd x = VectorXd::Random(5);
    const auto out = encode(enc, visual(x));
    CHECK(out.values == x);
    CHECK(out.modality == Modality::audio);
  }
  SUBCASE("seeded construction is bit-reproducible") {
    std::mt19937_64 r1(99), r2(99);
    const auto e1 = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 8, 3, r1);
    const auto e2 = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 8, 3, r2);
    const VectorXd x = VectorXd::LinSpaced(8, -1, 1);
    const VectorXd y1 = encode(e1, audio(x)).values;
    const VectorXd y2 = encode(e2, audio(x)).values;
    CHECK(std::memcmp(y1.data(), y2.data(), sizeof(double) * 3) == 0);
  }
  SUBCASE("hidden width is the larger length") {
    const auto enc = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 10, 4, rng);
    CHECK(enc.weights[0].rows() == 10);
    CHECK(enc.weights[1].rows() == 10);
    CHECK(enc.output_len() == 4);
  }
  SUBCASE("length and modality mismatches") {
    const auto enc = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 6, 4, rng);
    CHECK_THROWS_AS(encode(enc, audio(VectorXd::Ones(5))), ContractError);
    CHECK_THROWS_AS(encode(enc, visual(VectorXd::Ones(6))), ContractError);
  }
}

TEST_CASE("adversarial loss fixtures") {
  const VectorXd a = (VectorXd(2) << 1, 2).finished();
  const auto ident = [](EncoderDirection d) {
    return linear_encoder(d, MatrixXd::Identity(2, 2));
  };
  SUBCASE("aligned fixed point") {
    const auto f = ident(EncoderDirection::audio_to_visual);
    const auto g = ident(EncoderDirection::visual_to_audio);
    CHECK(adversarial_loss(audio(a), visual(3.0 * a), f, g) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("orthogonal") {
    const auto f = ident(EncoderDirection::audio_to_visual);
    const auto g = ident(EncoderDirection::visual_to_audio);
    const VectorXd v = (VectorXd(2) << -2, 1).finished();
    CHECK(adversarial_loss(audio(a), visual(v), f, g) == doctest::Approx(2.0));
  }
  SUBCASE("anti-aligned maximum") {
    const auto f = linear_encoder(EncoderDirection::audio_to_visual, -MatrixXd::Identity(2, 2));
    const auto g = linear_encoder(EncoderDirection::visual_to_audio, -MatrixXd::Identity(2, 2));
    CHECK(adversarial_loss(audio(a), visual(a), f, g) == doctest::Approx(4.0));
  }
}

TEST_CASE("cycle loss fixtures") {
  std::mt19937_64 rng(5);
  SUBCASE("mutually inverse encoders") {
    const MatrixXd m = testing::random_matrix(3, 3, rng) + 3 * MatrixXd::Identity(3, 3);
    const auto f = linear_encoder(EncoderDirection::audio_to_visual, m);
    const auto g = linear_encoder(EncoderDirection::visual_to_audio, m.inverse());
    CHECK(cycle_loss(audio(testing::random_vector(3, rng)),
                     visual(testing::random_vector(3, rng)), f, g) ==
          doctest::Approx(0.0).epsilon(1e-10));
  }
  SUBCASE("orthogonal round trip") {
    const auto f = linear_encoder(EncoderDirection::audio_to_visual,
                                  rotation(std::numbers::pi / 4));
    const auto g = linear_encoder(EncoderDirection::visual_to_audio,
                                  rotation(std::numbers::pi / 4));
    CHECK(cycle_loss(audio(testing::random_vector(2, rng)),
                     visual(testing::random_vector(2, rng)), f, g) ==
          doctest::Approx(2.0));
  }
  SUBCASE("identity encoders") {
    const auto f = linear_encoder(EncoderDirection::audio_to_visual, MatrixXd::Identity(4, 4));
    const auto g = linear_encoder(EncoderDirection::visual_to_audio, MatrixXd::Identity(4, 4));
    for (int i = 0; i < 10; ++i)
      CHECK(cycle_loss(audio(testing::random_vector(4, rng)),
                       visual(testing::random_vector(4, rng)), f, g) ==
            doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("zero-norm tracks use the zero cosine") {
    const auto f = linear_encoder(EncoderDirection::audio_to_visual, MatrixXd::Identity(2, 2));
    const auto g = linear_encoder(EncoderDirection::visual_to_audio, MatrixXd::Identity(2, 2));
    const auto r = cross_modal_objective(audio(VectorXd::Zero(2)),
                                         visual(VectorXd::Ones(2)), f, g, 1.0, 1.0);
    CHECK(r.adversarial == doctest::Approx(2.0));
    CHECK(r.cycle == doctest::Approx(1.0));
    CHECK(r.d_audio.allFinite());
  }
}

TEST_CASE("loss ranges and scale behaviour") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    auto f = make_weight_encoder<double>(EncoderDirection::audio_to_visual, 6, 3, rng);
    auto g = make_weight_encoder<double>(EncoderDirection::visual_to_audio, 3, 6, rng);
    const VectorXd a = testing::random_vector(6, rng, 2.0);
    const VectorXd v = testing::random_vector(3, rng, 2.0);
    const double adv = adversarial_loss(audio(a), visual(v), f, g);
    const double cyc = cycle_loss(audio(a), visual(v), f, g);
    CHECK(adv >= 0.0);
    CHECK(adv <= 4.0);
    CHECK(cyc >= 0.0);
    CHECK(cyc <= 4.0);
  }
  // Positive rescaling of the tracks leaves both losses unchanged when the
  // encoders are positively homogeneous (bias-free, linear).
  for (int i = 0; i < 20; ++i) {
    const auto f = linear_encoder(EncoderDirection::audio_to_visual, testing::random_matrix(3, 5, rng));
    const auto g = linear_encoder(EncoderDirection::visual_to_audio, testing::random_matrix(5, 3, rng));
    const VectorXd a = testing::random_vector(5, rng);
    const VectorXd v = testing::random_vector(3, rng);
    CHECK(adversarial_loss(audio(a), visual(v), f, g) ==
          doctest::Approx(adversarial_loss(audio(2.5 * a), visual(0.3 * v), f, g)));
    CHECK(cycle_loss(audio(a), visual(v), f, g) ==
          doctest::Approx(cycle_loss(audio(7.0 * a), visual(0.1 * v), f, g)));
  }
}

TEST_CASE("cross-modal gradients match central differences") {
  std::mt19937_64 rng(23);
  for (int instance = 0; instance < 20; ++instance) {
    const Eigen::Index la = 3 + Eigen::Index(rng() % 5);
    const Eigen::Index lv = 2 + Eigen::Index(rng() % 4);
    auto f = make_weight_encoder<double>(EncoderDirection::audio_to_visual, la, lv, rng);
    auto g = make_weight_encoder<double>(EncoderDirection::visual_to_audio, lv, la, rng);
    for (auto* enc : {&f, &g})
      for (auto& b : enc->biases) b = testing::random_vector(b.size(), rng, 0.3);
    VectorXd a = testing::random_vector(la, rng);
    VectorXd v = testing::random_vector(lv, rng);
    const double wa = 1.0, wc = 0.5;
    auto loss = [&] {
      return wa * adversarial_loss(audio(a), visual(v), f, g) +
             wc * cycle_loss(audio(a), visual(v), f, g);
    };
    const auto r = cross_modal_objective(audio(a), visual(v), f, g, wa, wc);
    CHECK(r.adversarial == doctest::Approx(adversarial_loss(audio(a), visual(v), f, g)));
    CHECK(testing::relative_error(r.d_audio, testing::numeric_gradient(a, loss)) <
          testing::kGradTolerance);
    CHECK(testing::relative_error(r.d_visual, testing::numeric_gradient(v, loss)) <
          testing::kGradTolerance);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(testing::relative_error(r.d_f.weights[i], testing::numeric_gradient(f.weights[i], loss)) <
            testing::kGradTolerance);
      CHECK(testing::relative_error(r.d_f.biases[i], testing::numeric_gradient(f.biases[i], loss)) <
            testing::kGradTolerance);
      CHECK(testing::relative_error(r.d_g.weights[i], testing::numeric_gradient(g.weights[i], loss)) <
            testing::kGradTolerance);
      CHECK(testing::relative_error(r.d_g.biases[i], testing::numeric_gradient(g.biases[i], loss)) <
            testing::kGradTolerance);
    }
  }
}

TEST_CASE("linear resampling") {
  SUBCASE("same length is the identity") {
    CHECK(interpolation_matrix<double>(7, 7).isIdentity());
  }
  SUBCASE("rows are convex combinations") {
    const MatrixXd m = interpolation_matrix<double>(13, 5);
    CHECK(((m.rowwise().sum().array() - 1.0).abs() < 1e-15).all());
    CHECK((m.array() >= 0).all());
  }
  SUBCASE("ramps stay ramps and end points align") {
    const VectorXd ramp = VectorXd::LinSpaced(10, 0.0, 9.0);
    const VectorXd up = resample_linear(ramp, 19);
    CHECK(up(0) == 0.0);
    CHECK(up(18) == doctest::Approx(9.0));
    for (Eigen::Index i = 0; i < 19; ++i) CHECK(up(i) == doctest::Approx(0.5 * double(i)));
  }
  SUBCASE("single output reads the midpoint") {
    const VectorXd x = (VectorXd(3) << 1, 2, 3).finished();
    CHECK(resample_linear(x, 1)(0) == doctest::Approx(2.0));
  }
}
