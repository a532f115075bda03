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

// Cross-modal temporal weight encoders.
//
// f maps an audio temporal-attention track (length L_a) to a visual one
// (length L_v) and g maps back. Both are 3-layer MLPs. Two cosine losses tie
// them to the pooled attention:
//
//   adversarial = 2 - cos(a, g(v)) - cos(v, f(a))
//   cycle       = 2 - cos(v, f(g(v))) - cos(a, g(f(a)))
//
// A cosine involving a vector of norm below 1e-12 is defined as 0.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "avjp/types.hpp"

namespace avjp {

inline constexpr double kCosineNormEps = 1e-12;

enum class EncoderDirection { audio_to_visual, visual_to_audio };
enum class Activation { tanh, linear };

inline Modality source_modality(EncoderDirection d) {
  return d == EncoderDirection::audio_to_visual ? Modality::audio
                                                : Modality::visual;
}
inline Modality target_modality(EncoderDirection d) {
  return d == EncoderDirection::audio_to_visual ? Modality::visual
                                                : Modality::audio;
}

template <typename Scalar>
struct TemporalAttention {
  typename Types<Scalar>::Vector values;
  Modality modality = Modality::audio;
};

template <typename Scalar>
struct WeightEncoder {
  using Matrix = typename Types<Scalar>::Matrix;
  using Vector = typename Types<Scalar>::Vector;

  EncoderDirection direction = EncoderDirection::audio_to_visual;
  Activation activation = Activation::tanh;
  std::array<Matrix, 3> weights;
  std::array<Vector, 3> biases;

  Eigen::Index input_len() const { return weights[0].cols(); }
  Eigen::Index output_len() const { return weights[2].rows(); }

  void set_zero() {
    for (auto& w : weights) w.setZero();
    for (auto& b : biases) b.setZero();
  }

  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < 3; ++i) {
      f("W" + std::to_string(i + 1), weights[i]);
      f("b" + std::to_string(i + 1), biases[i]);
    }
  }
};

/// Hidden width defaults to max(input_len, output_len). Weights are
/// Xavier-uniform, biases zero.
template <typename Scalar, typename Rng>
WeightEncoder<Scalar> make_weight_encoder(EncoderDirection direction,
                                          Eigen::Index input_len,
                                          Eigen::Index output_len, Rng& rng,
                                          Eigen::Index hidden = 0) {
  require(input_len >= 1 && output_len >= 1,
          "weight encoder lengths must be positive");
  if (hidden <= 0) hidden = std::max(input_len, output_len);
  WeightEncoder<Scalar> enc;
  enc.direction = direction;
  const std::array<Eigen::Index, 4> widths{input_len, hidden, hidden,
                                           output_len};
  for (std::size_t i = 0; i < 3; ++i) {
    const double bound = std::sqrt(6.0 / double(widths[i] + widths[i + 1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    enc.weights[i].resize(widths[i + 1], widths[i]);
    for (Eigen::Index j = 0; j < enc.weights[i].size(); ++j)
      enc.weights[i].data()[j] = static_cast<Scalar>(dist(rng));
    enc.biases[i] = Types<Scalar>::Vector::Zero(widths[i + 1]);
  }
  return enc;
}

template <typename Scalar>
struct EncoderTrace {
  typename Types<Scalar>::Vector input;
  std::array<typename Types<Scalar>::Vector, 2> hidden;  // post-activation
  typename Types<Scalar>::Vector output;
};

template <typename Scalar>
EncoderTrace<Scalar> encode_trace(const WeightEncoder<Scalar>& enc,
                                  const typename Types<Scalar>::Vector& x) {
  require(x.size() == enc.input_len(),
          "weight encoder expects length " + std::to_string(enc.input_len()) +
              ", got " + std::to_string(x.size()));
  EncoderTrace<Scalar> tr;
  tr.input = x;
  typename Types<Scalar>::Vector cur = x;
  for (std::size_t i = 0; i < 2; ++i) {
    cur = enc.weights[i] * cur + enc.biases[i];
    if (enc.activation == Activation::tanh) cur = cur.array().tanh().matrix();
    tr.hidden[i] = cur;
  }
  tr.output = enc.weights[2] * cur + enc.biases[2];
  return tr;
}

template <typename Scalar>
TemporalAttention<Scalar> encode(const WeightEncoder<Scalar>& enc,
                                 const TemporalAttention<Scalar>& x) {
  require(x.modality == source_modality(enc.direction),
          std::string("weight encoder consumes ") +
              std::string(to_string(source_modality(enc.direction))) +
              " attention, got " + std::string(to_string(x.modality)));
  return {encode_trace(enc, x.values).output, target_modality(enc.direction)};
}

template <typename Scalar>
struct EncoderGradient {
  WeightEncoder<Scalar> params;
  typename Types<Scalar>::Vector input;
};

template <typename Scalar>
EncoderGradient<Scalar> encode_backward(
    const WeightEncoder<Scalar>& enc, const EncoderTrace<Scalar>& tr,
    const typename Types<Scalar>::Vector& grad_out) {
  using Vector = typename Types<Scalar>::Vector;
  EncoderGradient<Scalar> g;
  g.params.direction = enc.direction;
  g.params.activation = enc.activation;
  Vector delta = grad_out;
  for (int i = 2; i >= 0; --i) {
    const Vector& in = i == 0 ? tr.input : tr.hidden[std::size_t(i - 1)];
    g.params.weights[std::size_t(i)] = delta * in.transpose();
    g.params.biases[std::size_t(i)] = delta;
    delta = enc.weights[std::size_t(i)].transpose() * delta;
    if (i > 0 && enc.activation == Activation::tanh)
      delta.array() *= Scalar(1) - in.array().square();
  }
  g.input = std::move(delta);
  return g;
}

template <typename Scalar>
struct CosineWithGrad {
  Scalar value = 0;
  typename Types<Scalar>::Vector d_x;
  typename Types<Scalar>::Vector d_y;
};

template <typename Scalar>
CosineWithGrad<Scalar> cosine_with_grad(
    const typename Types<Scalar>::Vector& x,
    const typename Types<Scalar>::Vector& y) {
  require(x.size() == y.size(), "cosine: length mismatch " +
                                    std::to_string(x.size()) + " vs " +
                                    std::to_string(y.size()));
  CosineWithGrad<Scalar> r;
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (nx < Scalar(kCosineNormEps) || ny < Scalar(kCosineNormEps)) {
    r.d_x = Types<Scalar>::Vector::Zero(x.size());
    r.d_y = Types<Scalar>::Vector::Zero(y.size());
    return r;
  }
  r.value = x.dot(y) / (nx * ny);
  r.d_x = y / (nx * ny) - r.value * x / (nx * nx);
  r.d_y = x / (nx * ny) - r.value * y / (ny * ny);
  return r;
}

template <typename Derived1, typename Derived2>
typename Derived1::Scalar safe_cosine(const Eigen::MatrixBase<Derived1>& x,
                                      const Eigen::MatrixBase<Derived2>& y) {
  using Scalar = typename Derived1::Scalar;
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (nx < Scalar(kCosineNormEps) || ny < Scalar(kCosineNormEps)) return 0;
  return x.dot(y) / (nx * ny);
}

namespace detail {

template <typename Scalar>
void check_cross_modal(const TemporalAttention<Scalar>& a,
                       const TemporalAttention<Scalar>& v,
                       const WeightEncoder<Scalar>& f,
                       const WeightEncoder<Scalar>& g) {
  require(a.modality == Modality::audio && v.modality == Modality::visual,
          "cross-modal losses take (audio, visual) attention");
  require(f.direction == EncoderDirection::audio_to_visual &&
              g.direction == EncoderDirection::visual_to_audio,
          "f must map audio->visual and g visual->audio");
  require(a.values.size() == f.input_len() &&
              a.values.size() == g.output_len(),
          "audio attention length " + std::to_string(a.values.size()) +
              " does not match encoders (f in=" +
              std::to_string(f.input_len()) +
              ", g out=" + std::to_string(g.output_len()) + ")");
  require(v.values.size() == g.input_len() &&
              v.values.size() == f.output_len(),
          "visual attention length " + std::to_string(v.values.size()) +
              " does not match encoders (g in=" +
              std::to_string(g.input_len()) +
              ", f out=" + std::to_string(f.output_len()) + ")");
}

}  // namespace detail

template <typename Scalar>
Scalar adversarial_loss(const TemporalAttention<Scalar>& a,
                        const TemporalAttention<Scalar>& v,
                        const WeightEncoder<Scalar>& f,
                        const WeightEncoder<Scalar>& g) {
  detail::check_cross_modal(a, v, f, g);
  return Scalar(2) - safe_cosine(a.values, encode_trace(g, v.values).output) -
         safe_cosine(v.values, encode_trace(f, a.values).output);
}

template <typename Scalar>
Scalar cycle_loss(const TemporalAttention<Scalar>& a,
                  const TemporalAttention<Scalar>& v,
                  const WeightEncoder<Scalar>& f,
                  const WeightEncoder<Scalar>& g) {
  detail::check_cross_modal(a, v, f, g);
  const auto gv = encode_trace(g, v.values).output;
  const auto fa = encode_trace(f, a.values).output;
  return Scalar(2) - safe_cosine(v.values, encode_trace(f, gv).output) -
         safe_cosine(a.values, encode_trace(g, fa).output);
}

template <typename Scalar>
struct CrossModalResult {
  Scalar adversarial = 0;
  Scalar cycle = 0;
  // Gradients of adversarial_weight * adversarial + cycle_weight * cycle.
  typename Types<Scalar>::Vector d_audio;
  typename Types<Scalar>::Vector d_visual;
  WeightEncoder<Scalar> d_f;
  WeightEncoder<Scalar> d_g;
};

template <typename Scalar>
void accumulate(WeightEncoder<Scalar>& into, const WeightEncoder<Scalar>& g,
                Scalar scale = Scalar(1)) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (into.weights[i].size() == 0) {
      into.weights[i] = scale * g.weights[i];
      into.biases[i] = scale * g.biases[i];
    } else {
      into.weights[i] += scale * g.weights[i];
      into.biases[i] += scale * g.biases[i];
    }
  }
}

/// Both losses with gradients of adversarial_weight * L_adv +
/// cycle_weight * L_cycle w.r.t. the two tracks and both encoders.
template <typename Scalar>
CrossModalResult<Scalar> cross_modal_objective(
    const TemporalAttention<Scalar>& a, const TemporalAttention<Scalar>& v,
    const WeightEncoder<Scalar>& f, const WeightEncoder<Scalar>& g,
    Scalar adversarial_weight, Scalar cycle_weight) {
  using Vector = typename Types<Scalar>::Vector;
  detail::check_cross_modal(a, v, f, g);
  const auto fa = encode_trace(f, a.values);
  const auto gv = encode_trace(g, v.values);
  const auto gfa = encode_trace(g, fa.output);
  const auto fgv = encode_trace(f, gv.output);

  const auto c_a_gv = cosine_with_grad<Scalar>(a.values, gv.output);
  const auto c_v_fa = cosine_with_grad<Scalar>(v.values, fa.output);
  const auto c_v_fgv = cosine_with_grad<Scalar>(v.values, fgv.output);
  const auto c_a_gfa = cosine_with_grad<Scalar>(a.values, gfa.output);

  CrossModalResult<Scalar> r;
  r.adversarial = Scalar(2) - c_a_gv.value - c_v_fa.value;
  r.cycle = Scalar(2) - c_v_fgv.value - c_a_gfa.value;

  const Scalar wa = adversarial_weight;
  const Scalar wc = cycle_weight;
  r.d_audio = -wa * c_a_gv.d_x - wc * c_a_gfa.d_x;
  r.d_visual = -wa * c_v_fa.d_x - wc * c_v_fgv.d_x;

  // Outer encoder applications of the round trips.
  const auto b_fgv = encode_backward(f, fgv, Vector(-wc * c_v_fgv.d_y));
  const auto b_gfa = encode_backward(g, gfa, Vector(-wc * c_a_gfa.d_y));

  const Vector d_gv = -wa * c_a_gv.d_y + b_fgv.input;
  const Vector d_fa = -wa * c_v_fa.d_y + b_gfa.input;
  const auto b_gv = encode_backward(g, gv, d_gv);
  const auto b_fa = encode_backward(f, fa, d_fa);

  r.d_audio += b_fa.input;
  r.d_visual += b_gv.input;

  r.d_f = b_fa.params;
  accumulate(r.d_f, b_fgv.params);
  r.d_g = b_gv.params;
  accumulate(r.d_g, b_gfa.params);
  return r;
}

/// Linear interpolation matrix [out_len x in_len] with aligned end points.
/// A single output sample reads the midpoint of the input.
template <typename Scalar>
typename Types<Scalar>::Matrix interpolation_matrix(Eigen::Index in_len,
                                                    Eigen::Index out_len) {
  require(in_len >= 1 && out_len >= 1, "resample lengths must be positive");
  typename Types<Scalar>::Matrix m =
      Types<Scalar>::Matrix::Zero(out_len, in_len);
  for (Eigen::Index i = 0; i < out_len; ++i) {
    const double pos =
        out_len == 1 ? 0.5 * double(in_len - 1)
                     : double(i) * double(in_len - 1) / double(out_len - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const double frac = pos - double(lo);
    if (lo + 1 < in_len) {
      m(i, lo) += static_cast<Scalar>(1.0 - frac);
      m(i, lo + 1) += static_cast<Scalar>(frac);
    } else {
      m(i, in_len - 1) = Scalar(1);
    }
  }
  return m;
}

template <typename Derived>
typename Types<typename Derived::Scalar>::Vector resample_linear(
    const Eigen::MatrixBase<Derived>& x, Eigen::Index out_len) {
  return interpolation_matrix<typename Derived::Scalar>(x.size(), out_len) * x;
}

}  // namespace avjp
