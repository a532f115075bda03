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

// Gated fusion of pooled audio and visual embeddings:
//
//   u_a = P_a x_a + c_a,  u_v = P_v x_v + c_v
//   z   = sigmoid(G [u_a ; u_v] + g)
//   y   = O (z * u_a + (1 - z) * u_v) + o
//
// plus a squared-cosine orthogonality penalty between u_a and u_v.

#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "avjp/cycle.hpp"
#include "avjp/types.hpp"

namespace avjp {

template <typename Scalar>
struct UtteranceEmbedding {
  typename Types<Scalar>::Vector values;
  Modality modality = Modality::fused;
  std::string utt_id;
  std::optional<std::string> identity_id;
};

template <typename Scalar>
struct Affine {
  typename Types<Scalar>::Matrix W;  // [out x in]
  typename Types<Scalar>::Vector b;  // [out]

  Eigen::Index in_dim() const { return W.cols(); }
  Eigen::Index out_dim() const { return W.rows(); }

  template <typename Derived>
  typename Types<Scalar>::Vector operator()(
      const Eigen::MatrixBase<Derived>& x) const {
    require(x.size() == W.cols(),
            "affine map expects input dim " + std::to_string(W.cols()) +
                ", got " + std::to_string(x.size()));
    return W * x + b;
  }

  static Affine identity(Eigen::Index dim) {
    return {Types<Scalar>::Matrix::Identity(dim, dim),
            Types<Scalar>::Vector::Zero(dim)};
  }

  template <typename Rng>
  static Affine xavier(Eigen::Index in, Eigen::Index out, Rng& rng) {
    const double bound = std::sqrt(6.0 / double(in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Affine a{typename Types<Scalar>::Matrix(out, in),
             Types<Scalar>::Vector::Zero(out)};
    for (Eigen::Index i = 0; i < a.W.size(); ++i)
      a.W.data()[i] = static_cast<Scalar>(dist(rng));
    return a;
  }

  void set_zero() {
    W.setZero();
    b.setZero();
  }
};

template <typename Scalar>
struct FusionParams {
  Affine<Scalar> proj_a;  // [2C -> D]
  Affine<Scalar> proj_v;  // [2C -> D]
  Affine<Scalar> gate;    // [2D -> D]
  Affine<Scalar> out;     // [D -> D]

  Eigen::Index dim() const { return out.out_dim(); }

  template <typename Rng>
  static FusionParams random(Eigen::Index in_a, Eigen::Index in_v,
                             Eigen::Index dim, Rng& rng) {
    FusionParams p{Affine<Scalar>::xavier(in_a, dim, rng),
                   Affine<Scalar>::xavier(in_v, dim, rng),
                   Affine<Scalar>::xavier(2 * dim, dim, rng),
                   Affine<Scalar>::identity(dim)};
    return p;
  }

  /// Branch projections start as coordinate embeddings into disjoint blocks
  /// of the fused space (x_a at offset 0, x_v at offset in_a, wrapping when
  /// dim < in_a + in_v), so u_a and u_v start orthogonal; the gate starts
  /// balanced at 0.5.
  template <typename Rng>
  static FusionParams split(Eigen::Index in_a, Eigen::Index in_v,
                            Eigen::Index dim, Rng& rng) {
    FusionParams p = random(in_a, in_v, dim, rng);
    p.proj_a.W.setZero();
    p.proj_v.W.setZero();
    for (Eigen::Index j = 0; j < in_a; ++j) p.proj_a.W(j % dim, j) = Scalar(1);
    for (Eigen::Index j = 0; j < in_v; ++j)
      p.proj_v.W((in_a + j) % dim, j) = Scalar(1);
    p.gate.W.setZero();
    return p;
  }

  void set_zero() {
    proj_a.set_zero();
    proj_v.set_zero();
    gate.set_zero();
    out.set_zero();
  }

  template <typename F>
  void for_each(F&& f) {
    f("proj_a.W", proj_a.W);
    f("proj_a.b", proj_a.b);
    f("proj_v.W", proj_v.W);
    f("proj_v.b", proj_v.b);
    f("gate.W", gate.W);
    f("gate.b", gate.b);
    f("out.W", out.W);
    f("out.b", out.b);
  }

  void validate() const {
    const auto d = out.out_dim();
    require(proj_a.out_dim() == d && proj_v.out_dim() == d,
            "fusion branch projections must output D=" + std::to_string(d));
    require(gate.in_dim() == 2 * d && gate.out_dim() == d,
            "fusion gate must map 2D=" + std::to_string(2 * d) + " -> D=" +
                std::to_string(d));
    require(out.in_dim() == d, "fusion output map must take D inputs");
    require(proj_a.b.size() == d && proj_v.b.size() == d &&
                gate.b.size() == d && out.b.size() == d,
            "fusion bias sizes must equal D");
  }
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
struct FusionTrace {
  using Vector = typename Types<Scalar>::Vector;
  Vector input_a;
  Vector input_v;
  Vector branch_a;  // u_a
  Vector branch_v;  // u_v
  Vector gate;      // z in (0, 1)^D
  Vector mixed;
  Vector fused;
};

template <typename DerivedA, typename DerivedV>
FusionTrace<typename DerivedA::Scalar> fuse_trace(
    const Eigen::MatrixBase<DerivedA>& x_a,
    const Eigen::MatrixBase<DerivedV>& x_v,
    const FusionParams<typename DerivedA::Scalar>& p) {
  using Scalar = typename DerivedA::Scalar;
  p.validate();
  FusionTrace<Scalar> t;
  t.input_a = x_a;
  t.input_v = x_v;
  t.branch_a = p.proj_a(x_a);
  t.branch_v = p.proj_v(x_v);
  typename Types<Scalar>::Vector joint(2 * p.dim());
  joint << t.branch_a, t.branch_v;
  t.gate = p.gate(joint).unaryExpr([](Scalar s) { return sigmoid(s); });
  t.mixed = (t.gate.array() * t.branch_a.array() +
             (Scalar(1) - t.gate.array()) * t.branch_v.array())
                .matrix();
  t.fused = p.out(t.mixed);
  return t;
}

template <typename Scalar>
UtteranceEmbedding<Scalar> gated_fuse(const UtteranceEmbedding<Scalar>& x_a,
                                      const UtteranceEmbedding<Scalar>& x_v,
                                      const FusionParams<Scalar>& p) {
  require(x_a.modality == Modality::audio && x_v.modality == Modality::visual,
          "gated_fuse takes an audio and a visual embedding");
  UtteranceEmbedding<Scalar> out;
  out.values = fuse_trace(x_a.values, x_v.values, p).fused;
  out.modality = Modality::fused;
  out.utt_id = x_a.utt_id;
  out.identity_id = x_a.identity_id;
  return out;
}

template <typename Scalar>
struct FusionGradient {
  FusionParams<Scalar> params;
  typename Types<Scalar>::Vector input_a;
  typename Types<Scalar>::Vector input_v;
};

/// grad_branch_a/v are optional extra upstream gradients on u_a and u_v
/// (the orthogonality penalty acts there).
template <typename Scalar>
FusionGradient<Scalar> fuse_backward(
    const FusionParams<Scalar>& p, const FusionTrace<Scalar>& t,
    const typename Types<Scalar>::Vector& grad_fused,
    const typename Types<Scalar>::Vector& grad_branch_a =
        typename Types<Scalar>::Vector(),
    const typename Types<Scalar>::Vector& grad_branch_v =
        typename Types<Scalar>::Vector()) {
  using Vector = typename Types<Scalar>::Vector;
  const auto d = p.dim();
  FusionGradient<Scalar> g;
  g.params.out.W = grad_fused * t.mixed.transpose();
  g.params.out.b = grad_fused;
  const Vector g_mixed = p.out.W.transpose() * grad_fused;

  const Vector g_gate =
      (g_mixed.array() * (t.branch_a - t.branch_v).array()).matrix();
  Vector g_a = (g_mixed.array() * t.gate.array()).matrix();
  Vector g_v = (g_mixed.array() * (Scalar(1) - t.gate.array())).matrix();
  if (grad_branch_a.size() == d) g_a += grad_branch_a;
  if (grad_branch_v.size() == d) g_v += grad_branch_v;

  const Vector g_pre =
      (g_gate.array() * t.gate.array() * (Scalar(1) - t.gate.array()))
          .matrix();
  Vector joint(2 * d);
  joint << t.branch_a, t.branch_v;
  g.params.gate.W = g_pre * joint.transpose();
  g.params.gate.b = g_pre;
  const Vector g_joint = p.gate.W.transpose() * g_pre;
  g_a += g_joint.head(d);
  g_v += g_joint.tail(d);

  g.params.proj_a.W = g_a * t.input_a.transpose();
  g.params.proj_a.b = g_a;
  g.params.proj_v.W = g_v * t.input_v.transpose();
  g.params.proj_v.b = g_v;
  g.input_a = p.proj_a.W.transpose() * g_a;
  g.input_v = p.proj_v.W.transpose() * g_v;
  return g;
}

template <typename Scalar>
struct SquaredCosine {
  Scalar value = 0;
  typename Types<Scalar>::Vector d_x;
  typename Types<Scalar>::Vector d_y;
};

template <typename Scalar>
SquaredCosine<Scalar> squared_cosine_with_grad(
    const typename Types<Scalar>::Vector& x,
    const typename Types<Scalar>::Vector& y) {
  const auto c = cosine_with_grad<Scalar>(x, y);
  return {c.value * c.value, Scalar(2) * c.value * c.d_x,
          Scalar(2) * c.value * c.d_y};
}

/// Mean squared cosine over index-paired branch embeddings.
template <typename Scalar>
Scalar orthogonality_penalty(
    const std::vector<UtteranceEmbedding<Scalar>>& batch_a,
    const std::vector<UtteranceEmbedding<Scalar>>& batch_v) {
  require(batch_a.size() == batch_v.size(),
          "orthogonality penalty needs equal batch sizes (" +
              std::to_string(batch_a.size()) + " vs " +
              std::to_string(batch_v.size()) + ")");
  require(!batch_a.empty(), "orthogonality penalty needs a non-empty batch");
  Scalar total = 0;
  for (std::size_t i = 0; i < batch_a.size(); ++i) {
    require(batch_a[i].values.size() == batch_v[i].values.size(),
            "orthogonality penalty: embedding dims differ at index " +
                std::to_string(i));
    const Scalar c = safe_cosine(batch_a[i].values, batch_v[i].values);
    total += c * c;
  }
  return total / static_cast<Scalar>(batch_a.size());
}

}  // namespace avjp
