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

// Attentive statistics pooling with tanh temporal reprojection.
//
// Given frame activations h [T x C] the pooling computes
//
//   e      = V tanh(W h_t + b) + k                  attention logits [T x A]
//   lambda = sum_c e[t, c]                          temporal attention [T]
//   lambda_tanh = mu * tanh((lambda - mu) / sd) + mu
//   e_tanh = e[t, :] * lambda_tanh[t] / lambda[t]
//   alpha  = softmax over t, per column of e_tanh
//   mean_c = sum_t alpha h,  std_c = sqrt(sum_t alpha (h - mean_c)^2)
//
// where mu and sd are the mean and population standard deviation of lambda.
// Every function is pure; attentive_pool_backward propagates gradients of
// the pooled statistics (and optionally of lambda_tanh) back to h and to the
// attention parameters.

#pragma once

#include <cmath>
#include <string>

#include "avjp/types.hpp"

namespace avjp {

/// Below this population std the temporal reprojection is the identity.
inline constexpr double kReprojectStdEps = 1e-8;
/// Below this |lambda_t| the rescale ratio is forced to 1.
inline constexpr double kRescaleEps = 1e-8;

template <typename Scalar>
struct FrameFeatures {
  typename Types<Scalar>::Matrix values;  // [T x C]
  Modality modality = Modality::audio;
  std::string utt_id;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

template <typename Scalar>
struct AttentionParams {
  using Matrix = typename Types<Scalar>::Matrix;
  using Vector = typename Types<Scalar>::Vector;

  Matrix W;  // [R x C]
  Vector b;  // [R]
  Matrix V;  // [A x R], rows are the per-channel scoring vectors
  Vector k;  // [A]

  Eigen::Index channels() const { return W.cols(); }
  Eigen::Index bottleneck() const { return W.rows(); }
  Eigen::Index heads() const { return V.rows(); }

  static AttentionParams zeros(Eigen::Index channels, Eigen::Index bottleneck,
                               Eigen::Index heads) {
    return {Matrix::Zero(bottleneck, channels), Vector::Zero(bottleneck),
            Matrix::Zero(heads, bottleneck), Vector::Zero(heads)};
  }

  void set_zero() {
    W.setZero();
    b.setZero();
    V.setZero();
    k.setZero();
  }

  template <typename F>
  void for_each(F&& f) {
    f("W", W);
    f("b", b);
    f("V", V);
    f("k", k);
  }

  void validate() const {
    require(W.rows() >= 1 && W.cols() >= 1,
            "attention W must be non-empty [R x C]");
    require(b.size() == W.rows(), "attention b has " + std::to_string(b.size()) +
                                      " entries but W has R=" +
                                      std::to_string(W.rows()) + " rows");
    require(V.cols() == W.rows(), "attention V has " + std::to_string(V.cols()) +
                                      " columns but R=" +
                                      std::to_string(W.rows()));
    require(V.rows() >= 1, "attention V must have at least one row (A >= 1)");
    require(k.size() == V.rows(), "attention k has " + std::to_string(k.size()) +
                                      " entries but A=" +
                                      std::to_string(V.rows()));
    require(W.allFinite() && b.allFinite() && V.allFinite() && k.allFinite(),
            "attention parameters must be finite");
  }
};

template <typename Scalar>
struct AttentionState {
  using Matrix = typename Types<Scalar>::Matrix;
  using Vector = typename Types<Scalar>::Vector;

  Matrix hidden;         // tanh(W h_t + b), [T x R]
  Matrix logits;         // [T x A]
  Vector temporal;       // [T]
  Vector temporal_tanh;  // [T]
  Scalar temporal_mean = 0;
  Scalar temporal_std = 0;
  Matrix logits_tanh;  // [T x A]
  Matrix weights;      // [T x A], columns sum to one
};

template <typename Scalar>
struct PooledStats {
  using Vector = typename Types<Scalar>::Vector;

  Vector mean;  // [C]
  Vector std;   // [C]
  Vector embedding;  // [2C], mean then std
};

template <typename Scalar>
struct TemporalProjection {
  typename Types<Scalar>::Vector temporal;
  typename Types<Scalar>::Vector temporal_tanh;
  Scalar mean = 0;
  Scalar std = 0;
};

namespace detail {

template <typename Derived>
void check_frames(const Eigen::MatrixBase<Derived>& h,
                  Eigen::Index expected_channels) {
  require(h.rows() >= 1, "frame features need T >= 1 frames");
  require(h.cols() == expected_channels,
          "frame features have C=" + std::to_string(h.cols()) +
              " channels but attention W expects C=" +
              std::to_string(expected_channels));
  require(h.allFinite(), "frame features must be finite");
}

template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix attention_hidden(
    const Eigen::MatrixBase<Derived>& h,
    const AttentionParams<typename Derived::Scalar>& p) {
  using Matrix = typename Types<typename Derived::Scalar>::Matrix;
  Matrix z = h * p.W.transpose();
  z.rowwise() += p.b.transpose();
  return z.array().tanh().matrix();
}

}  // namespace detail

/// e[t, c] = v_c . tanh(W h_t + b) + k_c, returned as a [T x A] matrix.
template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix compute_attention_logits(
    const Eigen::MatrixBase<Derived>& h,
    const AttentionParams<typename Derived::Scalar>& p) {
  p.validate();
  detail::check_frames(h, p.channels());
  typename Types<typename Derived::Scalar>::Matrix e =
      detail::attention_hidden(h, p) * p.V.transpose();
  e.rowwise() += p.k.transpose();
  return e;
}

/// Collapses logits over the channel axis and applies the mean-preserving
/// tanh reprojection. A constant temporal vector passes through unchanged.
template <typename Derived>
TemporalProjection<typename Derived::Scalar> tanh_reproject_temporal(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  require(logits.rows() >= 1, "temporal reprojection needs T >= 1");
  require(logits.allFinite(), "attention logits must be finite");

  TemporalProjection<Scalar> out;
  out.temporal = logits.rowwise().sum();
  const auto n = static_cast<Scalar>(out.temporal.size());
  out.mean = out.temporal.sum() / n;
  out.std = std::sqrt((out.temporal.array() - out.mean).square().sum() / n);
  if (out.std < Scalar(kReprojectStdEps)) {
    out.temporal_tanh = out.temporal;
  } else {
    out.temporal_tanh =
        (out.mean * ((out.temporal.array() - out.mean) / out.std).tanh() +
         out.mean)
            .matrix();
  }
  return out;
}

template <typename DerivedM, typename DerivedA, typename DerivedB>
typename Types<typename DerivedM::Scalar>::Matrix rescale_attention_map(
    const Eigen::MatrixBase<DerivedM>& logits,
    const Eigen::MatrixBase<DerivedA>& temporal,
    const Eigen::MatrixBase<DerivedB>& temporal_tanh) {
  using Scalar = typename DerivedM::Scalar;
  require(temporal.size() == logits.rows() &&
              temporal_tanh.size() == logits.rows(),
          "rescale: logits have T=" + std::to_string(logits.rows()) +
              " rows but temporal vectors have " +
              std::to_string(temporal.size()) + " and " +
              std::to_string(temporal_tanh.size()) + " entries");
  typename Types<Scalar>::Matrix out = logits;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    if (std::abs(temporal(t)) >= Scalar(kRescaleEps)) {
      out.row(t) *= temporal_tanh(t) / temporal(t);
    }
  }
  return out;
}

/// Softmax over frames, independently for every column.
template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix channelwise_softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  require(logits.rows() >= 1, "softmax needs T >= 1");
  typename Types<typename Derived::Scalar>::Matrix w =
      (logits.rowwise() - logits.colwise().maxCoeff()).array().exp().matrix();
  w.array().rowwise() /= w.colwise().sum().array();
  return w;
}

template <typename DerivedH, typename DerivedW>
PooledStats<typename DerivedH::Scalar> weighted_mean_std(
    const Eigen::MatrixBase<DerivedH>& h,
    const Eigen::MatrixBase<DerivedW>& weights) {
  using Scalar = typename DerivedH::Scalar;
  require(weights.rows() == h.rows() && weights.cols() == h.cols(),
          "weighted stats: weights are [" + std::to_string(weights.rows()) +
              " x " + std::to_string(weights.cols()) + "] but frames are [" +
              std::to_string(h.rows()) + " x " + std::to_string(h.cols()) +
              "] (A must equal C)");
  PooledStats<Scalar> out;
  out.mean = (weights.array() * h.array()).colwise().sum().transpose();
  // Centred second moment; the one-pass form loses digits when attention
  // settles on a single frame.
  out.std = (weights.array() *
             (h.rowwise() - out.mean.transpose()).array().square())
                .colwise()
                .sum()
                .sqrt()
                .transpose()
                .matrix();
  out.embedding.resize(2 * out.mean.size());
  out.embedding << out.mean, out.std;
  return out;
}

template <typename Scalar>
struct PoolingResult {
  PooledStats<Scalar> stats;
  AttentionState<Scalar> state;
};

template <typename Derived>
PoolingResult<typename Derived::Scalar> attentive_pool(
    const Eigen::MatrixBase<Derived>& h,
    const AttentionParams<typename Derived::Scalar>& p) {
  p.validate();
  detail::check_frames(h, p.channels());
  PoolingResult<typename Derived::Scalar> r;
  auto& s = r.state;
  s.hidden = detail::attention_hidden(h, p);
  s.logits = s.hidden * p.V.transpose();
  s.logits.rowwise() += p.k.transpose();
  auto proj = tanh_reproject_temporal(s.logits);
  s.temporal = std::move(proj.temporal);
  s.temporal_tanh = std::move(proj.temporal_tanh);
  s.temporal_mean = proj.mean;
  s.temporal_std = proj.std;
  s.logits_tanh = rescale_attention_map(s.logits, s.temporal, s.temporal_tanh);
  s.weights = channelwise_softmax(s.logits_tanh);
  r.stats = weighted_mean_std(h, s.weights);
  return r;
}

template <typename Scalar>
PoolingResult<Scalar> attentive_pool(const FrameFeatures<Scalar>& h,
                                     const AttentionParams<Scalar>& p) {
  return attentive_pool(h.values, p);
}

template <typename Scalar>
struct PoolingGradient {
  typename Types<Scalar>::Matrix frames;  // d/dh, [T x C]
  AttentionParams<Scalar> params;
};

/// Reverse pass through attentive_pool.
///
/// grad_mean and grad_std are the upstream gradients of the pooled mean and
/// std. grad_temporal_tanh, when non-empty, is an extra upstream gradient on
/// lambda_tanh (the cross-modal encoders consume it directly).
/// At std == 0 the sqrt has no derivative; the zero subgradient is used.
template <typename Scalar>
PoolingGradient<Scalar> attentive_pool_backward(
    const typename Types<Scalar>::Matrix& h, const AttentionParams<Scalar>& p,
    const PoolingResult<Scalar>& fwd,
    const typename Types<Scalar>::Vector& grad_mean,
    const typename Types<Scalar>::Vector& grad_std,
    const typename Types<Scalar>::Vector& grad_temporal_tanh =
        typename Types<Scalar>::Vector()) {
  using Matrix = typename Types<Scalar>::Matrix;
  using Vector = typename Types<Scalar>::Vector;
  const auto& s = fwd.state;
  const auto& st = fwd.stats;
  const Eigen::Index T = h.rows();
  const Eigen::Index C = h.cols();
  require(grad_mean.size() == C && grad_std.size() == C,
          "pooling backward: upstream gradients must have C entries");
  require(grad_temporal_tanh.size() == 0 || grad_temporal_tanh.size() == T,
          "pooling backward: temporal gradient must have T entries");

  // Weighted statistics.
  Vector g_var = Vector::Zero(C);
  for (Eigen::Index c = 0; c < C; ++c) {
    if (st.std(c) > Scalar(0)) g_var(c) = grad_std(c) / (Scalar(2) * st.std(c));
  }
  const Vector g_mu = grad_mean - Scalar(2) * st.mean.cwiseProduct(g_var);
  const Matrix g_alpha = (h.array().rowwise() * g_mu.transpose().array() +
                          h.array().square().rowwise() * g_var.transpose().array())
                             .matrix();
  Matrix g_h = (s.weights.array().rowwise() * g_mu.transpose().array() +
                Scalar(2) * s.weights.array() * h.array() *
                    g_var.transpose().replicate(T, 1).array())
                   .matrix();

  // Softmax over frames.
  const Vector col_dot =
      (s.weights.array() * g_alpha.array()).colwise().sum().transpose();
  const Matrix g_logits_tanh =
      (s.weights.array() *
       (g_alpha.rowwise() - col_dot.transpose()).array())
          .matrix();

  // Row rescale by lambda_tanh / lambda.
  Matrix g_logits(T, g_logits_tanh.cols());
  Vector g_temporal = Vector::Zero(T);
  Vector g_temporal_tanh =
      grad_temporal_tanh.size() == T ? grad_temporal_tanh : Vector::Zero(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    const Scalar lam = s.temporal(t);
    if (std::abs(lam) >= Scalar(kRescaleEps)) {
      const Scalar ratio = s.temporal_tanh(t) / lam;
      g_logits.row(t) = ratio * g_logits_tanh.row(t);
      const Scalar g_ratio = s.logits.row(t).dot(g_logits_tanh.row(t));
      g_temporal_tanh(t) += g_ratio / lam;
      g_temporal(t) -= g_ratio * s.temporal_tanh(t) / (lam * lam);
    } else {
      g_logits.row(t) = g_logits_tanh.row(t);
    }
  }

  // Mean-preserving tanh reprojection.
  if (s.temporal_std < Scalar(kReprojectStdEps)) {
    g_temporal += g_temporal_tanh;
  } else {
    const auto n = static_cast<Scalar>(T);
    const Scalar mu = s.temporal_mean;
    const Scalar sd = s.temporal_std;
    const Vector z = ((s.temporal.array() - mu) / sd).matrix();
    const Vector th = z.array().tanh().matrix();
    const Vector q = (g_temporal_tanh.array() * mu *
                      (Scalar(1) - th.array().square()) / sd)
                         .matrix();
    const Scalar through_mean =
        g_temporal_tanh.dot((th.array() + Scalar(1)).matrix()) / n;
    g_temporal.array() += through_mean + q.array() - q.sum() / n -
                          z.array() * (q.dot(z) / n);
  }

  // lambda is the row sum of the logits.
  g_logits.colwise() += g_temporal;

  PoolingGradient<Scalar> out;
  out.params.V = g_logits.transpose() * s.hidden;
  out.params.k = g_logits.colwise().sum().transpose();
  const Matrix g_pre =
      ((g_logits * p.V).array() * (Scalar(1) - s.hidden.array().square()))
          .matrix();
  out.params.W = g_pre.transpose() * h;
  out.params.b = g_pre.colwise().sum().transpose();
  g_h += g_pre * p.W;
  out.frames = std::move(g_h);
  return out;
}

}  // namespace avjp
