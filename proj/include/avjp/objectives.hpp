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

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "avjp/types.hpp"

namespace avjp {

template <typename Scalar>
struct ClassifierHead {
  typename Types<Scalar>::Matrix weights;  // [num_identities x D]
  Scalar margin = Scalar(0.5);
  Scalar scale = Scalar(30);

  Eigen::Index num_classes() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }

  template <typename Rng>
  static ClassifierHead random(Eigen::Index classes, Eigen::Index dim,
                               Rng& rng, Scalar margin = Scalar(0.5),
                               Scalar scale = Scalar(30)) {
    std::normal_distribution<double> dist(0.0, 1.0);
    ClassifierHead h;
    h.weights.resize(classes, dim);
    for (Eigen::Index i = 0; i < h.weights.size(); ++i)
      h.weights.data()[i] = static_cast<Scalar>(dist(rng));
    h.margin = margin;
    h.scale = scale;
    return h;
  }

  void validate() const {
    require(weights.rows() >= 1 && weights.cols() >= 1,
            "classifier head must be non-empty");
    require(margin >= Scalar(0) && margin < Scalar(std::numbers::pi / 2),
            "AAM margin must lie in [0, pi/2)");
    require(scale > Scalar(0), "AAM scale must be positive");
  }
};

template <typename Scalar>
struct LossWeights {
  Scalar beta = Scalar(1);
  Scalar gamma = Scalar(0.5);
  Scalar ortho_weight = Scalar(0.1);
};

template <typename Scalar>
struct AamResult {
  Scalar loss = 0;
  typename Types<Scalar>::Vector d_embedding;
  typename Types<Scalar>::Matrix d_weights;
  typename Types<Scalar>::Vector cosines;
};

/// Additive angular margin softmax cross-entropy, with analytic gradients
/// w.r.t. the embedding and the (un-normalized) head weights.
///
/// Target logit is s*cos(theta_y + m); once theta_y + m passes pi the
/// monotone linear extension s*(cos(theta_y) - m*sin(m)) takes over.
template <typename Scalar>
AamResult<Scalar> aam_softmax(const typename Types<Scalar>::Vector& emb,
                              Eigen::Index label,
                              const ClassifierHead<Scalar>& head) {
  using Vector = typename Types<Scalar>::Vector;
  using Matrix = typename Types<Scalar>::Matrix;
  head.validate();
  require(emb.size() == head.dim(),
          "AAM: embedding dim " + std::to_string(emb.size()) +
              " does not match head dim " + std::to_string(head.dim()));
  require(label >= 0 && label < head.num_classes(),
          "AAM: label " + std::to_string(label) + " outside [0, " +
              std::to_string(head.num_classes()) + ")");
  const Scalar emb_norm = emb.norm();
  require(emb_norm > Scalar(0) && std::isfinite(emb_norm),
          "AAM: embedding must have a finite nonzero norm");
  const Vector row_norms = head.weights.rowwise().norm();
  require((row_norms.array() > Scalar(0)).all(),
          "AAM: head rows must have nonzero norm");

  const Vector x_hat = emb / emb_norm;
  const Matrix w_hat = head.weights.array().colwise() / row_norms.array();
  AamResult<Scalar> r;
  r.cosines = (w_hat * x_hat).cwiseMax(Scalar(-1)).cwiseMin(Scalar(1));

  const Scalar m = head.margin;
  const Scalar s = head.scale;
  const Scalar cos_m = std::cos(m);
  const Scalar sin_m = std::sin(m);
  const Scalar c_y = r.cosines(label);
  const Scalar sin_y = std::sqrt(std::max(Scalar(0), Scalar(1) - c_y * c_y));

  // theta_y + m <= pi  <=>  cos(theta_y) >= cos(pi - m) = -cos(m)
  Scalar target, d_target;
  if (c_y >= -cos_m) {
    target = c_y * cos_m - sin_y * sin_m;
    d_target = sin_y > Scalar(0) ? cos_m + sin_m * c_y / sin_y : cos_m;
  } else {
    target = c_y - m * sin_m;
    d_target = Scalar(1);
  }

  Vector logits = s * r.cosines;
  logits(label) = s * target;
  const Scalar max_logit = logits.maxCoeff();
  const Vector expv = (logits.array() - max_logit).exp().matrix();
  const Scalar denom = expv.sum();
  // Off-target mass, kept apart so confident predictions keep precision.
  const Scalar rest = expv.head(label).sum() + expv.tail(expv.size() - label - 1).sum();
  if (max_logit == logits(label)) {
    r.loss = std::log1p(rest);
  } else {
    r.loss = -(logits(label) - max_logit) + std::log(denom);
  }

  Vector d_logits = expv / denom;
  d_logits(label) = -rest / denom;
  Vector d_cos = s * d_logits;
  d_cos(label) *= d_target;

  // c_j = w_hat_j . x_hat
  r.d_embedding = (w_hat.transpose() * d_cos - d_cos.dot(r.cosines) * x_hat) /
                  emb_norm;
  r.d_weights = (d_cos * x_hat.transpose() -
                 (d_cos.array() * r.cosines.array()).matrix().asDiagonal() *
                     w_hat)
                    .array()
                    .colwise() /
                row_norms.array();
  return r;
}

template <typename Scalar>
Scalar aam_softmax_loss(const typename Types<Scalar>::Vector& emb,
                        Eigen::Index label,
                        const ClassifierHead<Scalar>& head) {
  return aam_softmax(emb, label, head).loss;
}

/// l_aam + beta*l_adv + gamma*l_cycle + ortho_weight*l_ortho.
template <typename Scalar>
Scalar total_loss(Scalar l_aam, Scalar l_adv, Scalar l_cycle, Scalar l_ortho,
                  const LossWeights<Scalar>& w) {
  return l_aam + w.beta * l_adv + w.gamma * l_cycle + w.ortho_weight * l_ortho;
}

}  // namespace avjp
