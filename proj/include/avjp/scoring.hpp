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

// Verification back-end: cosine scoring, adaptive s-norm, EER, minDCF and
// score-level ensembling. A trial is accepted when score >= threshold.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "avjp/types.hpp"

namespace avjp {

struct Trial {
  std::string enroll_id;
  std::string test_id;
  bool target = false;
};

struct TrialList {
  std::vector<Trial> trials;

  std::size_t size() const { return trials.size(); }
  bool empty() const { return trials.empty(); }
};

template <typename Scalar>
struct ScoreSet {
  std::vector<Scalar> target_scores;
  std::vector<Scalar> nontarget_scores;
};

template <typename Scalar>
struct EerResult {
  Scalar eer = 0;
  Scalar threshold = 0;
};

/// Cohort of (unit-normalized at use) embeddings for adaptive s-norm.
template <typename Scalar>
struct CohortStats {
  typename Types<Scalar>::Matrix embeddings;  // [N x D]
  Eigen::Index top_k = 50;
};

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_score(const Eigen::MatrixBase<DerivedA>& e1,
                                       const Eigen::MatrixBase<DerivedB>& e2) {
  using Scalar = typename DerivedA::Scalar;
  require(e1.size() == e2.size(), "cosine_score: dims differ (" +
                                      std::to_string(e1.size()) + " vs " +
                                      std::to_string(e2.size()) + ")");
  const Scalar n1 = e1.norm();
  const Scalar n2 = e2.norm();
  require(n1 > Scalar(0) && n2 > Scalar(0),
          "cosine_score: zero-norm embedding");
  return std::clamp(e1.dot(e2) / (n1 * n2), Scalar(-1), Scalar(1));
}

template <typename Scalar>
struct TopKStats {
  Scalar mean = 0;
  Scalar std = 0;
};

/// Mean and population std of the top_k highest cosine scores of `e`
/// against the cohort.
template <typename Derived>
TopKStats<typename Derived::Scalar> cohort_top_k_stats(
    const Eigen::MatrixBase<Derived>& e,
    const CohortStats<typename Derived::Scalar>& cohort) {
  using Scalar = typename Derived::Scalar;
  const auto n = cohort.embeddings.rows();
  require(n >= 1, "adaptive s-norm: empty cohort");
  require(cohort.top_k >= 1 && cohort.top_k <= n,
          "adaptive s-norm: top_k=" + std::to_string(cohort.top_k) +
              " outside [1, cohort size " + std::to_string(n) + "]");
  require(cohort.embeddings.cols() == e.size(),
          "adaptive s-norm: cohort dim " +
              std::to_string(cohort.embeddings.cols()) +
              " does not match embedding dim " + std::to_string(e.size()));
  std::vector<Scalar> scores(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    scores[std::size_t(i)] = cosine_score(e, cohort.embeddings.row(i).transpose());
  const auto k = static_cast<std::size_t>(cohort.top_k);
  std::partial_sort(scores.begin(), scores.begin() + std::ptrdiff_t(k),
                    scores.end(), std::greater<Scalar>());
  TopKStats<Scalar> st;
  for (std::size_t i = 0; i < k; ++i) st.mean += scores[i];
  st.mean /= Scalar(k);
  Scalar var = 0;
  for (std::size_t i = 0; i < k; ++i)
    var += (scores[i] - st.mean) * (scores[i] - st.mean);
  st.std = std::sqrt(var / Scalar(k));
  return st;
}

/// 0.5 * [(raw - mu_e) / sd_e + (raw - mu_t) / sd_t]; a side whose std is
/// below 1e-8 contributes 0.
template <typename Scalar>
Scalar snorm_from_stats(Scalar raw, const TopKStats<Scalar>& enroll,
                        const TopKStats<Scalar>& test) {
  const auto side = [raw](const TopKStats<Scalar>& s) {
    return s.std < Scalar(1e-8) ? Scalar(0) : (raw - s.mean) / s.std;
  };
  return Scalar(0.5) * (side(enroll) + side(test));
}

template <typename DerivedE, typename DerivedT>
typename DerivedE::Scalar adaptive_snorm(
    typename DerivedE::Scalar raw, const Eigen::MatrixBase<DerivedE>& e,
    const Eigen::MatrixBase<DerivedT>& t,
    const CohortStats<typename DerivedE::Scalar>& cohort) {
  return snorm_from_stats(raw, cohort_top_k_stats(e, cohort),
                          cohort_top_k_stats(t, cohort));
}

namespace detail {

template <typename Scalar>
struct DetPoint {
  Scalar threshold;
  Scalar far;  // fraction of nontargets >= threshold
  Scalar frr;  // fraction of targets < threshold
};

template <typename Scalar>
std::vector<DetPoint<Scalar>> det_curve(const ScoreSet<Scalar>& s) {
  require(!s.target_scores.empty() && !s.nontarget_scores.empty(),
          "EER/minDCF need non-empty target and nontarget scores");
  std::vector<Scalar> tar = s.target_scores;
  std::vector<Scalar> non = s.nontarget_scores;
  for (Scalar x : tar) require(std::isfinite(x), "scores must be finite");
  for (Scalar x : non) require(std::isfinite(x), "scores must be finite");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<Scalar> all;
  all.reserve(tar.size() + non.size());
  std::merge(tar.begin(), tar.end(), non.begin(), non.end(),
             std::back_inserter(all));
  all.erase(std::unique(all.begin(), all.end()), all.end());

  const auto nt = Scalar(tar.size());
  const auto nn = Scalar(non.size());
  std::vector<DetPoint<Scalar>> curve;
  curve.reserve(all.size() + 1);
  std::size_t ti = 0, ni = 0;
  for (Scalar th : all) {
    while (ti < tar.size() && tar[ti] < th) ++ti;
    while (ni < non.size() && non[ni] < th) ++ni;
    curve.push_back({th, Scalar(non.size() - ni) / nn, Scalar(ti) / nt});
  }
  // Reject-all operating point.
  curve.push_back({std::numeric_limits<Scalar>::infinity(), Scalar(0),
                   Scalar(1)});
  return curve;
}

}  // namespace detail

/// Equal error rate via a threshold sweep over the unique scores, linearly
/// interpolated between the two sweep points where FAR - FRR changes sign.
template <typename Scalar>
EerResult<Scalar> compute_eer(const ScoreSet<Scalar>& s) {
  const auto curve = detail::det_curve(s);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const Scalar d = curve[i].far - curve[i].frr;
    if (d > Scalar(0)) continue;
    if (d == Scalar(0)) return {curve[i].frr, curve[i].threshold};
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    const Scalar d_prev = a.far - a.frr;
    const Scalar t = d_prev / (d_prev - d);
    const Scalar hi = std::isfinite(b.threshold) ? b.threshold : a.threshold;
    return {a.far + t * (b.far - a.far), a.threshold + t * (hi - a.threshold)};
  }
  // Unreachable: the reject-all point has FAR - FRR = -1.
  return {curve.back().frr, curve.back().threshold};
}

template <typename Scalar>
Scalar compute_mindcf(const ScoreSet<Scalar>& s, Scalar p_target = Scalar(0.01),
                      Scalar c_miss = Scalar(1), Scalar c_fa = Scalar(1)) {
  require(p_target > Scalar(0) && p_target < Scalar(1),
          "minDCF: p_target must lie in (0, 1)");
  const auto curve = detail::det_curve(s);
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& pt : curve) {
    best = std::min(best, p_target * c_miss * pt.frr +
                              (Scalar(1) - p_target) * c_fa * pt.far);
  }
  return best / std::min(p_target * c_miss, (Scalar(1) - p_target) * c_fa);
}

/// Trial-wise weighted mean of (already normalized) system scores.
template <typename Scalar>
std::vector<Scalar> ensemble_scores(
    const std::vector<std::vector<Scalar>>& systems,
    const std::optional<std::vector<Scalar>>& weights = std::nullopt) {
  require(!systems.empty(), "ensemble needs at least one system");
  const std::size_t n = systems.front().size();
  for (const auto& sys : systems)
    require(sys.size() == n, "ensemble: system score lengths differ (" +
                                 std::to_string(n) + " vs " +
                                 std::to_string(sys.size()) + ")");
  std::vector<Scalar> w(systems.size(), Scalar(1) / Scalar(systems.size()));
  if (weights) {
    require(weights->size() == systems.size(),
            "ensemble: one weight per system required");
    Scalar sum = 0;
    for (Scalar x : *weights) sum += x;
    require(std::abs(sum - Scalar(1)) < Scalar(1e-9),
            "ensemble: weights must sum to 1");
    w = *weights;
  }
  if (systems.size() == 1) return systems.front();
  std::vector<Scalar> out(n, Scalar(0));
  for (std::size_t s = 0; s < systems.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) out[i] += w[s] * systems[s][i];
  return out;
}

}  // namespace avjp
