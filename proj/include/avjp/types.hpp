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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace avjp {

/// Dense aliases shared by every scalar-templated module.
template <typename FloatType>
struct Types {
  using Scalar = FloatType;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
};

using TypesD = Types<double>;
using TypesF = Types<float>;

enum class Modality { audio, visual, fused };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::audio: return "audio";
    case Modality::visual: return "visual";
    case Modality::fused: return "fused";
  }
  return "unknown";
}

/// Raised when a caller violates an operation's preconditions
/// (shape mismatch, empty input, out-of-range label, ...).
/// The CLI maps it to exit code 2.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

/// Flat view of one parameter tensor, used by the optimizer and the
/// checkpoint writer. Eigen storage is contiguous so a (data, size) pair
/// covers both matrices and vectors.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Scalar* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
};

template <typename Scalar, typename Derived>
ParamRef<Scalar> param_ref(std::string name, Eigen::PlainObjectBase<Derived>& m) {
  return ParamRef<Scalar>{std::move(name), m.data(), m.rows(), m.cols()};
}

}  // namespace avjp
