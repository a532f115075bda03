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

// Small frame-level feature extractors.
//
// Audio: a stack of 1-D temporal convolutions over [T x in_dim] features,
// ReLU between layers, linear last layer, T preserved.
// Visual: per-frame 3x3 conv + ReLU + 2x2 average pooling blocks on grey
// H x W frames, then a linear map of the flattened maps to C channels.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "avjp/types.hpp"

namespace avjp {

/// Temporal padding. replicate repeats the edge frames, so a constant input
/// sequence maps to a constant output sequence.
enum class Padding { zero, replicate, circular };

struct AudioEncoderConfig {
  int in_dim = 24;
  int channels = 16;
  std::vector<int> context_widths{5, 3};
  int depth = 2;
  Padding padding = Padding::replicate;

  int width_of(int layer) const {
    if (context_widths.empty()) return 1;
    const auto i = std::min<std::size_t>(std::size_t(layer),
                                         context_widths.size() - 1);
    return context_widths[i];
  }

  void validate() const {
    require(in_dim >= 1, "audio encoder in_dim must be >= 1");
    require(channels >= 1, "audio encoder channels must be >= 1");
    require(depth >= 1, "audio encoder depth must be >= 1");
    for (int w : context_widths)
      require(w >= 1 && w % 2 == 1,
              "audio context widths must be odd, got " + std::to_string(w));
  }
};

struct VisualEncoderConfig {
  int height = 16;
  int width = 16;
  int channels = 16;
  int depth = 2;
  int base_filters = 4;

  int filters_of(int block) const { return base_filters << block; }

  void validate() const {
    require(channels >= 1, "visual encoder channels must be >= 1");
    require(depth >= 0, "visual encoder depth must be >= 0");
    require(base_filters >= 1, "visual encoder base_filters must be >= 1");
    require(height >= 1 && width >= 1 && height % (1 << depth) == 0 &&
                width % (1 << depth) == 0,
            "visual frame " + std::to_string(height) + "x" +
                std::to_string(width) + " must be divisible by 2^depth");
  }
};

template <typename Scalar>
struct ConvLayer {
  typename Types<Scalar>::Matrix W;  // [out x (taps * in)]
  typename Types<Scalar>::Vector b;  // [out]
};

namespace detail {

template <typename Scalar, typename Rng>
void he_uniform(typename Types<Scalar>::Matrix& m, Eigen::Index fan_in,
                Rng& rng) {
  const double bound = std::sqrt(6.0 / double(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<Scalar>(dist(rng));
}

/// Rows t of the result hold [x_{t-r}, ..., x_{t+r}].
template <typename Scalar>
typename Types<Scalar>::Matrix temporal_unfold(
    const typename Types<Scalar>::Matrix& x, int width, Padding pad) {
  const Eigen::Index T = x.rows();
  const Eigen::Index d = x.cols();
  const int r = width / 2;
  typename Types<Scalar>::Matrix cols =
      Types<Scalar>::Matrix::Zero(T, Eigen::Index(width) * d);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < width; ++j) {
      Eigen::Index src = t + j - r;
      if (pad == Padding::circular) {
        src = ((src % T) + T) % T;
      } else if (pad == Padding::replicate) {
        src = std::clamp<Eigen::Index>(src, 0, T - 1);
      } else if (src < 0 || src >= T) {
        continue;
      }
      cols.block(t, Eigen::Index(j) * d, 1, d) = x.row(src);
    }
  }
  return cols;
}

template <typename Scalar>
typename Types<Scalar>::Matrix temporal_fold(
    const typename Types<Scalar>::Matrix& g_cols, Eigen::Index T,
    Eigen::Index d, int width, Padding pad) {
  const int r = width / 2;
  typename Types<Scalar>::Matrix g = Types<Scalar>::Matrix::Zero(T, d);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int j = 0; j < width; ++j) {
      Eigen::Index src = t + j - r;
      if (pad == Padding::circular) {
        src = ((src % T) + T) % T;
      } else if (pad == Padding::replicate) {
        src = std::clamp<Eigen::Index>(src, 0, T - 1);
      } else if (src < 0 || src >= T) {
        continue;
      }
      g.row(src) += g_cols.block(t, Eigen::Index(j) * d, 1, d);
    }
  }
  return g;
}

/// 3x3 same-padded patches of a stack of frames. Input rows are ordered
/// (frame, y, x) with one column per channel.
template <typename Scalar>
typename Types<Scalar>::Matrix spatial_unfold(
    const typename Types<Scalar>::Matrix& x, Eigen::Index frames, int h,
    int w) {
  const Eigen::Index c = x.cols();
  typename Types<Scalar>::Matrix cols =
      Types<Scalar>::Matrix::Zero(x.rows(), 9 * c);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index base = f * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const Eigen::Index row = base + y * w + xx;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int sy = y + dy, sx = xx + dx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            const int tap = (dy + 1) * 3 + (dx + 1);
            cols.block(row, Eigen::Index(tap) * c, 1, c) =
                x.row(base + sy * w + sx);
          }
        }
      }
    }
  }
  return cols;
}

template <typename Scalar>
typename Types<Scalar>::Matrix spatial_fold(
    const typename Types<Scalar>::Matrix& g_cols, Eigen::Index frames, int h,
    int w, Eigen::Index c) {
  typename Types<Scalar>::Matrix g =
      Types<Scalar>::Matrix::Zero(g_cols.rows(), c);
  for (Eigen::Index f = 0; f < frames; ++f) {
    const Eigen::Index base = f * h * w;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const Eigen::Index row = base + y * w + xx;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int sy = y + dy, sx = xx + dx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
            const int tap = (dy + 1) * 3 + (dx + 1);
            g.row(base + sy * w + sx) +=
                g_cols.block(row, Eigen::Index(tap) * c, 1, c);
          }
        }
      }
    }
  }
  return g;
}

template <typename Scalar>
typename Types<Scalar>::Matrix avg_pool2(const typename Types<Scalar>::Matrix& x,
                                         Eigen::Index frames, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  typename Types<Scalar>::Matrix out =
      Types<Scalar>::Matrix::Zero(frames * oh * ow, x.cols());
  for (Eigen::Index f = 0; f < frames; ++f)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        const Eigen::Index in0 = f * h * w + (2 * y) * w + 2 * xx;
        out.row(f * oh * ow + y * ow + xx) =
            Scalar(0.25) * (x.row(in0) + x.row(in0 + 1) + x.row(in0 + w) +
                            x.row(in0 + w + 1));
      }
  return out;
}

template <typename Scalar>
typename Types<Scalar>::Matrix avg_pool2_backward(
    const typename Types<Scalar>::Matrix& g, Eigen::Index frames, int h,
    int w) {
  const int oh = h / 2, ow = w / 2;
  typename Types<Scalar>::Matrix out =
      Types<Scalar>::Matrix::Zero(frames * h * w, g.cols());
  for (Eigen::Index f = 0; f < frames; ++f)
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        const Eigen::Index in0 = f * h * w + (2 * y) * w + 2 * xx;
        const auto gr = Scalar(0.25) * g.row(f * oh * ow + y * ow + xx);
        out.row(in0) += gr;
        out.row(in0 + 1) += gr;
        out.row(in0 + w) += gr;
        out.row(in0 + w + 1) += gr;
      }
  return out;
}

}  // namespace detail

template <typename Scalar>
struct AudioEncoder {
  AudioEncoderConfig config;
  std::vector<ConvLayer<Scalar>> layers;

  template <typename Rng>
  static AudioEncoder random(const AudioEncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    AudioEncoder enc;
    enc.config = cfg;
    int in = cfg.in_dim;
    for (int l = 0; l < cfg.depth; ++l) {
      const int width = cfg.width_of(l);
      ConvLayer<Scalar> layer;
      layer.W.resize(cfg.channels, Eigen::Index(width) * in);
      detail::he_uniform<Scalar>(layer.W, Eigen::Index(width) * in, rng);
      layer.b = Types<Scalar>::Vector::Zero(cfg.channels);
      enc.layers.push_back(std::move(layer));
      in = cfg.channels;
    }
    return enc;
  }

  void set_zero() {
    for (auto& l : layers) {
      l.W.setZero();
      l.b.setZero();
    }
  }

  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      f("conv" + std::to_string(i) + ".W", layers[i].W);
      f("conv" + std::to_string(i) + ".b", layers[i].b);
    }
  }
};

template <typename Scalar>
struct AudioTrace {
  std::vector<typename Types<Scalar>::Matrix> unfolded;  // per layer
  std::vector<typename Types<Scalar>::Matrix> pre;       // per layer
  typename Types<Scalar>::Matrix output;                 // [T x C]
};

template <typename Scalar>
AudioTrace<Scalar> audio_forward(const AudioEncoder<Scalar>& enc,
                                 const typename Types<Scalar>::Matrix& frames) {
  require(frames.rows() >= 1, "audio encoder needs T >= 1 frames");
  require(frames.cols() == enc.config.in_dim,
          "audio frames have dim " + std::to_string(frames.cols()) +
              " but the encoder expects in_dim=" +
              std::to_string(enc.config.in_dim));
  AudioTrace<Scalar> tr;
  typename Types<Scalar>::Matrix x = frames;
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    const int width = enc.config.width_of(int(l));
    tr.unfolded.push_back(
        detail::temporal_unfold<Scalar>(x, width, enc.config.padding));
    typename Types<Scalar>::Matrix pre =
        tr.unfolded.back() * enc.layers[l].W.transpose();
    pre.rowwise() += enc.layers[l].b.transpose();
    tr.pre.push_back(pre);
    x = l + 1 < enc.layers.size() ? pre.cwiseMax(Scalar(0)).eval() : pre;
  }
  tr.output = std::move(x);
  return tr;
}

template <typename Scalar>
typename Types<Scalar>::Matrix encode_audio(
    const typename Types<Scalar>::Matrix& frames,
    const AudioEncoder<Scalar>& enc) {
  return audio_forward(enc, frames).output;
}

/// Accumulates parameter gradients into `grad` and returns d/d(frames).
template <typename Scalar>
typename Types<Scalar>::Matrix audio_backward(
    const AudioEncoder<Scalar>& enc, const AudioTrace<Scalar>& tr,
    const typename Types<Scalar>::Matrix& grad_out, AudioEncoder<Scalar>& grad) {
  typename Types<Scalar>::Matrix g = grad_out;
  for (std::size_t li = enc.layers.size(); li-- > 0;) {
    if (li + 1 < enc.layers.size())
      g.array() *= (tr.pre[li].array() > Scalar(0)).template cast<Scalar>();
    grad.layers[li].W += g.transpose() * tr.unfolded[li];
    grad.layers[li].b += g.colwise().sum().transpose();
    const typename Types<Scalar>::Matrix g_cols = g * enc.layers[li].W;
    const int width = enc.config.width_of(int(li));
    const Eigen::Index in_dim = g_cols.cols() / width;
    g = detail::temporal_fold<Scalar>(g_cols, g_cols.rows(), in_dim, width,
                                      enc.config.padding);
  }
  return g;
}

template <typename Scalar>
struct VisualEncoder {
  VisualEncoderConfig config;
  std::vector<ConvLayer<Scalar>> convs;
  ConvLayer<Scalar> head;  // flattened maps -> C

  template <typename Rng>
  static VisualEncoder random(const VisualEncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    VisualEncoder enc;
    enc.config = cfg;
    int in = 1;
    for (int l = 0; l < cfg.depth; ++l) {
      ConvLayer<Scalar> layer;
      layer.W.resize(cfg.filters_of(l), 9 * in);
      detail::he_uniform<Scalar>(layer.W, 9 * in, rng);
      layer.b = Types<Scalar>::Vector::Zero(cfg.filters_of(l));
      enc.convs.push_back(std::move(layer));
      in = cfg.filters_of(l);
    }
    const Eigen::Index flat = Eigen::Index(cfg.height >> cfg.depth) *
                              (cfg.width >> cfg.depth) * in;
    enc.head.W.resize(cfg.channels, flat);
    detail::he_uniform<Scalar>(enc.head.W, flat, rng);
    enc.head.W *= Scalar(std::sqrt(0.5));
    enc.head.b = Types<Scalar>::Vector::Zero(cfg.channels);
    return enc;
  }

  void set_zero() {
    for (auto& l : convs) {
      l.W.setZero();
      l.b.setZero();
    }
    head.W.setZero();
    head.b.setZero();
  }

  template <typename F>
  void for_each(F&& f) {
    for (std::size_t i = 0; i < convs.size(); ++i) {
      f("conv" + std::to_string(i) + ".W", convs[i].W);
      f("conv" + std::to_string(i) + ".b", convs[i].b);
    }
    f("head.W", head.W);
    f("head.b", head.b);
  }
};

template <typename Scalar>
struct VisualTrace {
  Eigen::Index frames = 0;
  std::vector<typename Types<Scalar>::Matrix> unfolded;
  std::vector<typename Types<Scalar>::Matrix> pre;
  typename Types<Scalar>::Matrix flat;    // [T x flat]
  typename Types<Scalar>::Matrix output;  // [T x C]
};

/// `frames` is [T x (H*W)], each row a grey frame in row-major pixel order.
template <typename Scalar>
VisualTrace<Scalar> visual_forward(const VisualEncoder<Scalar>& enc,
                                   const typename Types<Scalar>::Matrix& frames) {
  using Matrix = typename Types<Scalar>::Matrix;
  const auto& cfg = enc.config;
  require(frames.rows() >= 1, "visual encoder needs T >= 1 frames");
  require(frames.cols() == Eigen::Index(cfg.height) * cfg.width,
          "visual frames have " + std::to_string(frames.cols()) +
              " pixels but the encoder expects " + std::to_string(cfg.height) +
              "x" + std::to_string(cfg.width));
  VisualTrace<Scalar> tr;
  const Eigen::Index T = frames.rows();
  tr.frames = T;
  // One row per (frame, y, x), one column per channel.
  Matrix x(T * cfg.height * cfg.width, 1);
  for (Eigen::Index t = 0; t < T; ++t)
    x.block(t * frames.cols(), 0, frames.cols(), 1) = frames.row(t).transpose();
  int h = cfg.height, w = cfg.width;
  for (std::size_t l = 0; l < enc.convs.size(); ++l) {
    tr.unfolded.push_back(detail::spatial_unfold<Scalar>(x, T, h, w));
    Matrix pre = tr.unfolded.back() * enc.convs[l].W.transpose();
    pre.rowwise() += enc.convs[l].b.transpose();
    tr.pre.push_back(pre);
    x = detail::avg_pool2<Scalar>(pre.cwiseMax(Scalar(0)), T, h, w);
    h /= 2;
    w /= 2;
  }
  const Eigen::Index per_frame = Eigen::Index(h) * w;
  const Eigen::Index c = x.cols();
  tr.flat.resize(T, per_frame * c);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index p = 0; p < per_frame; ++p)
      tr.flat.block(t, p * c, 1, c) = x.row(t * per_frame + p);
  tr.output = tr.flat * enc.head.W.transpose();
  tr.output.rowwise() += enc.head.b.transpose();
  return tr;
}

template <typename Scalar>
typename Types<Scalar>::Matrix encode_visual(
    const typename Types<Scalar>::Matrix& frames,
    const VisualEncoder<Scalar>& enc) {
  return visual_forward(enc, frames).output;
}

template <typename Scalar>
typename Types<Scalar>::Matrix visual_backward(
    const VisualEncoder<Scalar>& enc, const VisualTrace<Scalar>& tr,
    const typename Types<Scalar>::Matrix& grad_out,
    VisualEncoder<Scalar>& grad) {
  using Matrix = typename Types<Scalar>::Matrix;
  const auto& cfg = enc.config;
  const Eigen::Index T = tr.frames;
  grad.head.W += grad_out.transpose() * tr.flat;
  grad.head.b += grad_out.colwise().sum().transpose();
  const Matrix g_flat = grad_out * enc.head.W;

  int h = cfg.height >> cfg.depth, w = cfg.width >> cfg.depth;
  const Eigen::Index c = enc.convs.empty() ? 1 : enc.convs.back().W.rows();
  const Eigen::Index per_frame = Eigen::Index(h) * w;
  Matrix g(T * per_frame, c);
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index p = 0; p < per_frame; ++p)
      g.row(t * per_frame + p) = g_flat.block(t, p * c, 1, c);

  for (std::size_t li = enc.convs.size(); li-- > 0;) {
    h *= 2;
    w *= 2;
    g = detail::avg_pool2_backward<Scalar>(g, T, h, w);
    g.array() *= (tr.pre[li].array() > Scalar(0)).template cast<Scalar>();
    grad.convs[li].W += g.transpose() * tr.unfolded[li];
    grad.convs[li].b += g.colwise().sum().transpose();
    const Matrix g_cols = g * enc.convs[li].W;
    g = detail::spatial_fold<Scalar>(g_cols, T, h, w, g_cols.cols() / 9);
  }
  Matrix g_frames(T, Eigen::Index(cfg.height) * cfg.width);
  for (Eigen::Index t = 0; t < T; ++t)
    g_frames.row(t) = g.block(t * g_frames.cols(), 0, g_frames.cols(), 1)
                          .transpose();
  return g_frames;
}

}  // namespace avjp
