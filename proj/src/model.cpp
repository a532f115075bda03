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

#include "avjp/model.hpp"

namespace avjp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

AttentionParams<double> init_attention(Eigen::Index channels, Eigen::Index bottleneck,
                                       std::mt19937_64& rng) {
  // V = 0 starts every channel at uniform attention; k = 1 keeps the
  // temporal sums well away from zero.
  AttentionParams<double> p;
  p.W = Affine<double>::xavier(channels, bottleneck, rng).W;
  p.b = VectorXd::Zero(bottleneck);
  p.V = MatrixXd::Zero(channels, bottleneck);
  p.k = VectorXd::Constant(channels, 1.0);
  return p;
}

void add_scaled(AttentionParams<double>& into, const AttentionParams<double>& g, double w) {
  into.W += w * g.W;
  into.b += w * g.b;
  into.V += w * g.V;
  into.k += w * g.k;
}

void add_scaled(Affine<double>& into, const Affine<double>& g, double w) {
  into.W += w * g.W;
  into.b += w * g.b;
}

void add_scaled(FusionParams<double>& into, const FusionParams<double>& g, double w) {
  add_scaled(into.proj_a, g.proj_a, w);
  add_scaled(into.proj_v, g.proj_v, w);
  add_scaled(into.gate, g.gate, w);
  add_scaled(into.out, g.out, w);
}

struct Branch {
  MatrixXd features;
  PoolingResult<double> pool;
  MatrixXd resample;  // [L x T]
  VectorXd track;
};

}  // namespace

std::vector<ParamRef<double>> Model::params(unsigned groups) {
  std::vector<ParamRef<double>> out;
  for_each([&](unsigned group, const std::string& name, auto& m) {
    if (group & groups) out.push_back(param_ref<double>(name, m));
  });
  return out;
}

void Model::set_zero() {
  for_each([](unsigned, const std::string&, auto& m) { m.setZero(); });
}

Model init_model(const RunConfig& cfg, Eigen::Index num_classes, std::mt19937_64& rng) {
  cfg.validate();
  require(num_classes >= 2, "training needs at least two identities");
  const Eigen::Index c = cfg.channels;
  Model m;
  m.audio = AudioEncoder<double>::random(cfg.audio_encoder(), rng);
  m.visual = VisualEncoder<double>::random(cfg.visual_encoder(), rng);
  m.att_a = init_attention(c, cfg.bottleneck, rng);
  m.att_v = init_attention(c, cfg.bottleneck, rng);
  m.head_a = ClassifierHead<double>::random(num_classes, 2 * c, rng, cfg.margin, cfg.scale);
  m.head_v = ClassifierHead<double>::random(num_classes, 2 * c, rng, cfg.margin, cfg.scale);
  m.head_f = ClassifierHead<double>::random(num_classes, cfg.embed_dim, rng, cfg.margin, cfg.scale);
  m.fusion = FusionParams<double>::split(2 * c, 2 * c, cfg.embed_dim, rng);
  m.f = make_weight_encoder<double>(EncoderDirection::audio_to_visual, cfg.len_a, cfg.len_v, rng);
  m.g = make_weight_encoder<double>(EncoderDirection::visual_to_audio, cfg.len_v, cfg.len_a, rng);
  return m;
}

Model zero_model(const RunConfig& cfg, Eigen::Index num_classes) {
  std::mt19937_64 rng(0);
  Model m = init_model(cfg, num_classes, rng);
  m.set_zero();
  return m;
}

LossParts& LossParts::operator+=(const LossParts& o) {
  total += o.total;
  aam += o.aam;
  adversarial += o.adversarial;
  cycle += o.cycle;
  ortho += o.ortho;
  return *this;
}

LossParts LossParts::scaled(double s) const {
  return {total * s, aam * s, adversarial * s, cycle * s, ortho * s};
}

Embeddings embed(const Model& m, const Utterance& u) {
  Embeddings e;
  e.audio = attentive_pool(encode_audio<double>(u.audio, m.audio), m.att_a).stats.embedding;
  e.visual = attentive_pool(encode_visual<double>(u.visual, m.visual), m.att_v).stats.embedding;
  e.fused = fuse_trace(e.audio, e.visual, m.fusion).fused;
  return e;
}

AttentionView attend(const Model& m, const RunConfig& cfg, const Utterance& u) {
  AttentionView v;
  v.audio = attentive_pool(encode_audio<double>(u.audio, m.audio), m.att_a);
  v.visual = attentive_pool(encode_visual<double>(u.visual, m.visual), m.att_v);
  v.track_a = resample_linear(v.audio.state.temporal_tanh, cfg.len_a);
  v.track_v = resample_linear(v.visual.state.temporal_tanh, cfg.len_v);
  return v;
}

LossParts utterance_loss(const Model& m, const RunConfig& cfg, Stage stage, const Utterance& u,
                         Eigen::Index label, Model* grad, double weight, bool skip_backbones) {
  require(stage != Stage::two_stage, "utterance_loss needs a single stage");
  const bool use_a = stage != Stage::unimodal_visual;
  const bool use_v = stage != Stage::unimodal_audio;
  const bool joint = stage == Stage::joint;
  const Eigen::Index c = cfg.channels;

  AudioTrace<double> audio_tr;
  VisualTrace<double> visual_tr;
  Branch a, v;
  if (use_a) {
    audio_tr = audio_forward(m.audio, u.audio);
    a.pool = attentive_pool(audio_tr.output, m.att_a);
  }
  if (use_v) {
    visual_tr = visual_forward(m.visual, u.visual);
    v.pool = attentive_pool(visual_tr.output, m.att_v);
  }

  LossParts loss;
  VectorXd d_emb_a, d_emb_v, d_track_a, d_track_v;
  if (use_a) {
    const auto r = aam_softmax<double>(a.pool.stats.embedding, label, m.head_a);
    loss.aam += r.loss;
    if (grad) {
      grad->head_a.weights += weight * r.d_weights;
      d_emb_a = r.d_embedding;
    }
  }
  if (use_v) {
    const auto r = aam_softmax<double>(v.pool.stats.embedding, label, m.head_v);
    loss.aam += r.loss;
    if (grad) {
      grad->head_v.weights += weight * r.d_weights;
      d_emb_v = r.d_embedding;
    }
  }
  if (joint) {
    const auto& ea = a.pool.stats.embedding;
    const auto& ev = v.pool.stats.embedding;
    const auto ft = fuse_trace(ea, ev, m.fusion);
    const auto rf = aam_softmax<double>(ft.fused, label, m.head_f);
    loss.aam += rf.loss;
    const auto sq = squared_cosine_with_grad<double>(ft.branch_a, ft.branch_v);
    loss.ortho = sq.value;

    a.resample = interpolation_matrix<double>(a.pool.state.temporal_tanh.size(), cfg.len_a);
    v.resample = interpolation_matrix<double>(v.pool.state.temporal_tanh.size(), cfg.len_v);
    const TemporalAttention<double> ta{a.resample * a.pool.state.temporal_tanh, Modality::audio};
    const TemporalAttention<double> tv{v.resample * v.pool.state.temporal_tanh, Modality::visual};
    const auto cm = cross_modal_objective(ta, tv, m.f, m.g, cfg.beta, cfg.gamma);
    loss.adversarial = cm.adversarial;
    loss.cycle = cm.cycle;

    if (grad) {
      grad->head_f.weights += weight * rf.d_weights;
      const auto fb = fuse_backward<double>(m.fusion, ft, rf.d_embedding,
                                            cfg.ortho_weight * sq.d_x,
                                            cfg.ortho_weight * sq.d_y);
      add_scaled(grad->fusion, fb.params, weight);
      d_emb_a += fb.input_a;
      d_emb_v += fb.input_v;
      accumulate(grad->f, cm.d_f, weight);
      accumulate(grad->g, cm.d_g, weight);
      d_track_a = a.resample.transpose() * cm.d_audio;
      d_track_v = v.resample.transpose() * cm.d_visual;
    }
  }
  loss.total = loss.aam + cfg.beta * loss.adversarial + cfg.gamma * loss.cycle +
               cfg.ortho_weight * loss.ortho;
  if (!grad) return loss;

  if (use_a) {
    const auto gp = attentive_pool_backward<double>(audio_tr.output, m.att_a, a.pool,
                                                    d_emb_a.head(c), d_emb_a.tail(c), d_track_a);
    add_scaled(grad->att_a, gp.params, weight);
    if (!skip_backbones) audio_backward(m.audio, audio_tr, MatrixXd(weight * gp.frames), grad->audio);
  }
  if (use_v) {
    const auto gp = attentive_pool_backward<double>(visual_tr.output, m.att_v, v.pool,
                                                    d_emb_v.head(c), d_emb_v.tail(c), d_track_v);
    add_scaled(grad->att_v, gp.params, weight);
    if (!skip_backbones)
      visual_backward(m.visual, visual_tr, MatrixXd(weight * gp.frames), grad->visual);
  }
  return loss;
}

}  // namespace avjp
