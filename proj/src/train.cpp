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

#include "avjp/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace avjp {

namespace {

unsigned stage_groups(Stage s, bool freeze_backbones) {
  switch (s) {
    case Stage::unimodal_audio: return kAudioBackbone | kAudioPooling | kAudioHead;
    case Stage::unimodal_visual: return kVisualBackbone | kVisualPooling | kVisualHead;
    case Stage::joint:
      return freeze_backbones ? kAllGroups & ~(kAudioBackbone | kVisualBackbone) : kAllGroups;
    case Stage::two_stage: break;
  }
  return 0;
}

std::vector<Stage> expand(Stage s) {
  if (s == Stage::two_stage) return {Stage::unimodal_audio, Stage::unimodal_visual, Stage::joint};
  return {s};
}

LossParts mean_loss(const Model& m, const RunConfig& cfg, Stage stage, const TrainingSet& data) {
  LossParts sum;
  for (std::size_t i = 0; i < data.utterances.size(); ++i)
    sum += utterance_loss(m, cfg, stage, data.utterances[i], data.labels[i]);
  return sum.scaled(1.0 / double(data.utterances.size()));
}

// Joint-stage parameters that arrive trained or data-initialized.
constexpr unsigned kFinetuneGroups = kAllGroups & ~kCrossModal;

class Sgd {
 public:
  /// Parameters in `slow` groups step at lr * slow_scale.
  Sgd(Model& model, Model& grad, unsigned groups, unsigned slow, double slow_scale,
      const RunConfig& cfg)
      : params_(model.params(groups)), grads_(grad.params(groups)), cfg_(cfg) {
    for (const auto& p : params_) velocity_.emplace_back(std::size_t(p.size()), 0.0);
    model.for_each([&](unsigned group, const std::string&, auto&) {
      if (group & groups) scale_.push_back((group & slow) ? slow_scale : 1.0);
    });
  }

  void step(double lr) {
    double scale = 1.0;
    if (cfg_.grad_clip > 0) {
      double sq = 0;
      for (const auto& g : grads_)
        for (Eigen::Index i = 0; i < g.size(); ++i) sq += g.data[i] * g.data[i];
      const double norm = std::sqrt(sq);
      if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
      double* p = params_[k].data;
      const double* g = grads_[k].data;
      auto& v = velocity_[k];
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = scale * g[i] + cfg_.weight_decay * p[i];
        v[i] = cfg_.momentum * v[i] + d;
        p[i] -= lr * scale_[k] * v[i];
      }
    }
  }

 private:
  std::vector<ParamRef<double>> params_;
  std::vector<ParamRef<double>> grads_;
  std::vector<std::vector<double>> velocity_;
  std::vector<double> scale_;
  const RunConfig& cfg_;
};

/// Rescales the branch projections so each branch's training embeddings
/// enter the fused space centered and with unit RMS norm, then sets each
/// fused-head row to its class's mean unit fused embedding.
void calibrate_fusion(Model& m, const TrainingSet& data) {
  const auto n = Eigen::Index(data.utterances.size());
  Eigen::MatrixXd ea, ev;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto e = embed(m, data.utterances[std::size_t(i)]);
    if (i == 0) {
      ea.resize(n, e.audio.size());
      ev.resize(n, e.visual.size());
    }
    ea.row(i) = e.audio.transpose();
    ev.row(i) = e.visual.transpose();
  }
  const auto fit = [n](Affine<double>& proj, const Eigen::MatrixXd& x) {
    const Eigen::VectorXd mean = x.colwise().mean().transpose();
    const double rms = std::sqrt((x.rowwise() - mean.transpose()).squaredNorm() / double(n));
    const double s = rms > 1e-12 ? 1.0 / rms : 1.0;
    proj.W *= s;
    proj.b = -proj.W * mean;
  };
  fit(m.fusion.proj_a, ea);
  fit(m.fusion.proj_v, ev);

  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(m.head_f.weights.rows(), m.head_f.weights.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = fuse_trace(ea.row(i).transpose(), ev.row(i).transpose(), m.fusion).fused;
    const double norm = f.norm();
    if (norm > 0) rows.row(data.labels[std::size_t(i)]) += f.transpose() / norm;
  }
  for (Eigen::Index y = 0; y < rows.rows(); ++y)
    if (rows.row(y).norm() > 0) m.head_f.weights.row(y) = rows.row(y).normalized();
}

bool has_joint_history(const Checkpoint& ckpt) {
  return std::any_of(ckpt.history.begin(), ckpt.history.end(),
                     [](const LossRecord& r) { return r.stage == to_string(Stage::joint); });
}

}  // namespace

TrainingSet make_training_set(std::vector<Utterance> utterances) {
  require(!utterances.empty(), "training set is empty");
  TrainingSet set;
  std::map<std::string, Eigen::Index> index;
  for (const auto& u : utterances) index.emplace(u.identity_id, 0);
  Eigen::Index next = 0;
  for (auto& [id, label] : index) {
    label = next++;
    set.identities.push_back(id);
  }
  for (const auto& u : utterances) set.labels.push_back(index.at(u.identity_id));
  set.utterances = std::move(utterances);
  return set;
}

double learning_rate(const RunConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, double((epoch - 1) / cfg.lr_decay_every));
}

void attach_cohort(Checkpoint& ckpt, const Model& m, const TrainingSet& data) {
  const auto n = Eigen::Index(data.identities.size());
  Eigen::MatrixXd ca, cv, cf;
  Eigen::VectorXd count = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < data.utterances.size(); ++i) {
    const auto e = embed(m, data.utterances[i]);
    if (ca.size() == 0) {
      ca = Eigen::MatrixXd::Zero(n, e.audio.size());
      cv = Eigen::MatrixXd::Zero(n, e.visual.size());
      cf = Eigen::MatrixXd::Zero(n, e.fused.size());
    }
    const auto y = data.labels[i];
    ca.row(y) += e.audio.normalized().transpose();
    cv.row(y) += e.visual.normalized().transpose();
    cf.row(y) += e.fused.normalized().transpose();
    count(y) += 1;
  }
  for (Eigen::Index y = 0; y < n; ++y) {
    ca.row(y) /= count(y);
    cv.row(y) /= count(y);
    cf.row(y) /= count(y);
  }
  std::erase_if(ckpt.arrays, [](const NamedArray& a) { return a.name.starts_with("cohort."); });
  ckpt.arrays.push_back({"cohort.audio", ca});
  ckpt.arrays.push_back({"cohort.visual", cv});
  ckpt.arrays.push_back({"cohort.fused", cf});
}

Checkpoint run_train(const RunConfig& cfg, const TrainingSet& data, const EpochCallback& on_epoch) {
  cfg.validate();
  const auto num_classes = Eigen::Index(data.identities.size());
  std::mt19937_64 rng(cfg.seed);

  Checkpoint ckpt;
  Model model;
  if (!cfg.init_ckpt.empty()) {
    const Checkpoint init = load_checkpoint(cfg.init_ckpt);
    require(Eigen::Index(init.num_classes) == num_classes,
            "init_ckpt has " + std::to_string(init.num_classes) + " classes but the manifest has " +
                std::to_string(num_classes) + " identities");
    Checkpoint reshaped = init;
    reshaped.config = cfg;
    model = restore_model(reshaped);
    ckpt.history = init.history;
    ckpt.epochs_completed = init.epochs_completed;
  } else {
    model = init_model(cfg, num_classes, rng);
  }
  ckpt.config = cfg;
  ckpt.num_classes = std::uint32_t(num_classes);

  const std::size_t n = data.utterances.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (Stage stage : expand(cfg.stage_kind())) {
    if (cfg.epochs == 0) break;
    const auto name = std::string(to_string(stage));
    const bool joint = stage == Stage::joint;
    const bool skip_backbones = joint && cfg.freeze_backbones;
    if (joint && !has_joint_history(ckpt)) calibrate_fusion(model, data);
    Model grad = zero_model(cfg, num_classes);
    Sgd opt(model, grad, stage_groups(stage, cfg.freeze_backbones), joint ? kFinetuneGroups : 0u,
            cfg.finetune_lr_scale, cfg);

    LossRecord before{name, 0, mean_loss(model, cfg, stage, data)};
    ckpt.history.push_back(before);
    if (on_epoch) on_epoch(before);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      const double lr = learning_rate(cfg, epoch);
      std::shuffle(order.begin(), order.end(), rng);
      LossParts sum;
      for (std::size_t start = 0; start < n; start += std::size_t(cfg.batch_size)) {
        const std::size_t stop = std::min(n, start + std::size_t(cfg.batch_size));
        const double w = 1.0 / double(stop - start);
        grad.set_zero();
        for (std::size_t k = start; k < stop; ++k) {
          const auto i = order[k];
          sum += utterance_loss(model, cfg, stage, data.utterances[i], data.labels[i], &grad, w,
                                skip_backbones);
        }
        opt.step(lr);
      }
      LossRecord rec{name, std::uint32_t(epoch), sum.scaled(1.0 / double(n))};
      ckpt.history.push_back(rec);
      ckpt.epochs_completed += 1;
      if (on_epoch) on_epoch(rec);
    }
  }
  ckpt.arrays = model_arrays(model);
  attach_cohort(ckpt, model, data);
  return ckpt;
}

Checkpoint run_train(const RunConfig& cfg, const EpochCallback& on_epoch) {
  require(!cfg.manifest.empty(), "config key 'manifest' is required for training");
  return run_train(cfg, make_training_set(load_corpus(read_manifest(cfg.manifest))), on_epoch);
}

}  // namespace avjp
