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

#include "avjp/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "avjp/archive.hpp"
#include "avjp/types.hpp"

namespace avjp {

namespace fs = std::filesystem;

namespace {

/// Calls v(key, field) for every configurable field, in canonical order.
template <typename Cfg, typename Visitor>
void visit_fields(Cfg& c, Visitor&& v) {
  v("manifest", c.manifest);
  v("init_ckpt", c.init_ckpt);
  v("audio_in_dim", c.audio_in_dim);
  v("audio_context", c.audio_context);
  v("audio_depth", c.audio_depth);
  v("audio_padding", c.audio_padding);
  v("visual_height", c.visual_height);
  v("visual_width", c.visual_width);
  v("visual_depth", c.visual_depth);
  v("visual_filters", c.visual_filters);
  v("channels", c.channels);
  v("embed_dim", c.embed_dim);
  v("bottleneck", c.bottleneck);
  v("len_a", c.len_a);
  v("len_v", c.len_v);
  v("margin", c.margin);
  v("scale", c.scale);
  v("beta", c.beta);
  v("gamma", c.gamma);
  v("ortho_weight", c.ortho_weight);
  v("stage", c.stage);
  v("epochs", c.epochs);
  v("batch_size", c.batch_size);
  v("lr", c.lr);
  v("lr_decay", c.lr_decay);
  v("lr_decay_every", c.lr_decay_every);
  v("weight_decay", c.weight_decay);
  v("momentum", c.momentum);
  v("grad_clip", c.grad_clip);
  v("freeze_backbones", c.freeze_backbones);
  v("finetune_lr_scale", c.finetune_lr_scale);
  v("seed", c.seed);
  v("snorm_top_k", c.snorm_top_k);
  v("synth_identities", c.synth.num_identities);
  v("synth_utterances", c.synth.utts_per_identity);
  v("synth_train_identities", c.synth.train_identities);
  v("synth_frames_a", c.synth.frames_a);
  v("synth_frames_v", c.synth.frames_v);
  v("synth_visual_grid", c.synth.visual_grid);
  v("synth_spread", c.synth.spread);
  v("synth_shared", c.synth.shared);
  v("synth_margin", c.synth.margin);
  v("synth_noise", c.synth.noise_sigma);
  v("synth_session_noise", c.synth.session_sigma);
  v("synth_distractor", c.synth.distractor_sigma);
  v("synth_overlap", c.synth.overlap);
  v("synth_targets", c.synth.n_target);
  v("synth_nontargets", c.synth.n_nontarget);
  v("synth_seed", c.synth.seed);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ContractError("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value, const char* expected) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, value, expected);
  return out;
}

void assign(const std::string& key, const std::string& value, int& field) {
  field = parse_number<int>(key, value, "an integer");
}
void assign(const std::string& key, const std::string& value, std::uint64_t& field) {
  field = parse_number<std::uint64_t>(key, value, "an unsigned integer");
}
void assign(const std::string& key, const std::string& value, double& field) {
  field = parse_number<double>(key, value, "a real number");
}
void assign(const std::string& key, const std::string& value, bool& field) {
  if (value == "true" || value == "1") {
    field = true;
  } else if (value == "false" || value == "0") {
    field = false;
  } else {
    bad_value(key, value, "a boolean (true/false)");
  }
}
void assign(const std::string&, const std::string& value, std::string& field) { field = value; }
void assign(const std::string& key, const std::string& value, std::vector<int>& field) {
  field.clear();
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) field.push_back(parse_number<int>(key, trim(item), "a comma-separated integer list"));
  if (field.empty()) bad_value(key, value, "a comma-separated integer list");
}

std::string format(int v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }
std::string format(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}
std::string format(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::unimodal_audio: return "unimodal_audio";
    case Stage::unimodal_visual: return "unimodal_visual";
    case Stage::joint: return "joint";
    case Stage::two_stage: return "two_stage";
  }
  return "unknown";
}

Stage parse_stage(std::string_view s) {
  if (s == "unimodal_audio") return Stage::unimodal_audio;
  if (s == "unimodal_visual") return Stage::unimodal_visual;
  if (s == "joint") return Stage::joint;
  if (s == "two_stage") return Stage::two_stage;
  throw ContractError("config key 'stage': unknown stage '" + std::string(s) +
                      "' (unimodal_audio, unimodal_visual, joint, two_stage)");
}

AudioEncoderConfig RunConfig::audio_encoder() const {
  AudioEncoderConfig a;
  a.in_dim = audio_in_dim;
  a.channels = channels;
  a.context_widths = audio_context;
  a.depth = audio_depth;
  if (audio_padding == "zero") {
    a.padding = Padding::zero;
  } else if (audio_padding == "replicate") {
    a.padding = Padding::replicate;
  } else if (audio_padding == "circular") {
    a.padding = Padding::circular;
  } else {
    throw ContractError("config key 'audio_padding': expected zero, replicate or circular, got '" +
                        audio_padding + "'");
  }
  return a;
}

VisualEncoderConfig RunConfig::visual_encoder() const {
  VisualEncoderConfig v;
  v.height = visual_height;
  v.width = visual_width;
  v.channels = channels;
  v.depth = visual_depth;
  v.base_filters = visual_filters;
  return v;
}

BankDims RunConfig::bank_dims() const {
  BankDims d;
  d.audio_dim = audio_in_dim;
  d.height = visual_height;
  d.width = visual_width;
  d.grid = synth.visual_grid;
  d.spread = synth.spread;
  d.shared = synth.shared;
  d.margin = synth.margin;
  return d;
}

void RunConfig::validate() const {
  const auto positive = [](int v, const char* key) {
    require(v >= 1, std::string("config key '") + key + "' must be >= 1");
  };
  audio_encoder().validate();
  visual_encoder().validate();
  positive(channels, "channels");
  positive(embed_dim, "embed_dim");
  positive(bottleneck, "bottleneck");
  positive(len_a, "len_a");
  positive(len_v, "len_v");
  positive(batch_size, "batch_size");
  positive(lr_decay_every, "lr_decay_every");
  positive(snorm_top_k, "snorm_top_k");
  require(epochs >= 0, "config key 'epochs' must be >= 0");
  require(margin >= 0 && margin < 1.5707963267948966, "config key 'margin' must lie in [0, pi/2)");
  require(scale > 0, "config key 'scale' must be positive");
  require(lr > 0, "config key 'lr' must be positive");
  require(lr_decay > 0 && lr_decay <= 1, "config key 'lr_decay' must lie in (0, 1]");
  require(weight_decay >= 0, "config key 'weight_decay' must be >= 0");
  require(momentum >= 0 && momentum < 1, "config key 'momentum' must lie in [0, 1)");
  require(grad_clip >= 0, "config key 'grad_clip' must be >= 0 (0 disables clipping)");
  require(finetune_lr_scale >= 0 && finetune_lr_scale <= 1,
          "config key 'finetune_lr_scale' must lie in [0, 1]");
  require(beta >= 0 && gamma >= 0 && ortho_weight >= 0, "loss weights must be >= 0");
  (void)parse_stage(stage);
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    require(seen.insert(key).second, "config key '" + key + "' given twice");
    bool found = false;
    visit_fields(cfg, [&](const char* name, auto& field) {
      if (key != name) return;
      found = true;
      assign(key, value, field);
    });
    require(found, "unknown config key '" + key + "'");
  }
  for (std::string* p : {&cfg.manifest, &cfg.init_ckpt}) {
    if (!p->empty() && fs::path(*p).is_relative() && !base_dir.empty())
      *p = (base_dir / *p).lexically_normal().string();
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  return parse_config(io::read_file(path), fs::absolute(path).parent_path());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  visit_fields(cfg, [&](const char* name, const auto& field) {
    out += std::string(name) + " = " + format(field) + '\n';
  });
  return out;
}

}  // namespace avjp
