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

#include "avjp/checkpoint.hpp"

#include "avjp/archive.hpp"

namespace avjp {

const NamedArray* Checkpoint::find(std::string_view name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kCheckpointMagic);
  io::put_u32(out, kCheckpointVersion);
  io::put_string(out, to_text(ckpt.config));
  io::put_u32(out, ckpt.num_classes);
  io::put_u32(out, ckpt.epochs_completed);
  io::put_u32(out, static_cast<std::uint32_t>(ckpt.history.size()));
  for (const auto& h : ckpt.history) {
    io::put_string(out, h.stage);
    io::put_u32(out, h.epoch);
    for (double v : {h.loss.total, h.loss.aam, h.loss.adversarial, h.loss.cycle, h.loss.ortho})
      io::put_f64(out, v);
  }
  io::put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    io::put_string(out, a.name);
    io::put_u32(out, static_cast<std::uint32_t>(a.values.rows()));
    io::put_u32(out, static_cast<std::uint32_t>(a.values.cols()));
    for (Eigen::Index i = 0; i < a.values.size(); ++i) io::put_f64(out, a.values.data()[i]);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  io::Reader r(bytes, "checkpoint");
  require(r.bytes(4) == kCheckpointMagic, "checkpoint: bad magic (not an avjp checkpoint)");
  const auto version = r.u32();
  require(version == kCheckpointVersion,
          "checkpoint: unsupported version " + std::to_string(version));
  Checkpoint c;
  c.config = parse_config(r.string());
  c.num_classes = r.u32();
  c.epochs_completed = r.u32();
  c.history.resize(r.u32());
  for (auto& h : c.history) {
    h.stage = r.string();
    h.epoch = r.u32();
    h.loss.total = r.f64();
    h.loss.aam = r.f64();
    h.loss.adversarial = r.f64();
    h.loss.cycle = r.f64();
    h.loss.ortho = r.f64();
  }
  c.arrays.resize(r.u32());
  for (auto& a : c.arrays) {
    a.name = r.string();
    const auto rows = r.u32();
    const auto cols = r.u32();
    require(std::uint64_t(rows) * cols * 8 <= bytes.size(),
            "checkpoint: array '" + a.name + "' larger than the file");
    a.values.resize(rows, cols);
    for (Eigen::Index i = 0; i < a.values.size(); ++i) a.values.data()[i] = r.f64();
  }
  r.expect_done();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

std::vector<NamedArray> model_arrays(Model& m) {
  std::vector<NamedArray> out;
  m.for_each([&](unsigned, const std::string& name, auto& v) {
    out.push_back({name, Eigen::MatrixXd(v)});
  });
  return out;
}

Model restore_model(const Checkpoint& ckpt) {
  Model m = zero_model(ckpt.config, ckpt.num_classes);
  m.for_each([&](unsigned, const std::string& name, auto& v) {
    const auto* a = ckpt.find(name);
    require(a != nullptr, "checkpoint is missing parameter '" + name + "'");
    require(a->values.rows() == v.rows() && a->values.cols() == v.cols(),
            "checkpoint parameter '" + name + "' has shape " + std::to_string(a->values.rows()) +
                "x" + std::to_string(a->values.cols()) + ", config expects " +
                std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
    v = a->values;
  });
  return m;
}

}  // namespace avjp
