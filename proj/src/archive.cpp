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

#include "avjp/archive.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>

#include "avjp/types.hpp"

namespace avjp {

namespace io {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_string(std::string& out, std::string_view s) {
  require(s.size() <= std::numeric_limits<std::uint32_t>::max(), "string too long to serialize");
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

Reader::Reader(std::string_view bytes, std::string what)
    : data_(bytes), what_(std::move(what)) {}

void Reader::need(std::size_t n) const {
  require(data_.size() - pos_ >= n, what_ + ": truncated at byte " + std::to_string(pos_));
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + std::size_t(i)])) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + std::size_t(i)])) << (8 * i);
  pos_ += 8;
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() { return std::bit_cast<double>(u64()); }

std::string_view Reader::bytes(std::size_t n) {
  need(n);
  auto s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::string Reader::string() {
  const auto n = u32();
  return std::string(bytes(n));
}

void Reader::expect_done() const {
  require(done(), what_ + ": " + std::to_string(data_.size() - pos_) + " trailing bytes");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(bool(out), "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(bool(out), "write failed for " + path.string());
}

}  // namespace io

std::size_t FloatArray::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string encode_array(const FloatArray& a) {
  require(a.numel() == a.values.size(),
          "array dims hold " + std::to_string(a.numel()) + " values but " +
              std::to_string(a.values.size()) + " were given");
  std::string out(kArrayMagic);
  io::put_u32(out, kArrayVersion);
  io::put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
  for (auto d : a.dims) io::put_u32(out, d);
  for (float v : a.values) io::put_f32(out, v);
  return out;
}

FloatArray decode_array(std::string_view bytes) {
  io::Reader r(bytes, "array archive");
  require(r.bytes(4) == kArrayMagic, "array archive: bad magic");
  const auto version = r.u32();
  require(version == kArrayVersion,
          "array archive: unsupported version " + std::to_string(version));
  FloatArray a;
  a.dims.resize(r.u32());
  for (auto& d : a.dims) d = r.u32();
  const std::size_t n = a.numel();
  require(n <= (bytes.size() / 4), "array archive: dims exceed file size");
  a.values.resize(n);
  for (auto& v : a.values) v = r.f32();
  r.expect_done();
  return a;
}

void write_array(const std::filesystem::path& path, const FloatArray& a) {
  io::write_file(path, encode_array(a));
}

FloatArray read_array(const std::filesystem::path& path) {
  return decode_array(io::read_file(path));
}

FloatArray array_from_matrix(const Eigen::MatrixXd& m, std::vector<std::uint32_t> dims) {
  if (dims.empty()) dims = {std::uint32_t(m.rows()), std::uint32_t(m.cols())};
  FloatArray a;
  a.dims = std::move(dims);
  require(!a.dims.empty() && a.dims[0] == std::uint32_t(m.rows()) &&
              a.numel() == std::size_t(m.size()),
          "array dims do not match the matrix shape");
  a.values.reserve(std::size_t(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.values.push_back(static_cast<float>(m(i, j)));
  return a;
}

Eigen::MatrixXd matrix_from_array(const FloatArray& a) {
  require(!a.dims.empty(), "cannot view a rank-0 array as a matrix");
  const Eigen::Index rows = a.dims[0];
  const Eigen::Index cols = rows == 0 ? 0 : Eigen::Index(a.numel()) / rows;
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a.values[k++];
  return m;
}

std::string encode_embeddings(const std::vector<EmbeddingRecord>& records) {
  const std::size_t dim = records.empty() ? 0 : records.front().values.size();
  std::string out;
  io::put_u32(out, static_cast<std::uint32_t>(records.size()));
  io::put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& rec : records) {
    require(rec.values.size() == dim,
            "embedding " + rec.utt_id + " has dim " + std::to_string(rec.values.size()) +
                ", expected " + std::to_string(dim));
    io::put_string(out, rec.utt_id);
    for (float v : rec.values) io::put_f32(out, v);
  }
  return out;
}

std::vector<EmbeddingRecord> decode_embeddings(std::string_view bytes) {
  io::Reader r(bytes, "embedding archive");
  const auto count = r.u32();
  const auto dim = r.u32();
  require(count <= bytes.size(), "embedding archive: implausible record count");
  std::vector<EmbeddingRecord> out(count);
  for (auto& rec : out) {
    rec.utt_id = r.string();
    rec.values.resize(dim);
    for (auto& v : rec.values) v = r.f32();
  }
  r.expect_done();
  return out;
}

void write_embeddings(const std::filesystem::path& path,
                      const std::vector<EmbeddingRecord>& records) {
  io::write_file(path, encode_embeddings(records));
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(io::read_file(path));
}

}  // namespace avjp
