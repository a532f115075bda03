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

// On-disk formats for frame arrays and embeddings. Everything is
// little-endian regardless of host byte order.
//
// Array file:     "AVJP" | u32 version | u32 rank | u32 dims[rank] |
//                 f32 values (row-major)
// Embedding file: u32 count | u32 dim | count x (u32 id_len | id bytes |
//                 f32 values[dim])

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace avjp {

inline constexpr std::string_view kArrayMagic = "AVJP";
inline constexpr std::uint32_t kArrayVersion = 1;

struct FloatArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;  // row-major

  std::size_t numel() const;
};

std::string encode_array(const FloatArray& a);
FloatArray decode_array(std::string_view bytes);
void write_array(const std::filesystem::path& path, const FloatArray& a);
FloatArray read_array(const std::filesystem::path& path);

/// dims defaults to {rows, cols}; otherwise its product must equal the
/// matrix size and dims[0] must equal rows.
FloatArray array_from_matrix(const Eigen::MatrixXd& m,
                             std::vector<std::uint32_t> dims = {});
/// [dims[0] x product(dims[1:])]; a rank-1 array becomes a column.
Eigen::MatrixXd matrix_from_array(const FloatArray& a);

struct EmbeddingRecord {
  std::string utt_id;
  std::vector<float> values;
};

std::string encode_embeddings(const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> decode_embeddings(std::string_view bytes);
void write_embeddings(const std::filesystem::path& path,
                      const std::vector<EmbeddingRecord>& records);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);

namespace io {

void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);
void put_string(std::string& out, std::string_view s);  // u32 length + bytes

/// Bounds-checked little-endian reader; malformed input raises
/// ContractError naming `what`.
class Reader {
 public:
  Reader(std::string_view bytes, std::string what);

  std::uint32_t u32();
  std::uint64_t u64();
  float f32();
  double f64();
  std::string_view bytes(std::size_t n);
  std::string string();
  bool done() const { return pos_ == data_.size(); }
  void expect_done() const;

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace io

}  // namespace avjp
