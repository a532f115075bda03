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

// Text formats around the corpus.
//
//   manifest: utt_id identity_id path_a path_v   (paths relative to the file)
//   trials:   label enroll_id test_id            (label 1 = target, 0 = not)
//   scores:   enroll_id test_id score            (score with 6 decimals)

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avjp/scoring.hpp"

namespace avjp {

struct ManifestEntry {
  std::string utt_id;
  std::string identity_id;
  std::filesystem::path audio_path;   // absolute once read
  std::filesystem::path visual_path;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

TrialList read_trials(const std::filesystem::path& path);
std::string format_trials(const TrialList& trials);
void write_trials(const std::filesystem::path& path, const TrialList& trials);

struct ScoreLine {
  std::string enroll_id;
  std::string test_id;
  double score = 0;
};

std::string format_scores(const std::vector<ScoreLine>& lines);
std::vector<ScoreLine> parse_scores(const std::string& text);
void write_scores(const std::filesystem::path& path, const std::vector<ScoreLine>& lines);
std::vector<ScoreLine> read_scores(const std::filesystem::path& path);

struct Utterance {
  std::string utt_id;
  std::string identity_id;
  Eigen::MatrixXd audio;   // [T_a x in_dim]
  Eigen::MatrixXd visual;  // [T_v x H*W]
};

Utterance load_utterance(const ManifestEntry& entry);
std::vector<Utterance> load_corpus(const std::vector<ManifestEntry>& entries);

}  // namespace avjp
