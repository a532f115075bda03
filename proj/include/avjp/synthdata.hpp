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

// Synthetic paired audio-visual corpus.
//
// Each identity owns an audio prototype (a feature vector) and a visual
// prototype (a block-constant grey image). An utterance splits its time axis
// into segments; a segment is a keyframe for audio, for visual, or for both
// (fraction `overlap`). Keyframes carry prototype + session offset + noise;
// other segments carry noise plus a random identity-like distractor.
// Prototypes share a common component, so a keyframe is recognisable as such
// without revealing the identity.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avjp/scoring.hpp"

namespace avjp {

struct SynthConfig {
  int num_identities = 64;
  int utts_per_identity = 20;
  int train_identities = 48;  // the rest are held out for trials
  int frames_a = 40;
  int frames_v = 10;
  int visual_grid = 8;  // visual prototypes are grid x grid blocks
  double spread = 1.0;  // scale of the per-identity prototype part
  double shared = 1.0;  // scale of the part common to all identities
  double margin = 0.5;  // minimum RMS distance between prototypes
  double noise_sigma = 0.8;
  double session_sigma = 0.4;
  double distractor_sigma = 1.0;
  double overlap = 0.0;
  int n_target = 2000;
  int n_nontarget = 2000;
  std::uint64_t seed = 7;
};

struct BankDims {
  int audio_dim = 40;
  int height = 16;
  int width = 16;
  int grid = 8;
  double spread = 1.0;
  double shared = 1.0;
  double margin = 0.5;
};

struct IdentityBank {
  int num_identities = 0;
  BankDims dims;
  Eigen::MatrixXd audio_prototypes;   // [N x audio_dim]
  Eigen::MatrixXd visual_prototypes;  // [N x H*W]
  std::uint64_t seed = 0;
};

/// Raises ContractError when the margin cannot be met after repeated
/// draws.
IdentityBank generate_identity_bank(int n, std::uint64_t seed, const BankDims& dims);

/// Smallest RMS distance between two prototypes of the same modality.
double min_prototype_distance(const Eigen::MatrixXd& prototypes);

struct UtterancePair {
  Eigen::MatrixXd audio;   // [T_a x audio_dim]
  Eigen::MatrixXd visual;  // [T_v x H*W]
  int identity = 0;
  std::vector<std::uint8_t> keyframe_mask_a;  // [T_a]
  std::vector<std::uint8_t> keyframe_mask_v;  // [T_v]
};

struct SampleOptions {
  double session_sigma = 0.0;
  // Non-keyframe segments carry a random identity-like vector of this scale.
  double distractor_sigma = 0.0;
  // Explicit per-segment keyframe flags; both empty means draw them.
  std::vector<std::uint8_t> segments_a;
  std::vector<std::uint8_t> segments_v;
};

/// Number of keyframe segments an utterance is divided into.
int segment_count(int frames_a, int frames_v);

/// Frame t of a length-`frames` track lies in segment floor(t * S / frames).
int segment_of(int t, int frames, int segments);

UtterancePair sample_paired_sequences(const IdentityBank& bank, int identity, int frames_a,
                                      int frames_v, double noise_sigma, double overlap,
                                      std::uint64_t seed, const SampleOptions& options = {});

struct LabeledUtterance {
  std::string utt_id;
  std::string identity_id;
};

TrialList make_trials(const std::vector<LabeledUtterance>& utterances, int n_target,
                      int n_nontarget, std::uint64_t seed);

/// Deterministic child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

std::string synthetic_utt_id(int identity, int index);
std::string synthetic_identity_id(int identity);

struct KeyframeInfo {
  std::vector<std::uint8_t> audio;
  std::vector<std::uint8_t> visual;
};

/// Writes audio/, visual/, manifest.txt, manifest_train.txt,
/// manifest_test.txt, trials.txt and keyframes.txt under `out`.
void write_synthetic_corpus(const SynthConfig& cfg, const BankDims& dims,
                            const std::filesystem::path& out);

std::map<std::string, KeyframeInfo> read_keyframes(const std::filesystem::path& path);

}  // namespace avjp
