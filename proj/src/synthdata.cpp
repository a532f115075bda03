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

#include "avjp/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "avjp/archive.hpp"
#include "avjp/corpus.hpp"
#include "avjp/types.hpp"

namespace avjp {

namespace fs = std::filesystem;

namespace {

constexpr int kBankAttempts = 64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Eigen::VectorXd gaussian(Eigen::Index n, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = sd * dist(rng);
  return v;
}

/// Block-constant H x W image (row-major) from a grid x grid pattern.
Eigen::VectorXd upsample_grid(const Eigen::VectorXd& grid_values, const BankDims& d) {
  Eigen::VectorXd img(Eigen::Index(d.height) * d.width);
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const int gy = y * d.grid / d.height;
      const int gx = x * d.grid / d.width;
      img(y * d.width + x) = grid_values(gy * d.grid + gx);
    }
  return img;
}

void validate_dims(const BankDims& d) {
  require(d.audio_dim >= 1, "synthetic audio_dim must be >= 1");
  require(d.height >= 1 && d.width >= 1, "synthetic frame size must be positive");
  require(d.grid >= 1 && d.grid <= d.height && d.grid <= d.width,
          "synthetic visual_grid must lie in [1, min(H, W)]");
  require(d.spread > 0, "synthetic spread must be positive");
  require(d.shared >= 0, "synthetic shared scale must be non-negative");
  require(d.margin >= 0, "synthetic margin must be non-negative");
}

std::string mask_string(const std::vector<std::uint8_t>& m) {
  std::string s;
  for (auto b : m) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::uint8_t> parse_mask(const std::string& s) {
  std::vector<std::uint8_t> m;
  for (char c : s) {
    require(c == '0' || c == '1', "keyframe mask must be a 0/1 string, got '" + s + "'");
    m.push_back(c == '1');
  }
  return m;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = splitmix64(base);
  x = splitmix64(x ^ (a * 0xd6e8feb86659fd93ull + 1));
  x = splitmix64(x ^ (b * 0xa0761d6478bd642full + 2));
  return x;
}

double min_prototype_distance(const Eigen::MatrixXd& prototypes) {
  double best = std::numeric_limits<double>::infinity();
  const double scale = 1.0 / std::sqrt(double(prototypes.cols()));
  for (Eigen::Index i = 0; i < prototypes.rows(); ++i)
    for (Eigen::Index j = i + 1; j < prototypes.rows(); ++j)
      best = std::min(best, (prototypes.row(i) - prototypes.row(j)).norm() * scale);
  return best;
}

IdentityBank generate_identity_bank(int n, std::uint64_t seed, const BankDims& dims) {
  require(n >= 2, "identity bank needs n >= 2 identities, got " + std::to_string(n));
  validate_dims(dims);
  const Eigen::Index cells = Eigen::Index(dims.grid) * dims.grid;
  for (int attempt = 0; attempt < kBankAttempts; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, std::uint64_t(attempt)));
    IdentityBank bank;
    bank.num_identities = n;
    bank.dims = dims;
    bank.seed = seed;
    const Eigen::VectorXd shared_a = gaussian(dims.audio_dim, dims.shared, rng);
    const Eigen::VectorXd shared_v = gaussian(cells, dims.shared, rng);
    bank.audio_prototypes.resize(n, dims.audio_dim);
    bank.visual_prototypes.resize(n, Eigen::Index(dims.height) * dims.width);
    for (int i = 0; i < n; ++i) {
      bank.audio_prototypes.row(i) =
          (shared_a + gaussian(dims.audio_dim, dims.spread, rng)).transpose();
      bank.visual_prototypes.row(i) =
          upsample_grid(shared_v + gaussian(cells, dims.spread, rng), dims).transpose();
    }
    if (min_prototype_distance(bank.audio_prototypes) >= dims.margin &&
        min_prototype_distance(bank.visual_prototypes) >= dims.margin)
      return bank;
  }
  throw ContractError("cannot place " + std::to_string(n) +
                      " identity prototypes at RMS margin " + std::to_string(dims.margin) +
                      " (audio_dim=" + std::to_string(dims.audio_dim) +
                      ", visual_grid=" + std::to_string(dims.grid) +
                      "); use larger dims or a smaller margin");
}

int segment_count(int frames_a, int frames_v) { return std::min(frames_a, frames_v); }

int segment_of(int t, int frames, int segments) {
  return int((std::int64_t(t) * segments) / frames);
}

UtterancePair sample_paired_sequences(const IdentityBank& bank, int identity, int frames_a,
                                      int frames_v, double noise_sigma, double overlap,
                                      std::uint64_t seed, const SampleOptions& options) {
  require(identity >= 0 && identity < bank.num_identities,
          "identity " + std::to_string(identity) + " outside [0, " +
              std::to_string(bank.num_identities) + ")");
  require(frames_a >= 1 && frames_v >= 1, "frame counts must be >= 1");
  require(noise_sigma >= 0 && options.session_sigma >= 0 && options.distractor_sigma >= 0,
          "noise levels must be >= 0");
  require(overlap >= 0 && overlap <= 1, "overlap must lie in [0, 1]");
  const int segments = segment_count(frames_a, frames_v);
  std::mt19937_64 rng(seed);

  std::vector<std::uint8_t> seg_a = options.segments_a, seg_v = options.segments_v;
  if (seg_a.empty() && seg_v.empty()) {
    const int shared = int(std::lround(overlap * segments));
    const int rest = segments - shared;
    require(shared >= 1 || segments >= 2,
            "disjoint keyframes need at least two segments per utterance");
    int audio_only = 0;
    if (shared == 0) {
      std::binomial_distribution<int> coin(rest - 2, 0.5);
      audio_only = 1 + coin(rng);
    } else {
      std::binomial_distribution<int> coin(rest, 0.5);
      audio_only = coin(rng);
    }
    std::vector<int> order(static_cast<std::size_t>(segments));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    seg_a.assign(std::size_t(segments), 0);
    seg_v.assign(std::size_t(segments), 0);
    for (int i = 0; i < segments; ++i) {
      const auto s = std::size_t(order[std::size_t(i)]);
      if (i < shared) {
        seg_a[s] = seg_v[s] = 1;
      } else if (i < shared + audio_only) {
        seg_a[s] = 1;
      } else {
        seg_v[s] = 1;
      }
    }
  }
  require(seg_a.size() == std::size_t(segments) && seg_v.size() == std::size_t(segments),
          "explicit keyframe segments must have " + std::to_string(segments) + " entries");
  require(std::count(seg_a.begin(), seg_a.end(), 1) >= 1 &&
              std::count(seg_v.begin(), seg_v.end(), 1) >= 1,
          "each modality needs at least one keyframe");

  const auto& d = bank.dims;
  const Eigen::VectorXd offset_a = gaussian(d.audio_dim, options.session_sigma, rng);
  const Eigen::VectorXd offset_v =
      upsample_grid(gaussian(Eigen::Index(d.grid) * d.grid, options.session_sigma, rng), d);
  std::vector<Eigen::VectorXd> distract_a, distract_v;
  for (int s = 0; s < segments; ++s) {
    distract_a.push_back(gaussian(d.audio_dim, options.distractor_sigma, rng));
    distract_v.push_back(
        upsample_grid(gaussian(Eigen::Index(d.grid) * d.grid, options.distractor_sigma, rng), d));
  }

  UtterancePair u;
  u.identity = identity;
  u.audio.resize(frames_a, d.audio_dim);
  u.keyframe_mask_a.resize(std::size_t(frames_a));
  for (int t = 0; t < frames_a; ++t) {
    const auto s = std::size_t(segment_of(t, frames_a, segments));
    const bool key = seg_a[s];
    u.keyframe_mask_a[std::size_t(t)] = key;
    Eigen::VectorXd row = gaussian(d.audio_dim, noise_sigma, rng);
    row += key ? Eigen::VectorXd(bank.audio_prototypes.row(identity).transpose() + offset_a)
               : distract_a[s];
    u.audio.row(t) = row.transpose();
  }
  const Eigen::Index pixels = Eigen::Index(d.height) * d.width;
  u.visual.resize(frames_v, pixels);
  u.keyframe_mask_v.resize(std::size_t(frames_v));
  for (int t = 0; t < frames_v; ++t) {
    const auto s = std::size_t(segment_of(t, frames_v, segments));
    const bool key = seg_v[s];
    u.keyframe_mask_v[std::size_t(t)] = key;
    Eigen::VectorXd row = gaussian(pixels, noise_sigma, rng);
    row += key ? Eigen::VectorXd(bank.visual_prototypes.row(identity).transpose() + offset_v)
               : distract_v[s];
    u.visual.row(t) = row.transpose();
  }
  return u;
}

TrialList make_trials(const std::vector<LabeledUtterance>& utterances, int n_target,
                      int n_nontarget, std::uint64_t seed) {
  require(n_target >= 0 && n_nontarget >= 0, "trial counts must be non-negative");
  require(n_target + n_nontarget > 0, "a trial list must not be empty");
  std::vector<std::pair<std::size_t, std::size_t>> targets, nontargets;
  for (std::size_t i = 0; i < utterances.size(); ++i)
    for (std::size_t j = i + 1; j < utterances.size(); ++j)
      (utterances[i].identity_id == utterances[j].identity_id ? targets : nontargets)
          .emplace_back(i, j);
  require(targets.size() >= std::size_t(n_target),
          "insufficient utterances: " + std::to_string(n_target) + " target trials requested, " +
              std::to_string(targets.size()) + " distinct same-identity pairs available");
  require(nontargets.size() >= std::size_t(n_nontarget),
          "insufficient utterances: " + std::to_string(n_nontarget) +
              " nontarget trials requested, " + std::to_string(nontargets.size()) + " available");
  std::mt19937_64 rng(seed);
  std::shuffle(targets.begin(), targets.end(), rng);
  std::shuffle(nontargets.begin(), nontargets.end(), rng);
  TrialList out;
  for (int i = 0; i < n_target; ++i) {
    const auto [a, b] = targets[std::size_t(i)];
    out.trials.push_back({utterances[a].utt_id, utterances[b].utt_id, true});
  }
  for (int i = 0; i < n_nontarget; ++i) {
    const auto [a, b] = nontargets[std::size_t(i)];
    out.trials.push_back({utterances[a].utt_id, utterances[b].utt_id, false});
  }
  std::shuffle(out.trials.begin(), out.trials.end(), rng);
  return out;
}

std::string synthetic_identity_id(int identity) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "id%03d", identity);
  return buf;
}

std::string synthetic_utt_id(int identity, int index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "id%03d-u%03d", identity, index);
  return buf;
}

void write_synthetic_corpus(const SynthConfig& cfg, const BankDims& dims, const fs::path& out) {
  require(cfg.utts_per_identity >= 1, "synth_utterances must be >= 1");
  require(cfg.train_identities >= 1 && cfg.train_identities < cfg.num_identities,
          "synth_train_identities must lie in [1, synth_identities)");
  const auto bank = generate_identity_bank(cfg.num_identities, derive_seed(cfg.seed, 1), dims);
  fs::create_directories(out / "audio");
  fs::create_directories(out / "visual");

  std::vector<ManifestEntry> all, train, test;
  std::vector<LabeledUtterance> held_out;
  std::string keyframes;
  for (int i = 0; i < cfg.num_identities; ++i) {
    for (int j = 0; j < cfg.utts_per_identity; ++j) {
      SampleOptions opt;
      opt.session_sigma = cfg.session_sigma;
      opt.distractor_sigma = cfg.distractor_sigma;
      const auto pair = sample_paired_sequences(bank, i, cfg.frames_a, cfg.frames_v,
                                                cfg.noise_sigma, cfg.overlap,
                                                derive_seed(cfg.seed, 2 + std::uint64_t(i),
                                                            std::uint64_t(j)),
                                                opt);
      const auto utt = synthetic_utt_id(i, j);
      const auto spk = synthetic_identity_id(i);
      const fs::path pa = out / "audio" / (utt + ".avjp");
      const fs::path pv = out / "visual" / (utt + ".avjp");
      write_array(pa, array_from_matrix(pair.audio));
      write_array(pv, array_from_matrix(pair.visual,
                                        {std::uint32_t(cfg.frames_v), 1,
                                         std::uint32_t(dims.height), std::uint32_t(dims.width)}));
      ManifestEntry e{utt, spk, pa, pv};
      all.push_back(e);
      if (i < cfg.train_identities) {
        train.push_back(e);
      } else {
        test.push_back(e);
        held_out.push_back({utt, spk});
      }
      keyframes += utt + ' ' + mask_string(pair.keyframe_mask_a) + ' ' +
                   mask_string(pair.keyframe_mask_v) + '\n';
    }
  }
  write_manifest(out / "manifest.txt", all);
  write_manifest(out / "manifest_train.txt", train);
  write_manifest(out / "manifest_test.txt", test);
  io::write_file(out / "keyframes.txt", keyframes);
  write_trials(out / "trials.txt",
               make_trials(held_out, cfg.n_target, cfg.n_nontarget, derive_seed(cfg.seed, 0)));
}

std::map<std::string, KeyframeInfo> read_keyframes(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  std::map<std::string, KeyframeInfo> out;
  std::string utt, a, v;
  while (in >> utt >> a >> v) out[utt] = {parse_mask(a), parse_mask(v)};
  return out;
}

}  // namespace avjp
