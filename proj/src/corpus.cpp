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

#include "avjp/corpus.hpp"

#include <cstdio>
#include <sstream>

#include "avjp/archive.hpp"
#include "avjp/types.hpp"

namespace avjp {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool blank_or_comment(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  const auto rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  const fs::path base = fs::absolute(path).parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    const auto tok = split_ws(line);
    require(tok.size() == 4, path.string() + ":" + std::to_string(lineno) +
                                 ": expected 'utt_id identity_id path_a path_v'");
    ManifestEntry e{tok[0], tok[1], fs::path(tok[2]), fs::path(tok[3])};
    if (e.audio_path.is_relative()) e.audio_path = base / e.audio_path;
    if (e.visual_path.is_relative()) e.visual_path = base / e.visual_path;
    out.push_back(std::move(e));
  }
  require(!out.empty(), "manifest " + path.string() + " lists no utterances");
  return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  const fs::path base = fs::absolute(path).parent_path();
  std::string text;
  for (const auto& e : entries) {
    text += e.utt_id + ' ' + e.identity_id + ' ' +
            relative_to(fs::absolute(e.audio_path), base) + ' ' +
            relative_to(fs::absolute(e.visual_path), base) + '\n';
  }
  io::write_file(path, text);
}

TrialList read_trials(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  TrialList out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    const auto tok = split_ws(line);
    require(tok.size() == 3 && (tok[0] == "0" || tok[0] == "1"),
            path.string() + ":" + std::to_string(lineno) +
                ": expected 'label enroll_id test_id' with label 0 or 1");
    out.trials.push_back({tok[1], tok[2], tok[0] == "1"});
  }
  require(!out.empty(), "trial list " + path.string() + " is empty");
  return out;
}

std::string format_trials(const TrialList& trials) {
  std::string text;
  for (const auto& t : trials.trials)
    text += std::string(t.target ? "1 " : "0 ") + t.enroll_id + ' ' + t.test_id + '\n';
  return text;
}

void write_trials(const fs::path& path, const TrialList& trials) {
  io::write_file(path, format_trials(trials));
}

std::string format_scores(const std::vector<ScoreLine>& lines) {
  std::string text;
  char buf[64];
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof(buf), "%.6f", l.score);
    text += l.enroll_id + ' ' + l.test_id + ' ' + buf + '\n';
  }
  return text;
}

std::vector<ScoreLine> parse_scores(const std::string& text) {
  std::istringstream in(text);
  std::vector<ScoreLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_or_comment(line)) continue;
    const auto tok = split_ws(line);
    require(tok.size() == 3, "score line " + std::to_string(lineno) +
                                 ": expected 'enroll_id test_id score'");
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok[2], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == tok[2].size(), "score line " + std::to_string(lineno) + ": bad score '" +
                                       tok[2] + "'");
    out.push_back({tok[0], tok[1], v});
  }
  return out;
}

void write_scores(const fs::path& path, const std::vector<ScoreLine>& lines) {
  io::write_file(path, format_scores(lines));
}

std::vector<ScoreLine> read_scores(const fs::path& path) {
  return parse_scores(io::read_file(path));
}

Utterance load_utterance(const ManifestEntry& entry) {
  Utterance u;
  u.utt_id = entry.utt_id;
  u.identity_id = entry.identity_id;
  const auto a = read_array(entry.audio_path);
  require(a.dims.size() == 2, entry.audio_path.string() + ": audio array must be rank 2");
  u.audio = matrix_from_array(a);
  const auto v = read_array(entry.visual_path);
  require(v.dims.size() == 4 && v.dims[1] == 1,
          entry.visual_path.string() + ": visual array must be [T x 1 x H x W]");
  u.visual = matrix_from_array(v);
  return u;
}

std::vector<Utterance> load_corpus(const std::vector<ManifestEntry>& entries) {
  std::vector<Utterance> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(load_utterance(e));
  return out;
}

}  // namespace avjp
