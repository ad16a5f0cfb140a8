// Copyright 2026 The hoisynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hoisynth/motion/motion.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace hoisynth::motion {
namespace {

using nlohmann::json;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// True when the keyword is the tag or one of its inflected forms.
bool keyword_matches_tag(const std::string& keyword, const std::string& tag) {
  if (keyword == tag) return true;
  for (const std::string& variant : planning::word_inflections(tag)) {
    if (keyword == variant) return true;
  }
  return false;
}

std::set<std::string> plan_keywords(const planning::Plan& plan) {
  std::set<std::string> keywords;
  keywords.insert(planning::to_lower_copy(plan.object_category));
  for (const std::string& word :
       planning::tokenize_words(plan.standardized_text)) {
    keywords.insert(word);
  }
  return keywords;
}

}  // namespace

int ingest_clip(MotionClipLibrary& library, const body::PoseSequence& sequence,
                const std::vector<std::string>& tags,
                const std::vector<int>& end_positions) {
  if (sequence.frames.empty()) {
    throw std::invalid_argument("ingest_clip: empty pose sequence");
  }
  if (tags.empty()) {
    throw std::invalid_argument("ingest_clip: clip needs at least one tag");
  }
  if (library.clips.empty()) {
    library.frame_rate = sequence.frame_rate;
  } else if (sequence.frame_rate != library.frame_rate) {
    throw std::runtime_error("ingest_clip: frame-rate mismatch (library " +
                             std::to_string(library.frame_rate) + ", clip " +
                             std::to_string(sequence.frame_rate) + ")");
  }
  const int frame_count = static_cast<int>(sequence.frames.size());
  for (int position : end_positions) {
    if (position < 0 || position >= frame_count) {
      throw std::invalid_argument("ingest_clip: end position " +
                                  std::to_string(position) +
                                  " out of range for " +
                                  std::to_string(frame_count) + " frames");
    }
  }
  MotionClip clip;
  clip.sequence = sequence;
  for (const std::string& tag : tags) {
    const std::string lower = planning::to_lower_copy(tag);
    if (std::find(clip.tags.begin(), clip.tags.end(), lower) ==
        clip.tags.end()) {
      clip.tags.push_back(lower);
    }
  }
  clip.end_positions = end_positions;
  const int id = static_cast<int>(library.clips.size());
  library.clips.push_back(std::move(clip));
  for (const std::string& tag : library.clips.back().tags) {
    library.tag_index[tag].push_back(id);
  }
  return id;
}

std::vector<int> query_clips(const MotionClipLibrary& library,
                             const std::string& tag) {
  const auto it = library.tag_index.find(planning::to_lower_copy(tag));
  return it != library.tag_index.end() ? it->second : std::vector<int>{};
}

void save_clip_library(const MotionClipLibrary& library,
                       const std::string& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["frame_rate"] = library.frame_rate;
  manifest["clips"] = json::array();
  for (size_t i = 0; i < library.clips.size(); ++i) {
    const MotionClip& clip = library.clips[i];
    const std::string file = "clip_" + std::to_string(i) + ".jsonl";
    body::save_pose_sequence(clip.sequence,
                             (std::filesystem::path(dir) / file).string());
    manifest["clips"].push_back({{"file", file},
                                 {"tags", clip.tags},
                                 {"end_positions", clip.end_positions}});
  }
  const std::string manifest_path =
      (std::filesystem::path(dir) / "manifest.json").string();
  std::ofstream out(manifest_path);
  if (!out) {
    throw std::runtime_error("cannot write clip manifest: " + manifest_path);
  }
  out << manifest.dump(2) << "\n";
}

MotionClipLibrary load_clip_library(const std::string& dir) {
  const std::string manifest_path =
      (std::filesystem::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("cannot open clip manifest: " + manifest_path);
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad clip manifest '" + manifest_path +
                             "': " + e.what());
  }
  MotionClipLibrary library;
  for (const auto& entry : manifest.at("clips")) {
    const std::string file = entry.at("file").get<std::string>();
    const body::PoseSequence sequence = body::load_pose_sequence(
        (std::filesystem::path(dir) / file).string());
    ingest_clip(library, sequence,
                entry.at("tags").get<std::vector<std::string>>(),
                entry.at("end_positions").get<std::vector<int>>());
  }
  const double manifest_rate = manifest.at("frame_rate").get<double>();
  if (!library.clips.empty() && library.frame_rate != manifest_rate) {
    throw std::runtime_error("clip manifest frame rate disagrees with clips");
  }
  library.frame_rate = manifest_rate;
  return library;
}

ClipActionProvider::ClipActionProvider(const MotionClipLibrary* library,
                                       int segment_frames)
    : library_(library), segment_frames_(segment_frames) {
  if (library_ == nullptr) {
    throw std::invalid_argument("ClipActionProvider: null library");
  }
  if (segment_frames_ < 1) {
    throw std::invalid_argument(
        "ClipActionProvider: segment_frames must be >= 1");
  }
}

ProviderInfo ClipActionProvider::info() const {
  ProviderInfo info;
  info.segment_frames = segment_frames_;
  info.frame_rate = library_->frame_rate;
  for (const MotionClip& clip : library_->clips) {
    info.max_sequence_length =
        std::max(info.max_sequence_length,
                 static_cast<int>(clip.sequence.frames.size()));
  }
  return info;
}

std::pair<int, int> ClipActionProvider::select(const planning::Plan& plan,
                                               std::uint64_t seed) const {
  const std::set<std::string> keywords = plan_keywords(plan);
  int best_score = 0;
  std::vector<int> ties;
  for (size_t i = 0; i < library_->clips.size(); ++i) {
    int score = 0;
    for (const std::string& tag : library_->clips[i].tags) {
      for (const std::string& keyword : keywords) {
        if (keyword_matches_tag(keyword, tag)) {
          ++score;
          break;
        }
      }
    }
    if (score > best_score) {
      best_score = score;
      ties = {static_cast<int>(i)};
    } else if (score == best_score && score > 0) {
      ties.push_back(static_cast<int>(i));
    }
  }
  if (best_score < 1) {
    throw std::runtime_error("no motion for plan: no clip tag matches '" +
                             plan.standardized_text + "'");
  }
  std::mt19937_64 rng(seed);
  const int clip_id = ties[static_cast<size_t>(
      uniform01(rng) * static_cast<double>(ties.size()))];
  const MotionClip& clip = library_->clips[static_cast<size_t>(clip_id)];
  int end_frame = static_cast<int>(clip.sequence.frames.size()) - 1;
  if (!clip.end_positions.empty()) {
    end_frame = clip.end_positions[static_cast<size_t>(
        uniform01(rng) * static_cast<double>(clip.end_positions.size()))];
  }
  return {clip_id, end_frame};
}

Action ClipActionProvider::emit(const planning::Plan& plan,
                                std::uint64_t seed, int cursor) const {
  const auto [clip_id, end_frame] = select(plan, seed);
  const MotionClip& clip = library_->clips[static_cast<size_t>(clip_id)];
  if (cursor > end_frame) {
    throw std::runtime_error(
        "next_action: called after the end flag was emitted");
  }
  Action action;
  const int stop = std::min(cursor + segment_frames_, end_frame + 1);
  for (int f = cursor; f < stop; ++f) {
    action.frames.push_back(clip.sequence.frames[static_cast<size_t>(f)]);
  }
  action.end_flag = stop == end_frame + 1;
  return action;
}

Action ClipActionProvider::initial_action(const planning::Plan& plan,
                                          std::uint64_t seed) {
  return emit(plan, seed, 0);
}

Action ClipActionProvider::next_action(
    const geom::RigidTransform& /*object_state*/,
    const std::vector<Action>& history, const planning::Plan& plan,
    std::uint64_t seed) {
  if (history.empty()) {
    throw std::invalid_argument("next_action: history must be non-empty");
  }
  int cursor = 0;
  for (const Action& action : history) {
    cursor += static_cast<int>(action.frames.size());
  }
  return emit(plan, seed, cursor);
}

}  // namespace hoisynth::motion
