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

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "hoisynth/geom/transform.h"
#include "hoisynth/pipeline/pipeline.h"

namespace hoisynth::pipeline {
namespace {

namespace fs = std::filesystem;
using geom::RigidTransform;
using geom::Vec3;
using nlohmann::json;

json frame_record(int t, const body::BodyPose& human,
                  const RigidTransform& object) {
  json rec;
  rec["t"] = t;
  rec["human"]["root_t"] = {human.root_translation.x(),
                            human.root_translation.y(),
                            human.root_translation.z()};
  json joints = json::array();
  for (const Vec3& r : human.joint_rotations) {
    joints.push_back({r.x(), r.y(), r.z()});
  }
  rec["human"]["joint_r"] = joints;
  json rot = json::array();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) rot.push_back(object.rotation(i, j));
  }
  rec["object"]["R"] = rot;
  rec["object"]["t"] = {object.translation.x(), object.translation.y(),
                        object.translation.z()};
  return rec;
}

Vec3 read_vec3(const json& arr) {
  if (!arr.is_array() || arr.size() != 3) {
    throw std::runtime_error("expected a 3-element array");
  }
  return Vec3(arr[0].get<double>(), arr[1].get<double>(),
              arr[2].get<double>());
}

void write_merged_obj(const fs::path& path, const std::vector<Vec3>& body,
                      const std::vector<std::array<int, 3>>& body_faces,
                      const geom::TriMesh& object_mesh,
                      const RigidTransform& object_pose) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  char line[128];
  for (const Vec3& v : body) {
    std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", v.x(), v.y(),
                  v.z());
    out << line;
  }
  for (const Vec3& v : object_mesh.vertices) {
    const Vec3 p = object_pose.apply(v);
    std::snprintf(line, sizeof(line), "v %.17g %.17g %.17g\n", p.x(), p.y(),
                  p.z());
    out << line;
  }
  const int offset = static_cast<int>(body.size());
  for (const auto& f : body_faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  for (const auto& f : object_mesh.faces) {
    out << "f " << f[0] + offset + 1 << ' ' << f[1] + offset + 1 << ' '
        << f[2] + offset + 1 << '\n';
  }
}

}  // namespace

void export_sequence(const InteractionSequence& seq, const body::BodyRig& rig,
                     const geom::TriMesh& object_mesh,
                     const std::string& dir, const ExportOptions& options) {
  if (seq.human.frames.size() != seq.object.frames.size()) {
    throw std::invalid_argument(
        "export_sequence: unequal human and object frame counts");
  }
  fs::create_directories(dir);
  const fs::path base(dir);

  {
    std::ofstream out(base / "sequence.jsonl");
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (base / "sequence.jsonl").string());
    }
    for (int t = 0; t < seq.frame_count(); ++t) {
      out << frame_record(t, seq.human.frames[static_cast<size_t>(t)],
                          seq.object.frames[static_cast<size_t>(t)])
                 .dump()
          << '\n';
    }
  }

  const ContactProfile profile =
      contact_profile(rig, object_mesh, seq, options.contact_threshold);
  json metrics;
  metrics["category"] = seq.category;
  metrics["frames"] = seq.frame_count();
  metrics["frame_rate"] = seq.human.frame_rate;
  metrics["contact_threshold"] = options.contact_threshold;
  metrics["pene"] = metric_pene(rig, object_mesh, seq);
  metrics["rot_err_definition"] =
      "geodesic angle between rotation matrices, radians";
  if (options.reference != nullptr) {
    const ContactProfile ref_profile = contact_profile(
        rig, object_mesh, *options.reference, options.contact_threshold);
    metrics["cmd"] = metric_cmd(profile, ref_profile);
    const auto [trans_mm, rot_rad] =
        metric_pose_err(seq.object, options.reference->object);
    metrics["trans_err_mm"] = trans_mm;
    metrics["rot_err_rad"] = rot_rad;
  } else {
    metrics["cmd"] = nullptr;
    metrics["trans_err_mm"] = nullptr;
    metrics["rot_err_rad"] = nullptr;
  }
  metrics["contact_profile"] = profile.fractions;
  json segments = json::array();
  for (const SegmentInfo& s : seq.segments) {
    segments.push_back({{"start", s.start},
                        {"frames", s.frames},
                        {"gated", s.gated},
                        {"refined", s.refined},
                        {"dynamics", s.dynamics}});
  }
  metrics["per_segment"] = segments;
  {
    std::ofstream out(base / "metrics.json");
    if (!out) {
      throw std::runtime_error("cannot write " +
                               (base / "metrics.json").string());
    }
    out << metrics.dump(2) << '\n';
  }

  if (options.write_obj_frames) {
    const fs::path frames_dir = base / "frames";
    fs::create_directories(frames_dir);
    for (int t = 0; t < seq.frame_count(); ++t) {
      const std::vector<Vec3> body =
          body::skin(rig, seq.human.frames[static_cast<size_t>(t)]);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06d.obj", t);
      write_merged_obj(frames_dir / name, body, rig.template_mesh.faces,
                       object_mesh, seq.object.frames[static_cast<size_t>(t)]);
    }
  }
}

InteractionSequence import_sequence(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream in(base / "sequence.jsonl");
  if (!in) {
    throw std::runtime_error("cannot read " +
                             (base / "sequence.jsonl").string());
  }
  InteractionSequence seq;
  std::string line;
  int expected_t = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    if (rec.at("t").get<int>() != expected_t) {
      throw std::runtime_error("sequence.jsonl: frame index mismatch at t=" +
                               std::to_string(expected_t));
    }
    ++expected_t;
    body::BodyPose pose;
    pose.root_translation = read_vec3(rec.at("human").at("root_t"));
    for (const json& r : rec.at("human").at("joint_r")) {
      pose.joint_rotations.push_back(read_vec3(r));
    }
    const json& rot = rec.at("object").at("R");
    if (!rot.is_array() || rot.size() != 9) {
      throw std::runtime_error("sequence.jsonl: object.R must have 9 entries");
    }
    RigidTransform object;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        object.rotation(i, j) = rot[static_cast<size_t>(i * 3 + j)];
      }
    }
    object.translation = read_vec3(rec.at("object").at("t"));
    seq.human.frames.push_back(std::move(pose));
    seq.object.frames.push_back(object);
  }

  std::ifstream metrics_in(base / "metrics.json");
  if (metrics_in) {
    json metrics;
    metrics_in >> metrics;
    seq.category = metrics.value("category", std::string());
    const double rate = metrics.value("frame_rate", 30.0);
    seq.human.frame_rate = rate;
    seq.object.frame_rate = rate;
    if (metrics.contains("per_segment")) {
      for (const json& s : metrics["per_segment"]) {
        SegmentInfo info;
        info.start = s.at("start").get<int>();
        info.frames = s.at("frames").get<int>();
        info.gated = s.at("gated").get<bool>();
        info.refined = s.at("refined").get<bool>();
        info.dynamics = s.at("dynamics").get<std::string>();
        seq.segments.push_back(std::move(info));
      }
    }
  }
  return seq;
}

std::vector<EvalOutcome> run_eval(const RolloutConfig& config,
                                  const std::vector<std::string>& texts,
                                  int workers) {
  if (workers < 1) {
    throw std::invalid_argument("run_eval: workers must be >= 1");
  }
  if (texts.empty()) {
    throw std::invalid_argument("run_eval: no texts");
  }
  RolloutAssets assets = load_assets(config);
  const fs::path base(config.output_dir);
  fs::create_directories(base);

  std::vector<EvalOutcome> outcomes(texts.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= texts.size()) return;
      EvalOutcome& out = outcomes[i];
      out.index = static_cast<int>(i);
      out.text = texts[i];
      out.seed = derive_seed(config.seed, i);
      RolloutConfig item = config;
      item.text = texts[i];
      item.seed = out.seed;
      item.output_dir = (base / ("item_" + std::to_string(i))).string();
      out.output_dir = item.output_dir;
      try {
        const InteractionSequence seq = run_rollout(item, assets);
        ExportOptions options;
        options.write_obj_frames = item.write_obj_frames;
        options.contact_threshold = item.contact_threshold;
        const auto tpl = assets.db.object_templates.find(seq.category);
        if (tpl == assets.db.object_templates.end()) {
          throw StageError("export", "no object template for category '" +
                                         seq.category + "'");
        }
        export_sequence(seq, assets.rig, tpl->second, item.output_dir,
                        options);
        out.ok = true;
        out.frames = seq.frame_count();
        out.pene = metric_pene(assets.rig, tpl->second, seq);
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
    }
  };
  const int thread_count =
      std::min<int>(workers, static_cast<int>(texts.size()));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  json report = json::array();
  for (const EvalOutcome& out : outcomes) {
    report.push_back({{"index", out.index},
                      {"text", out.text},
                      {"seed", out.seed},
                      {"ok", out.ok},
                      {"error", out.error},
                      {"frames", out.frames},
                      {"pene", out.pene},
                      {"output_dir", out.output_dir}});
  }
  std::ofstream out(base / "eval_report.json");
  if (!out) {
    throw std::runtime_error("cannot write " +
                             (base / "eval_report.json").string());
  }
  out << report.dump(2) << '\n';
  return outcomes;
}

}  // namespace hoisynth::pipeline
