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

// Writes the self-contained demo fixture (rig, crate, contact database,
// clip library, lexicon, rollout.toml) so the main binary has something
// to run out of the box:
//
//   hoisynth-fixture demo
//   hoisynth --config demo/rollout.toml rollout

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hoisynth/pipeline/pipeline.h"

int main(int argc, char** argv) {
  CLI::App app{"Write the demo interaction fixture"};
  std::string dir = "demo_fixture";
  app.add_option("dir", dir, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string config = hoisynth::pipeline::write_demo_fixture(dir);
    std::cout << config << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "[error] " << e.what() << std::endl;
    return 3;
  }
}
