// Copyright 2026 The rqsid Authors.
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

#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace rqsid {

// Exclusive claim on an output directory, held through a `.rqsid.lock` file
// created with O_EXCL. Throws DataError when another run holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

  static constexpr const char* kFileName = ".rqsid.lock";

 private:
  std::filesystem::path path_;
};

// Wall-clock seconds per named stage, in insertion order.
class StageTimer {
 public:
  void start(std::string stage);
  void stop();
  nlohmann::json to_json() const;

 private:
  std::vector<std::pair<std::string, double>> stages_;
  std::string current_;
  std::chrono::steady_clock::time_point began_;
};

// Files produced by one command. Nothing touches the disk until commit(),
// which takes the directory lock, writes every file to a temporary name,
// renames them into place and records the run in manifest.json together with
// the SHA-256 of each file. A failure before the renames leaves no output.
class OutputSet {
 public:
  static constexpr const char* kManifestName = "manifest.json";

  void add(std::string name, std::string content);
  bool empty() const { return files_.empty(); }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  // `run` is stored under "runs" in the manifest with an "outputs" list added.
  void commit(const std::filesystem::path& dir, nlohmann::json run) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace rqsid
