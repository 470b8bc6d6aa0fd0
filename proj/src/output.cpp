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

#include "rqsid/output.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <system_error>

#include "rqsid/error.hpp"
#include "rqsid/io.hpp"

namespace rqsid {

namespace fs = std::filesystem;

DirectoryLock::DirectoryLock(const fs::path& dir) : path_(dir / kFileName) {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw DataError("output directory '" + dir.string() + "' is locked by another run (" +
                      path_.string() + ")");
    throw DataError("cannot create lock file '" + path_.string() + "': " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

void StageTimer::start(std::string stage) {
  if (!current_.empty()) stop();
  current_ = std::move(stage);
  began_ = std::chrono::steady_clock::now();
}

void StageTimer::stop() {
  if (current_.empty()) return;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - began_).count();
  stages_.emplace_back(std::move(current_), secs);
  current_.clear();
}

nlohmann::json StageTimer::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, secs] : stages_) out.push_back({{"stage", name}, {"seconds", secs}});
  return out;
}

void OutputSet::add(std::string name, std::string content) {
  if (name.empty() || fs::path(name).filename() != fs::path(name) || name == kManifestName ||
      name.starts_with('.'))
    throw Error("invalid output file name '" + name + "'");
  for (const auto& f : files_) {
    if (f.first == name) throw Error("output file '" + name + "' added twice");
  }
  files_.emplace_back(std::move(name), std::move(content));
}

namespace {

fs::path temp_name(const fs::path& dir, const std::string& name) {
  return dir / ("." + name + ".tmp" + std::to_string(::getpid()));
}

void write_whole(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw DataError("cannot write '" + path.string() + "'");
}

}  // namespace

void OutputSet::commit(const fs::path& dir, nlohmann::json run) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  DirectoryLock lock(dir);

  nlohmann::json manifest;
  const fs::path manifest_path = dir / kManifestName;
  if (fs::exists(manifest_path)) {
    try {
      manifest = nlohmann::json::parse(io::read_file(manifest_path));
    } catch (const std::exception&) {
      manifest = nlohmann::json();
    }
  }
  if (!manifest.is_object()) manifest = nlohmann::json::object();
  manifest["schema_version"] = io::kReportSchemaVersion;
  if (!manifest.contains("files") || !manifest["files"].is_object())
    manifest["files"] = nlohmann::json::object();
  if (!manifest.contains("runs") || !manifest["runs"].is_array())
    manifest["runs"] = nlohmann::json::array();

  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& [name, content] : files_) {
    manifest["files"][name] = {{"sha256", io::sha256_hex(content)}, {"bytes", content.size()}};
    outputs.push_back(name);
  }
  run["outputs"] = std::move(outputs);
  manifest["runs"].push_back(std::move(run));

  std::vector<std::pair<fs::path, fs::path>> staged;
  try {
    for (const auto& [name, content] : files_) {
      staged.emplace_back(temp_name(dir, name), dir / name);
      write_whole(staged.back().first, content);
    }
    staged.emplace_back(temp_name(dir, kManifestName), manifest_path);
    write_whole(staged.back().first, io::dump(manifest));
  } catch (...) {
    for (const auto& s : staged) fs::remove(s.first, ec);
    throw;
  }
  for (const auto& [from, to] : staged) {
    fs::rename(from, to, ec);
    if (ec) throw DataError("cannot move '" + from.string() + "' into place: " + ec.message());
  }
}

}  // namespace rqsid
