// Copyright 2026 The gazecheck Authors
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

#include "gazecheck/log.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <mutex>

namespace gazecheck {

namespace {

LogLevel from_env() {
  const char* v = std::getenv("QEYE_LOG");
  if (!v) return LogLevel::Warn;
  if (!std::strcmp(v, "error") || !std::strcmp(v, "0")) return LogLevel::Error;
  if (!std::strcmp(v, "warn") || !std::strcmp(v, "1")) return LogLevel::Warn;
  if (!std::strcmp(v, "info") || !std::strcmp(v, "2")) return LogLevel::Info;
  if (!std::strcmp(v, "debug") || !std::strcmp(v, "3")) return LogLevel::Debug;
  return LogLevel::Warn;
}

std::atomic<int>& threshold() {
  static std::atomic<int> t{static_cast<int>(from_env())};
  return t;
}

const char* name(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "info";
}

}  // namespace

LogLevel log_threshold() { return static_cast<LogLevel>(threshold().load()); }

void set_log_threshold(LogLevel level) { threshold().store(static_cast<int>(level)); }

void log(LogLevel level, std::string_view msg) {
  if (static_cast<int>(level) > threshold().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[" << name(level) << "] " << msg << '\n';
}

}  // namespace gazecheck
