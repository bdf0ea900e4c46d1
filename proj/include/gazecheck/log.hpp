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

#pragma once

#include <string_view>

namespace gazecheck {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold from QEYE_LOG (error|warn|info|debug or 0-3); default warn.
LogLevel log_threshold();
void set_log_threshold(LogLevel level);
void log(LogLevel level, std::string_view msg);

}  // namespace gazecheck
