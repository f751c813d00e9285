// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clover::text {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits on `sep`, trimming each piece. An empty input gives no pieces.
inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.emplace_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// One `key = value` line; comments start with '#'.
struct KeyValueLine {
  std::size_t line_no = 0;
  std::string key;
  std::string value;
};

std::vector<KeyValueLine> parse_key_values(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Whole-string parse; false on trailing junk or an empty string.
bool parse_double(std::string_view s, double& out);
bool parse_size(std::string_view s, std::size_t& out);

// %.17g, round-trips a double exactly.
std::string format_double(double v);

}  // namespace clover::text
