// Copyright 2026 The intentgraph Authors.
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

#ifndef INTENTGRAPH_UTIL_HPP_
#define INTENTGRAPH_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace intentgraph {

// 64-bit FNV-1a; stable across platforms, used for manifest fingerprints.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes);
  Fnv1a& update(std::uint64_t value);
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string hex64(std::uint64_t value);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
// Splits on `sep`, trimming each piece. Empty pieces are kept.
std::vector<std::string> split(std::string_view s, std::string_view sep);
// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace intentgraph

#endif  // INTENTGRAPH_UTIL_HPP_
