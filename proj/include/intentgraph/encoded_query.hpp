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

#ifndef INTENTGRAPH_ENCODED_QUERY_HPP_
#define INTENTGRAPH_ENCODED_QUERY_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace intentgraph {

// A query after vocabulary lookup and label resolution. Label vectors are
// multi-hot over the concept ids (length M) and transition ids (length N) of
// the graph the query was encoded against.
struct EncodedQuery {
  std::vector<std::size_t> word_ids;
  std::vector<std::size_t> pos_ids;
  std::vector<std::uint8_t> concept_labels;
  std::vector<std::uint8_t> transition_labels;

  std::size_t length() const { return word_ids.size(); }

  friend bool operator==(const EncodedQuery&, const EncodedQuery&) = default;
};

}  // namespace intentgraph

#endif  // INTENTGRAPH_ENCODED_QUERY_HPP_
