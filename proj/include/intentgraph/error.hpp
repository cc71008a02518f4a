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

#ifndef INTENTGRAPH_ERROR_HPP_
#define INTENTGRAPH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace intentgraph {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files or records.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Incompatible tensor shapes or model dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced or consumed by a differentiable op.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Ids, names or hashes that do not match the graph, vocabulary or checkpoint.
class LookupError : public Error {
 public:
  using Error::Error;
};

}  // namespace intentgraph

#endif  // INTENTGRAPH_ERROR_HPP_
