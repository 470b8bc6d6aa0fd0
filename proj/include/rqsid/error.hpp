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

#include <stdexcept>
#include <string>

namespace rqsid {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 2 and everything else to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration (M = 0, K > M, k > beam width, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad input data: empty collections, dimension mismatch, non-finite values,
// unreadable or malformed files.
class DataError : public Error {
 public:
  using Error::Error;
};

// A token, layer or flat id outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// A flat token sequence whose layers are not strictly increasing.
class MalformedSequenceError : public Error {
 public:
  using Error::Error;
};

// A statistic requested over an empty histogram.
class UndefinedStatError : public Error {
 public:
  using Error::Error;
};

// Two inputs that must describe the same data disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace rqsid
