// Copyright 2026 The edp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EDP_ERRORS_HPP_
#define EDP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace edp {

// Invalid configuration or arguments (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unusable input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A computation could not produce a valid result (CLI exit code 4).
class ComputeError : public std::runtime_error {
 public:
  explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace edp

#endif  // EDP_ERRORS_HPP_
