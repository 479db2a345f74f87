// Copyright 2026 The SDL Authors.
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

#ifndef SDL_ERROR_H_
#define SDL_ERROR_H_

#include <stdexcept>
#include <string>

namespace sdl {

// Base class for every domain error raised by the toolkit. The CLI maps
// these to exit code 1.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input violates an ordering precondition (e.g. unsorted timestamps).
class OrderingError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported file content.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A statistic is undefined for the given data (constant column, zero SD,
// single category, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Design matrix is rank deficient.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Precondition on an argument failed.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Optimization diverged or could not start.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace sdl

#endif  // SDL_ERROR_H_
