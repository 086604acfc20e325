// Copyright 2026 The ope-switch Authors
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

#ifndef OPE_ERRORS_HPP
#define OPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ope {

/// Input failed a documented precondition (bad log, bad policy output,
/// malformed file). The CLI maps these to exit status 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The target policy puts mass on an action the logging policy never takes.
class AbsoluteContinuityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A file could not be parsed; `line()` is 1-based, 0 when not applicable.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A computation could not produce a value (degenerate normalizer, empty
/// weight range, ...). The CLI maps these to exit status 2.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ope

#endif  // OPE_ERRORS_HPP
