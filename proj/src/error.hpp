// Copyright 2026 The Anchorcast Authors
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

#ifndef ANCHORCAST__ERROR_HPP_
#define ANCHORCAST__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace anchorcast
{

// Numeric values double as process exit codes for the CLI (0 success,
// 2 validation, 3 numeric failure); the rest are C API only.
enum class ErrorCode : int {
  kValidation = 2,
  kNumeric = 3,
  kIo = 4,
  kMissingFrame = 5,
  kNotFound = 6,
  kArgument = 7,
};

class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string & what) { throw Error(code, what); }

}  // namespace anchorcast

#endif  // ANCHORCAST__ERROR_HPP_
