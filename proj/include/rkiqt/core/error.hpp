// Copyright (c) the RKIQT Authors.
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

namespace rkiqt {

// Every externally observable failure carries one of these codes; the CLI
// maps them onto distinct process exit codes.
enum class Err {
  MissingFile = 1,
  MalformedRow,
  NonFiniteScore,
  DuplicateId,
  EmptyManifest,
  EmptyPool,
  ImageTooSmall,
  UnwritableDir,
  DecodeError,
  ShapeMismatch,
  LengthMismatch,
  ConstantInput,
  TooFewSamples,
  UnknownKey,
  TypeMismatch,
  MissingCheckpoint,
  BadCheckpoint,
  NonFiniteLoss,
  UntrainedTeacher,
  InvalidArgument,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) {
  throw Error(code, msg);
}

inline void check(bool ok, Err code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

const char* err_name(Err code);

// CLI exit-code contract: 2 unknown config key, 3 type mismatch,
// 4 missing/corrupt checkpoint, 5 data errors, 6 bad invocation, 1 other.
int exit_code_for(Err code);

}  // namespace rkiqt
