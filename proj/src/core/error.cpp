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

#include "rkiqt/core/error.hpp"

namespace rkiqt {

const char* err_name(Err code) {
  switch (code) {
    case Err::MissingFile: return "MissingFile";
    case Err::MalformedRow: return "MalformedRow";
    case Err::NonFiniteScore: return "NonFiniteScore";
    case Err::DuplicateId: return "DuplicateId";
    case Err::EmptyManifest: return "EmptyManifest";
    case Err::EmptyPool: return "EmptyPool";
    case Err::ImageTooSmall: return "ImageTooSmall";
    case Err::UnwritableDir: return "UnwritableDir";
    case Err::DecodeError: return "DecodeError";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::ConstantInput: return "ConstantInput";
    case Err::TooFewSamples: return "TooFewSamples";
    case Err::UnknownKey: return "UnknownKey";
    case Err::TypeMismatch: return "TypeMismatch";
    case Err::MissingCheckpoint: return "MissingCheckpoint";
    case Err::BadCheckpoint: return "BadCheckpoint";
    case Err::NonFiniteLoss: return "NonFiniteLoss";
    case Err::UntrainedTeacher: return "UntrainedTeacher";
    case Err::InvalidArgument: return "InvalidArgument";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

int exit_code_for(Err code) {
  switch (code) {
    case Err::UnknownKey:
      return 2;
    case Err::TypeMismatch:
      return 3;
    case Err::MissingCheckpoint:
    case Err::BadCheckpoint:
      return 4;
    case Err::MissingFile:
    case Err::MalformedRow:
    case Err::NonFiniteScore:
    case Err::DuplicateId:
    case Err::EmptyManifest:
    case Err::EmptyPool:
    case Err::ImageTooSmall:
    case Err::UnwritableDir:
    case Err::DecodeError:
    case Err::ConstantInput:
    case Err::TooFewSamples:
      return 5;
    case Err::InvalidArgument:
      return 6;
    default:
      return 1;
  }
}

}  // namespace rkiqt
