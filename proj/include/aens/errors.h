// Copyright 2026 The aens Authors. All Rights Reserved.
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

#ifndef AENS_ERRORS_H_
#define AENS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace aens {

// Root of every error raised by the library. `user_error()` separates bad
// input or configuration (CLI exit code 2) from numeric/runtime failures
// (exit code 3).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual bool user_error() const { return true; }
};

#define AENS_DEFINE_ERROR(Name, Base)                      \
  class Name : public Base {                               \
   public:                                                 \
    explicit Name(const std::string& what) : Base(what) {} \
  };

AENS_DEFINE_ERROR(ShapeError, Error)
AENS_DEFINE_ERROR(ConfigError, Error)
AENS_DEFINE_ERROR(IoError, Error)
AENS_DEFINE_ERROR(ParseError, Error)
AENS_DEFINE_ERROR(IngestError, Error)
AENS_DEFINE_ERROR(ManifestError, Error)
AENS_DEFINE_ERROR(MissingBboxError, Error)
AENS_DEFINE_ERROR(CorruptCheckpointError, Error)
AENS_DEFINE_ERROR(UnsupportedVersionError, CorruptCheckpointError)
AENS_DEFINE_ERROR(TransferError, Error)
AENS_DEFINE_ERROR(AlignmentError, Error)
AENS_DEFINE_ERROR(SpecError, Error)

#undef AENS_DEFINE_ERROR

// Non-finite values reached during computation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
  bool user_error() const override { return false; }
};

}  // namespace aens

#endif  // AENS_ERRORS_H_
