// Copyright 2026 The aetsep Authors.
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

#ifndef AETSEP_ERROR_H_
#define AETSEP_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace aetsep {

enum class ErrorCode {
  kUnsupportedFormat,
  kCorruptFile,
  kIoError,
  kSilentSignal,
  kSignalTooShort,
  kShapeError,
  kNotScalar,
  kUnsupportedOp,
  kDegenerateScale,
  kNoData,
  kNumericalDivergence,
  kIncompatibleCheckpoint,
  kConfigError,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported with this exception; `code()` identifies
// the failure class so callers (the CLI in particular) can map it to an exit
// status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSilentSignal: return "SilentSignal";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kNotScalar: return "NotScalar";
    case ErrorCode::kUnsupportedOp: return "UnsupportedOp";
    case ErrorCode::kDegenerateScale: return "DegenerateScale";
    case ErrorCode::kNoData: return "NoData";
    case ErrorCode::kNumericalDivergence: return "NumericalDivergence";
    case ErrorCode::kIncompatibleCheckpoint: return "IncompatibleCheckpoint";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace aetsep

#endif  // AETSEP_ERROR_H_
