// Copyright 2026 The rewardprop Authors
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

#ifndef REWARDPROP_ERROR_HPP_
#define REWARDPROP_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rewardprop {

enum class ErrorCode {
  kInvalidArgument,
  kSchemaMismatch,
  kNonFiniteValue,
  kEmptyDataset,
  kMalformedHeader,
  kIoFailure,
  kSliceWithoutLabels,
  kLengthMismatch,
  kDegenerateSlice,
  kTooFewLabels,
  kDivergenceDetected,
  kNoLabeledNodes,
  kNoUnlabeledNodes,
  kNotContractive,
  kMaxItersExceeded,
  kSingularSystem,
  kInfeasibleSpec,
  kEmpty,
  kInsufficientFactors,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kSliceWithoutLabels: return "SliceWithoutLabels";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDegenerateSlice: return "DegenerateSlice";
    case ErrorCode::kTooFewLabels: return "TooFewLabels";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kNoLabeledNodes: return "NoLabeledNodes";
    case ErrorCode::kNoUnlabeledNodes: return "NoUnlabeledNodes";
    case ErrorCode::kNotContractive: return "NotContractive";
    case ErrorCode::kMaxItersExceeded: return "MaxItersExceeded";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kEmpty: return "Empty";
    case ErrorCode::kInsufficientFactors: return "InsufficientFactors";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 protected:
  struct Verbatim {};
  Error(ErrorCode code, const std::string& what, Verbatim)
      : std::runtime_error(what), code_(code) {}

 private:
  ErrorCode code_;
};

/// Error raised while processing one slice of a dataset; keeps the slice
/// index so callers can report where a pipeline failed.
class SliceError : public Error {
 public:
  SliceError(std::size_t slice_index, const Error& inner)
      : Error(inner.code(),
              "slice " + std::to_string(slice_index) + ": " + inner.what(),
              Verbatim{}),
        slice_index_(slice_index) {}

  std::size_t slice_index() const noexcept { return slice_index_; }

 private:
  std::size_t slice_index_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) Fail(code, message);
}

}  // namespace rewardprop

#endif  // REWARDPROP_ERROR_HPP_
