// vqanon/base.h

// Copyright 2026  The vqanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VQANON_BASE_H_
#define VQANON_BASE_H_

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vqanon {

typedef float BaseFloat;

/// All dense numeric data is row-major so that a block of consecutive rows
/// (one time step of a batch, one frame of a sequence) is contiguous.
using Matrix =
    Eigen::Matrix<BaseFloat, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<BaseFloat, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<BaseFloat, 1, Eigen::Dynamic>;
using Array =
    Eigen::Array<BaseFloat, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Array widths or lengths that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input too short for the requested analysis.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// A configuration or specification field failed validation.  `field()`
/// names the offending key.
class ValidationError : public Error {
 public:
  ValidationError(const std::string &field, const std::string &what)
      : Error(field + ": " + what), field_(field) {}
  const std::string &field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked on an object in the wrong lifecycle state
/// (e.g. generating from a vocoder that was never trained or loaded).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Lookup of a speaker that is not in the enrolled set.
class EnrollmentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data set content that cannot support the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Corrupt, truncated or mismatched persisted state.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

namespace internal {
[[noreturn]] void AssertFailure(const char *expr, const char *file, int line);
}  // namespace internal

}  // namespace vqanon

#define VQ_ASSERT(cond)                                                \
  do {                                                                 \
    if (!(cond)) ::vqanon::internal::AssertFailure(#cond, __FILE__, __LINE__); \
  } while (0)

#endif  // VQANON_BASE_H_
