// Copyright 2026 The freqbias Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace freqbias {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or matrix shapes that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its documented domain (negative budget, label out of range...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but too degenerate to estimate anything from.
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A caller-side precondition on the model/data state does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A filtering stage left nothing to work on.
class EmptySetError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_ = 0;
};

class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class LengthMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace freqbias
