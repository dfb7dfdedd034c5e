// roomforge/errors.hpp

// Copyright 2026  The roomforge authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace roomforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A geometric configuration that cannot be simulated (e.g. source on mic).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario or room document.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad argument to a DSP routine (empty buffer, negative delay, ...).
class SignalError : public Error {
 public:
  using Error::Error;
};

/// A noise clip that cannot be used (silent, or a pool with no usable clip).
class UnusableClipError : public SignalError {
 public:
  using SignalError::SignalError;
};

class SampleRateMismatch : public SignalError {
 public:
  using SignalError::SignalError;
};

/// File system level failures.
class IoError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

}  // namespace roomforge
