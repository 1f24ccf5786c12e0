// Copyright 2026 The privfed Authors
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

#ifndef PRIVFED_ERRORS_H_
#define PRIVFED_ERRORS_H_

#include <stdexcept>
#include <string>

namespace privfed {

// Base class for every error raised by the library. The CLI maps
// validation-type errors to exit code 1 and the rest to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const { return false; }
};

// Invalid dimensions, inconsistent layouts, bad configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
  bool is_validation() const override { return true; }
};

// Malformed data handed to an operation (non-finite values, empty batches).
class InputError : public Error {
 public:
  using Error::Error;
  bool is_validation() const override { return true; }
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
  bool is_validation() const override { return true; }
};

// Secure-aggregation protocol violations (missing pair seed, missing client).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Noise calibration could not reach the requested privacy target.
class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace privfed

#endif  // PRIVFED_ERRORS_H_
