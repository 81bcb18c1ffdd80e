// Copyright 2026 The cilab Authors
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

namespace cilab {

// Error hierarchy. Each kind maps onto one failure class of the library so
// callers (the grid runner, the CLI) can decide what is fatal.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes or settings that cannot work together (dimension mismatch, bad field).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates a precondition (label out of range, empty set).
class InputError : public Error {
 public:
  using Error::Error;
};

// NaN or infinity encountered during training or evaluation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; the message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cilab
