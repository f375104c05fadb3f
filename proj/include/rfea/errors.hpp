// Copyright 2026 The RFEA-Sim Authors
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

namespace rfea {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the physical domain of a model relation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, non-convergent iterations.
class NumericError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The integrator left the admissible state space or could not advance.
class IntegrationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed or inconsistent input data (CSV files, measurements).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration: unknown keys, violated invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfea
