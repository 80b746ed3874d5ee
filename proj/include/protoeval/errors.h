// Copyright 2026 The protoeval Authors
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

#ifndef PROTOEVAL_ERRORS_H_
#define PROTOEVAL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace protoeval {

// Root of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed TensorFile bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Manifest missing, unreadable, or not conforming to the schema.
class ManifestError : public Error {
 public:
  using Error::Error;
};

// A domain invariant or precondition was violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateSaliencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyMaskError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateOutputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateSeriesError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A requested suite cannot run at all (an entire artifact class is absent).
class SuiteError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace protoeval

#endif  // PROTOEVAL_ERRORS_H_
