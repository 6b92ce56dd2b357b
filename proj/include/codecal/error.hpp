/*
 * Copyright 2026 The codecal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CODECAL_ERROR_HPP_
#define CODECAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace codecal {

// Base of every error raised by the library. The CLI maps the three
// subclasses onto distinct exit statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, unknown method names, inconsistent configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Missing files, unwritable outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input that violates a schema or a precondition of an algorithm.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace codecal

#endif  // CODECAL_ERROR_HPP_
