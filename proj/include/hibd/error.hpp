/*
 * Copyright 2026 The hibd Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace hibd {

// Base of every exception thrown by the library. The C API maps each
// subclass onto one hibd_status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A brute-force routine refused to run because its enumeration or dense
// allocation would exceed the configured guard.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

// NaN or Inf showed up inside an iterative method.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hibd
