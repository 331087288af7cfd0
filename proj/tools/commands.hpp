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

#include "config.hpp"
#include "hibd/hibd.h"

namespace hibd_cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRecoveryFailure = 2;
inline constexpr int kExitNumeric = 3;

// A failing library call.
class ApiError : public std::runtime_error {
 public:
  ApiError(hibd_status status, const std::string& msg);
  hibd_status status() const { return status_; }
  int exit_code() const;

 private:
  hibd_status status_;
};

// Each takes a resolved config and returns the process exit code.
int cmd_deconvolve(const json& cfg);
int cmd_demix(const json& cfg);
int cmd_phase(const json& cfg);
int cmd_fit(const json& cfg);
int cmd_ripcheck(const json& cfg);

}  // namespace hibd_cli
