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

// Run configuration for the command-line tool.
//
// Each subcommand has a flat list of fields addressed by JSON pointer (solver
// knobs live under "/solver"). The effective config is built as
//   defaults  <-  --config file  <-  command-line flags
// and a field whose default is null must be supplied by one of the two.

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace hibd_cli {

using nlohmann::json;

// Bad user input; reported with exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { kInt, kUInt64, kDouble, kString, kBool, kIntList, kDoubleList };

struct Field {
  std::string pointer;  // e.g. "/mu" or "/solver/cg_tol"
  Kind kind;
  json fallback;        // null marks a required field
  std::string flag;     // e.g. "--mu"; empty for file-only fields
  std::string help;
  bool flag_only_sets = false;  // bool flag storing `flag_value` when present
  bool flag_value = true;
};

// Keys that describe how to run, not what to compute; excluded from the hash.
inline const std::vector<std::string> kExecutionKeys = {"threads", "out", "verbose"};

struct Schema {
  std::string command;
  std::vector<Field> fields;
};

Schema schema_for(const std::string& command);

// Binds every field's flag plus --config and --dump-config onto `sub`.
class Binder {
 public:
  Binder(CLI::App* sub, Schema schema);

  // Builds and validates the effective configuration after CLI parsing.
  json resolve() const;
  bool dump_requested() const { return dump_; }

 private:
  struct Bound {
    const Field* field;
    std::string scalar;
    std::vector<std::string> list;
    bool set = false;
    CLI::Option* opt = nullptr;
  };

  Schema schema_;
  std::deque<Bound> bound_;
  std::string config_path_;
  bool dump_ = false;
};

// The config without execution keys (threads, out, verbose): everything that
// determines the numbers a command produces.
json run_config(const json& cfg);
// Canonical text of run_config, and its FNV-1a 64-bit hash as 16 hex digits.
std::string canonical(const json& cfg);
std::string config_hash(const json& cfg);

std::string read_file(const std::string& path);
// Writes to `path`, or stdout when it is empty or "-".
void write_output(const std::string& path, const std::string& text);

}  // namespace hibd_cli
