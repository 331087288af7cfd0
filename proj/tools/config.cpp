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
#include "config.hpp"

#include <cerrno>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "hibd/hibd.h"

namespace hibd_cli {

namespace {

std::vector<Field> solver_fields() {
  hibd_solver_config d;
  hibd_solver_config_default(&d);
  return {
      {"/solver/max_outer_iters", Kind::kInt, d.max_outer_iters, "--max-outer-iters", "HiHTP outer iteration cap"},
      {"/solver/outer_tol", Kind::kDouble, d.outer_tol, "--outer-tol", "stop when consecutive iterates differ by less"},
      {"/solver/cg_tol", Kind::kDouble, d.cg_tol, "--cg-tol", "inner CG relative residual tolerance"},
      {"/solver/cg_max_iters", Kind::kInt, d.cg_max_iters, "--cg-max-iters", "inner CG iteration cap"},
      {"/solver/final_ls_tol", Kind::kDouble, d.final_ls_tol, "--final-ls-tol", "final least-squares tolerance"},
      {"/solver/final_ls_max_iters", Kind::kInt, d.final_ls_max_iters, "--final-ls-max-iters",
       "final least-squares iteration cap"},
  };
}

std::vector<Field> common_fields() {
  return {
      {"/seed", Kind::kUInt64, 0, "--seed", "base seed"},
      {"/threads", Kind::kInt, 0, "--threads", "worker threads (0 = available parallelism)"},
      {"/out", Kind::kString, "", "--out", "output file (default stdout)"},
      {"/verbose", Kind::kBool, false, "--verbose,-v", "progress and diagnostics on stderr", true, true},
  };
}

void append(std::vector<Field>& dst, std::vector<Field> src) {
  for (auto& f : src) dst.push_back(std::move(f));
}

bool fits_kind(const json& v, Kind k) {
  switch (k) {
    case Kind::kInt:
      return v.is_number_integer() && v.get<std::int64_t>() >= std::numeric_limits<int>::min() &&
             v.get<std::int64_t>() <= std::numeric_limits<int>::max() &&
             !(v.is_number_unsigned() && v.get<std::uint64_t>() > std::numeric_limits<int>::max());
    case Kind::kUInt64:
      return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Kind::kDouble:
      return v.is_number();
    case Kind::kString:
      return v.is_string();
    case Kind::kBool:
      return v.is_boolean();
    case Kind::kIntList:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!fits_kind(e, Kind::kInt)) return false;
      return true;
    case Kind::kDoubleList:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number()) return false;
      return true;
  }
  return false;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kInt: return "an integer";
    case Kind::kUInt64: return "a non-negative integer";
    case Kind::kDouble: return "a number";
    case Kind::kString: return "a string";
    case Kind::kBool: return "a boolean";
    case Kind::kIntList: return "a list of integers";
    case Kind::kDoubleList: return "a list of numbers";
  }
  return "?";
}

json parse_scalar(const std::string& text, Kind k, const std::string& flag) {
  auto bad = [&] { return ConfigError(flag + ": expected " + kind_name(k) + ", got '" + text + "'"); };
  try {
    std::size_t used = 0;
    switch (k) {
      case Kind::kInt: {
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
          throw bad();
        return static_cast<int>(v);
      }
      case Kind::kUInt64: {
        if (!text.empty() && text.front() == '-') throw bad();
        const unsigned long long v = std::stoull(text, &used, 0);
        if (used != text.size()) throw bad();
        return static_cast<std::uint64_t>(v);
      }
      case Kind::kDouble: {
        const double v = std::stod(text, &used);
        if (used != text.size()) throw bad();
        return v;
      }
      case Kind::kString:
        return text;
      default:
        throw bad();
    }
  } catch (const std::invalid_argument&) {
    throw bad();
  } catch (const std::out_of_range&) {
    throw bad();
  }
}

// Every key of `given` must exist in `known`; nested objects are checked
// recursively.
void reject_unknown(const json& given, const json& known, const std::string& where) {
  if (!given.is_object()) throw ConfigError("config " + (where.empty() ? "root" : where) + " must be an object");
  for (const auto& [key, value] : given.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + where + "/" + key + "'");
    if (known.at(key).is_object()) reject_unknown(value, known.at(key), where + "/" + key);
  }
}

}  // namespace

Schema schema_for(const std::string& command) {
  Schema s{command, {}};
  append(s.fields, common_fields());
  const json req;  // required
  if (command == "deconvolve") {
    append(s.fields, {
                         {"/mu", Kind::kInt, req, "--mu", "filter length (blocks)"},
                         {"/n", Kind::kInt, req, "--n", "message length"},
                         {"/m", Kind::kInt, 0, "--m", "inner dimension of Q = U A (0 = n)"},
                         {"/s", Kind::kInt, req, "--s", "filter sparsity"},
                         {"/sigma", Kind::kInt, req, "--sigma", "message sparsity"},
                         {"/u_kind", Kind::kString, "gaussian", "--u-kind", "gaussian | rademacher"},
                         {"/a_kind", Kind::kString, "identity", "--a-kind", "identity | gaussian"},
                     });
    append(s.fields, solver_fields());
  } else if (command == "demix") {
    append(s.fields, {
                         {"/users", Kind::kInt, req, "--users", "number of users N"},
                         {"/active", Kind::kInt, req, "--active", "active users S"},
                         {"/rows", Kind::kInt, req, "--rows", "mixing rows M"},
                         {"/mu", Kind::kInt, req, "--mu", "filter length (blocks)"},
                         {"/n", Kind::kInt, req, "--n", "message length"},
                         {"/s", Kind::kInt, req, "--s", "filter sparsity"},
                         {"/sigma", Kind::kInt, req, "--sigma", "message sparsity"},
                         {"/u_kind", Kind::kString, "gaussian", "--u-kind", "gaussian | rademacher"},
                     });
    append(s.fields, solver_fields());
  } else if (command == "phase") {
    append(s.fields, {
                         {"/n_values", Kind::kIntList, req, "--n-values", "message lengths"},
                         {"/sigma_values", Kind::kIntList, req, "--sigma-values", "message sparsities"},
                         {"/s_values", Kind::kIntList, req, "--s-values", "filter sparsities"},
                         {"/mu_values", Kind::kIntList, req, "--mu-values", "filter lengths"},
                         {"/trials", Kind::kInt, 100, "--trials", "trials per grid point"},
                         {"/u_kind", Kind::kString, "gaussian", "--u-kind", "gaussian | rademacher"},
                         {"/timing", Kind::kBool, true, "--no-timing", "write mean_ms as 0 (bit-reproducible CSV)",
                          true, false},
                     });
    append(s.fields, solver_fields());
  } else if (command == "fit") {
    append(s.fields, {
                         {"/table", Kind::kString, req, "--table", "phase table CSV"},
                         {"/a_values", Kind::kDoubleList, json::array({1.0, 2.0}), "--a", "exponents a to compare"},
                         {"/c_grid", Kind::kDoubleList, json::array(), "--c-grid",
                          "candidate C_a values (default: 40 log-spaced in [0.1, 100])"},
                         {"/plot_prefix", Kind::kString, "", "--plot-prefix",
                          "write <prefix>_a<a>.csv with (lambda, outcome) rows"},
                     });
  } else if (command == "ripcheck") {
    append(s.fields, {
                         {"/mu", Kind::kInt, req, "--mu", "filter length (blocks)"},
                         {"/n", Kind::kInt, req, "--n", "message length"},
                         {"/m", Kind::kInt, 0, "--m", "inner dimension of Q = U A (0 = n)"},
                         {"/s", Kind::kInt, req, "--s", "block sparsity"},
                         {"/sigma", Kind::kInt, req, "--sigma", "in-block sparsity"},
                         {"/u_kind", Kind::kString, "gaussian", "--u-kind", "gaussian | rademacher"},
                         {"/a_kind", Kind::kString, "identity", "--a-kind", "identity | gaussian"},
                         {"/lifting", Kind::kString, "convolution", "--lifting", "convolution | shift_sum"},
                         {"/trials", Kind::kInt, 1000, "--trials", "Monte Carlo draws"},
                         {"/exact", Kind::kBool, false, "--exact", "also enumerate every support", true, true},
                         {"/factorization", Kind::kBool, false, "--factorization",
                          "also check the factorization inequality", true, true},
                         {"/guard", Kind::kDouble, 1e8, "--guard", "work limit for exact enumeration"},
                     });
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  return s;
}

Binder::Binder(CLI::App* sub, Schema schema) : schema_(std::move(schema)) {
  for (const Field& f : schema_.fields) {
    if (f.flag.empty()) continue;
    Bound& b = bound_.emplace_back();
    b.field = &f;
    if (f.kind == Kind::kBool) {
      b.opt = sub->add_flag(f.flag, b.set, f.help);
    } else if (f.kind == Kind::kIntList || f.kind == Kind::kDoubleList) {
      b.opt = sub->add_option(f.flag, b.list, f.help)->delimiter(',');
    } else {
      b.opt = sub->add_option(f.flag, b.scalar, f.help);
    }
  }
  sub->add_option("--config", config_path_, "JSON config file; flags override its values");
  sub->add_flag("--dump-config", dump_, "print the effective config as JSON and exit");
}

json Binder::resolve() const {
  json cfg = json::object();
  for (const Field& f : schema_.fields) cfg[json::json_pointer(f.pointer)] = f.fallback;
  cfg["command"] = schema_.command;

  if (!config_path_.empty()) {
    json file;
    try {
      file = json::parse(read_file(config_path_));
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + config_path_ + ": " + e.what());
    }
    reject_unknown(file, cfg, "");
    if (file.contains("command") && file["command"] != schema_.command)
      throw ConfigError("config is for command '" + file["command"].dump() + "', not '" + schema_.command + "'");
    for (const Field& f : schema_.fields) {
      const json::json_pointer ptr(f.pointer);
      if (!file.contains(ptr)) continue;
      const json& v = file.at(ptr);
      if (!fits_kind(v, f.kind)) throw ConfigError("config key '" + f.pointer + "' must be " + kind_name(f.kind));
      cfg[ptr] = v;
    }
  }

  for (const Bound& b : bound_) {
    if (b.opt->count() == 0) continue;
    const Field& f = *b.field;
    const json::json_pointer ptr(f.pointer);
    const std::string flag = f.flag.substr(0, f.flag.find(','));
    switch (f.kind) {
      case Kind::kBool:
        cfg[ptr] = f.flag_value;
        break;
      case Kind::kIntList:
      case Kind::kDoubleList: {
        json arr = json::array();
        for (const auto& item : b.list)
          arr.push_back(parse_scalar(item, f.kind == Kind::kIntList ? Kind::kInt : Kind::kDouble, flag));
        cfg[ptr] = arr;
        break;
      }
      default:
        cfg[ptr] = parse_scalar(b.scalar, f.kind, flag);
    }
  }

  for (const Field& f : schema_.fields) {
    if (cfg.at(json::json_pointer(f.pointer)).is_null()) {
      const std::string flag = f.flag.substr(0, f.flag.find(','));
      throw ConfigError("missing required setting " + flag + " (config key '" + f.pointer.substr(1) + "')");
    }
  }
  if (cfg.at("/threads"_json_pointer).get<int>() < 0) throw ConfigError("--threads must be >= 0");
  return cfg;
}

json run_config(const json& cfg) {
  json c = cfg;
  for (const auto& key : kExecutionKeys) c.erase(key);
  return c;
}

std::string canonical(const json& cfg) { return run_config(cfg).dump(); }  // nlohmann objects are key-sorted

std::string config_hash(const json& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a offset basis
  for (unsigned char ch : canonical(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("error writing " + path);
}

}  // namespace hibd_cli
