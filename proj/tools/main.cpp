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
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "commands.hpp"
#include "config.hpp"

namespace {

using hibd_cli::json;

struct Command {
  const char* name;
  const char* help;
  int (*run)(const json&);
};

constexpr Command kCommands[] = {
    {"deconvolve", "recover a planted sparse filter/message pair from its convolution", hibd_cli::cmd_deconvolve},
    {"demix", "recover several users from a mixed superposition of convolutions", hibd_cli::cmd_demix},
    {"phase", "estimate recovery probabilities over a parameter grid (CSV)", hibd_cli::cmd_phase},
    {"fit", "fit the logistic lambda_a scaling model to a phase table", hibd_cli::cmd_fit},
    {"ripcheck", "estimate restricted isometry constants of a lifted operator", hibd_cli::cmd_ripcheck},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hibd: sparse blind deconvolution and demixing by hierarchical thresholding"};
  app.set_version_flag("--version", std::string(hibd_version()));
  app.require_subcommand(1);

  std::map<std::string, std::unique_ptr<hibd_cli::Binder>> binders;
  for (const Command& c : kCommands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    binders.emplace(c.name, std::make_unique<hibd_cli::Binder>(sub, hibd_cli::schema_for(c.name)));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hibd_cli::kExitOk : hibd_cli::kExitUsage;
  }

  for (const Command& c : kCommands) {
    if (!app.got_subcommand(c.name)) continue;
    const hibd_cli::Binder& binder = *binders.at(c.name);
    try {
      const json cfg = binder.resolve();
      if (binder.dump_requested()) {
        std::cout << cfg.dump(2) << "\n";
        return hibd_cli::kExitOk;
      }
      return c.run(cfg);
    } catch (const hibd_cli::ConfigError& e) {
      std::cerr << "hibd " << c.name << ": " << e.what() << "\n";
      return hibd_cli::kExitUsage;
    } catch (const hibd_cli::ApiError& e) {
      std::cerr << "hibd " << c.name << ": " << e.what() << "\n";
      return e.exit_code();
    } catch (const json::exception& e) {
      std::cerr << "hibd " << c.name << ": bad config value: " << e.what() << "\n";
      return hibd_cli::kExitUsage;
    } catch (const std::exception& e) {
      std::cerr << "hibd " << c.name << ": " << e.what() << "\n";
      return hibd_cli::kExitNumeric;
    }
  }
  return hibd_cli::kExitUsage;
}
