// Copyright 2026 The latflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Run configuration shared by the latflow subcommands, the key=value config
// file and small parsing helpers.

#ifndef LATFLOW_TOOLS_RUN_CONFIG_HPP_
#define LATFLOW_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latflow::cli {

inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBudget = 3;

// Raised for configuration and validation problems; maps to kExitConfig.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unset optionals take a per-command default.
struct RunConfig {
  std::optional<int> d;
  std::optional<double> lambda;
  std::optional<double> t;
  std::optional<double> epsilon;
  std::optional<int> N;
  std::optional<double> delta;
  std::optional<double> h;
  std::optional<std::uint64_t> seed;
  std::optional<int> resolution;
  int thetaGridRes = 64;
  std::string outputPath;  // empty or "-" writes the report to stdout
  std::string format = "json";
  std::string calibration;  // path of a calibrate report

  bool csv() const { return format == "csv"; }
  // Throws ConfigError when a randomized command runs without a seed.
  std::uint64_t require_seed(const std::string& command) const;
};

// Reads key=value lines ('#' starts a comment). Throws ConfigError.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

// How a config key relates to the subcommand being run.
enum class KeyUse { kUse, kSkip, kUnknown };

// Removes --config FILE (or --config=FILE) from args and inserts the file
// entries as --key value right after the subcommand token, so flags given
// on the command line come later and win. Keys the subcommand does not take
// are skipped; keys no subcommand takes are a ConfigError.
std::vector<std::string> expand_config(
    std::vector<std::string> args, const std::vector<std::string>& subcommands,
    const std::function<KeyUse(const std::string& subcommand, const std::string& key)>& classify);

// Comma-separated plain floats / integers. Throw ConfigError.
std::vector<double> parse_doubles(const std::string& text, const std::string& what);
std::vector<int> parse_ints(const std::string& text, const std::string& what);

// Writes text to path, or to stdout when path is empty or "-".
void write_report(const std::string& path, const std::string& text);

// %.12g.
std::string fmt(double v);

}  // namespace latflow::cli

#endif  // LATFLOW_TOOLS_RUN_CONFIG_HPP_
