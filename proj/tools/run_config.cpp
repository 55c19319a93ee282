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


#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace latflow::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

template <class T>
T parse_one(const std::string& s, const std::string& what) {
  T v{};
  const auto* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("invalid " + what + " entry '" + s + "'");
  }
  return v;
}

}  // namespace

std::uint64_t RunConfig::require_seed(const std::string& command) const {
  if (!seed) throw ConfigError(command + " is randomized and needs --seed");
  return *seed;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::vector<std::string> expand_config(
    std::vector<std::string> args, const std::vector<std::string>& subcommands,
    const std::function<KeyUse(const std::string& subcommand, const std::string& key)>& classify) {
  std::string path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw ConfigError("--config needs a file name");
      path = args[k + 1];
      args.erase(args.begin() + k, args.begin() + k + 2);
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + k);
      break;
    }
  }
  if (path.empty()) return args;
  std::size_t at = 0;
  std::string sub;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (std::find(subcommands.begin(), subcommands.end(), args[k]) != subcommands.end()) {
      at = k + 1;
      sub = args[k];
      break;
    }
  }
  std::vector<std::string> inserted;
  for (const auto& [key, value] : read_config_file(path)) {
    const KeyUse use = classify(sub, key);
    if (use == KeyUse::kUnknown) throw ConfigError(path + ": unknown key '" + key + "'");
    if (use == KeyUse::kSkip) continue;
    inserted.push_back("--" + key);
    inserted.push_back(value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), inserted.begin(), inserted.end());
  return args;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& s : split_commas(text)) out.push_back(parse_one<double>(s, what));
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (const auto& s : split_commas(text)) out.push_back(parse_one<int>(s, what));
  return out;
}

void write_report(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw ConfigError("write to '" + path + "' failed");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace latflow::cli
