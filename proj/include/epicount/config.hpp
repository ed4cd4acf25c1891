#pragma once

// Line-oriented experiment files:
//
//   # comment
//   version = 1
//   instance = subsets
//   grid = 1000, 10000, 1e5
//   seed = 20240229
//
// Unknown keys, repeated keys, a missing or different version, and a missing
// seed are all errors; diagnostics carry the line number.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "harness.hpp"

namespace epicount {

inline constexpr int kConfigVersion = 1;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_count(const std::string& v, std::size_t line, const std::string& key) {
  // Accepts plain integers and exact scientific forms such as 1e6.
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !(d >= 0) || d != std::floor(d) || d > 9.007199254740992e15)
    throw ConfigError("line " + std::to_string(line) + ": " + key + " expects a nonnegative integer, got '" + v + "'",
                      line);
  return static_cast<std::uint64_t>(d);
}

inline double parse_real(const std::string& v, std::size_t line, const std::string& key) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || !std::isfinite(d))
    throw ConfigError("line " + std::to_string(line) + ": " + key + " expects a real number, got '" + v + "'", line);
  return d;
}

}  // namespace detail

/// Parses a config from a stream. `base_dir` resolves relative table paths.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::optional<std::size_t> version_line;
  std::string raw;
  std::size_t line = 0;
  auto fail = [&](const std::string& msg) { throw ConfigError("line " + std::to_string(line) + ": " + msg, line); };

  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string val = detail::trim(text.substr(eq + 1));
    if (key.empty()) fail("missing key");
    if (val.empty()) fail("missing value for '" + key + "'");
    if (!seen.insert(key).second) fail("duplicate key '" + key + "'");

    auto count = [&] { return detail::parse_count(val, line, key); };
    auto small = [&] {
      const auto c = count();
      if (c > 1000000) fail(key + " is out of range");
      return static_cast<unsigned>(c);
    };

    if (key == "version") {
      if (val != std::to_string(kConfigVersion))
        fail("unsupported config version '" + val + "' (expected " + std::to_string(kConfigVersion) + ")");
      version_line = line;
    } else if (key == "name") {
      cfg.name = val;
    } else if (key == "instance") {
      cfg.instance = val;
    } else if (key == "measure") {
      if (val.starts_with("table:")) {
        std::filesystem::path p(val.substr(6));
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        cfg.measure = "table:" + p.string();
      } else {
        cfg.measure = val;
      }
    } else if (key == "ordering") {
      cfg.ordering = val;
    } else if (key == "grid") {
      std::stringstream ss(val);
      for (std::string item; std::getline(ss, item, ',');) {
        item = detail::trim(item);
        if (item.empty()) fail("empty grid entry");
        cfg.grid.push_back(detail::parse_count(item, line, key));
      }
    } else if (key == "trials") {
      cfg.trials = count();
    } else if (key == "seed") {
      cfg.seed = count();
    } else if (key == "k") {
      cfg.k = small();
    } else if (key == "gamma") {
      try {
        (void)GammaFamily::parse(val);
      } catch (const DomainError& e) {
        fail(e.what());
      }
      cfg.gamma = val;
    } else if (key == "threads") {
      cfg.threads = small();
    } else if (key == "horizon") {
      cfg.horizon = count();
    } else if (key == "truncation") {
      cfg.truncation = small();
    } else if (key == "corank_sampler") {
      cfg.corank_sampler = val;
    } else if (key == "liminf_floor") {
      cfg.liminf_floor = detail::parse_real(val, line, key);
    } else if (key == "growth_slack") {
      cfg.growth_slack = detail::parse_real(val, line, key);
    } else if (key == "corollary_k") {
      cfg.corollary_k = small();
    } else if (key == "corollary_eps") {
      cfg.corollary_eps = detail::parse_real(val, line, key);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!version_line) throw ConfigError("missing 'version = " + std::to_string(kConfigVersion) + "' header", 0);
  if (!cfg.seed) throw ConfigError("missing required key 'seed' (no implicit seeding)", 0);
  try {
    cfg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what(), 0);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'", 0);
  return parse_config(in, path.parent_path());
}

}  // namespace epicount
