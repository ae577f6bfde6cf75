// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace bdp {

/// Run-level defaults; every value can be overridden from the config file
/// and most from the command line.
struct RunSettings {
  double horizon = 10.0;
  double grid_step = 0.01;
  double tail_threshold = 1e-3;
  double slack = 1e-6;
  std::uint64_t seed = 1;
  std::uint64_t paths = 100000;
  /// Monte Carlo sample times; empty means 11 evenly spaced points on
  /// [0, horizon].
  std::vector<double> sample_times;

  std::vector<double> effective_sample_times() const;
};

struct ModelConfig {
  std::string source;
  ModelSpec model;
  TruncatedSpace space;
  MultiIndex initial;
  RunSettings settings;
};

/// Parses the YAML model description. Errors are ConfigError with
/// "<source>:<line>: <field>: <message>".
ModelConfig parse_config(const std::string& text,
                         const std::string& source = "<string>");

/// Reads and parses a config file. A missing or unreadable file is a
/// ConfigError naming the path.
ModelConfig load_config(const std::string& path);

}  // namespace bdp
