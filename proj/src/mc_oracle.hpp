// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "model.hpp"
#include "projection.hpp"

namespace bdp {

struct SimConfig {
  MultiIndex initial;
  double horizon = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<double> sample_times;
  /// 0 picks std::thread::hardware_concurrency(). Results do not depend on it.
  unsigned threads = 0;
};

/// Path-averaged level indicators for one projection.
struct EmpiricalMarginal {
  Coordinate coordinate = Coordinate::type(0);
  /// estimate[s][k] at sample_times[s].
  std::vector<std::vector<double>> estimate;
  std::vector<std::vector<double>> standard_error;
};

struct EmpiricalMarginals {
  std::vector<double> sample_times;
  std::uint64_t n_paths = 0;
  std::uint64_t seed = 0;
  /// One entry per type in order, then the total count.
  std::vector<EmpiricalMarginal> marginals;
};

/// Exact simulation of the truncated chain by thinning a Poisson clock of
/// rate d(L+M). At each candidate time a uniform draw on [0, d(L+M)) selects
/// one of the 2d birth/death channels by their current rates, or a rejection.
/// Births out of a capped coordinate are rejected. Path p uses the Philox
/// stream (seed, p), so output is bit-identical for any thread count.
EmpiricalMarginals simulate_paths(const ModelSpec& model,
                                  const TruncatedSpace& space,
                                  const SimConfig& config);

/// 0.5 * sum_k |a_k - b_k|.
double total_variation(const std::vector<double>& a,
                       const std::vector<double>& b);

}  // namespace bdp
