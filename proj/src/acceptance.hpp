// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "config.hpp"
#include "kolmogorov.hpp"
#include "model.hpp"
#include "philox.hpp"

namespace bdp::acceptance {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Options {
  std::uint64_t seed = 1;
  std::uint64_t mc_paths = 100000;
  unsigned threads = 0;
};

/// A model bundled with its truncation and starting state.
struct BuiltinModel {
  std::string name;
  ModelSpec model;
  TruncatedSpace space;
  MultiIndex initial;
};

// Desk-scale reference models used by the acceptance checks.

/// d = 1, cap 1, lambda = mu = 1.
BuiltinModel two_state_model();
/// d = 3, caps (6,6,6), state- and time-dependent rates on every type.
BuiltinModel projection_model();
/// d = 2; type 1 has birth_lo = 4, death_hi = 1 (sigma = 0.5, alpha* = 1).
BuiltinModel null_ergodic_model();
/// d = 2; type 1 has l = L = 1, death_lo = M = 4 (beta = 2, alpha_* = 1).
BuiltinModel weak_ergodic_model();
/// d = 2, time-homogeneous, small caps for Monte Carlo comparison.
BuiltinModel mc_homogeneous_model();
/// d = 2, periodic rates, small caps for Monte Carlo comparison.
BuiltinModel mc_periodic_model();

/// Random model of dimension <= 3 and caps <= 6, bounds set to the exact
/// range of each rule. Time-independent kinds only when frozen is true; the
/// space size never exceeds max_size.
BuiltinModel random_model(PhiloxStream& rng, bool frozen, std::size_t max_size);

// One function per acceptance criterion.
CheckResult generator_conservation(const Options& options);
CheckResult ode_correctness(const Options& options);
CheckResult projection_consistency(const Options& options);
CheckResult two_sided_bounds(const Options& options);
CheckResult null_ergodic_decay(const Options& options);
CheckResult weak_ergodic_decay(const Options& options);
CheckResult oracle_agreement(const Options& options);

/// Module-level invariants: enumeration bijection, rate admissibility,
/// positivity, log-norm semigroup bound, marginal linearity, the reduction
/// identity, certificate closed forms, margin dominance and thread
/// invariance of the simulator.
std::vector<CheckResult> run_properties(const Options& options);

/// Criteria 1-7 followed by the module-level invariants.
std::vector<CheckResult> run_builtin(const Options& options);

/// Checks specific to a user model: conservation, bounds along the
/// trajectory, projection residuals, every applicable certificate and
/// Monte Carlo agreement.
std::vector<CheckResult> check_config(const ModelConfig& config,
                                      unsigned threads = 0);

/// One line per check: "CHECK <name> PASS|FAIL <detail>".
std::string format_report(const std::vector<CheckResult>& results);

// Building blocks shared with the CLI and tests.

struct BoundsScan {
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::string first_violation;
};

/// Counts effective rates outside the declared per-type bounds at every
/// snapshot (relative rounding allowance 1e-12).
BoundsScan scan_two_sided_bounds(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory);

/// Number of leading snapshots whose tail mass stays below the threshold.
std::size_t tail_window(const Trajectory& trajectory, double threshold);

struct NullDecayResult {
  DecayReport decay;
  double worst_tail_excess = 0.0;  // max over (t, n) of measured - bound
  double min_margin = 0.0;
  std::size_t window = 0;
};

NullDecayResult check_null_decay(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory,
                                 const NullErgodicCertificate& cert,
                                 int initial_level, double tail_threshold,
                                 double slack);

struct WeakDecayResult {
  std::vector<DecayReport> decays;
  double min_margin = 0.0;
};

WeakDecayResult check_weak_decay(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory,
                                 const WeakErgodicCertificate& cert,
                                 std::uint64_t seed, int n_starts,
                                 double slack);

}  // namespace bdp::acceptance
