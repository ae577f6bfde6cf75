// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "model.hpp"

namespace bdp {

/// Transposed intensity matrix A(t) of the truncated chain in compressed
/// sparse column form. Column c holds the outflow of state c: its diagonal
/// and at most 2d non-negative off-diagonal entries.
class GeneratorMatrix {
 public:
  GeneratorMatrix() = default;

  std::size_t dimension() const noexcept { return diagonal_.size(); }
  double time() const noexcept { return time_; }

  double diagonal(std::size_t c) const { return diagonal_[c]; }
  std::span<const std::size_t> off_diagonal_rows(std::size_t c) const;
  std::span<const double> off_diagonal_values(std::size_t c) const;

  double at(std::size_t row, std::size_t col) const;
  double column_sum(std::size_t c) const;
  /// Induced l1 norm: max over columns of the absolute column sum.
  double l1_operator_norm() const;

  /// y = A x.
  void multiply(std::span<const double> x, std::span<double> y) const;

  /// Dense copy, column-major (entry (r, c) at c * n + r).
  std::vector<double> dense_column_major() const;

 private:
  friend GeneratorMatrix assemble_generator(const ModelSpec&,
                                            const TruncatedSpace&, double);

  double time_ = 0.0;
  std::vector<double> diagonal_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> rows_;
  std::vector<double> values_;
};

/// Assembles A(t) under reflecting truncation: births out of a state whose
/// coordinate sits at its cap are suppressed, so every column sums to zero.
GeneratorMatrix assemble_generator(const ModelSpec& model,
                                   const TruncatedSpace& space, double t);

/// p(t) over the enumerated truncated space.
struct ProbabilityVector {
  std::vector<double> values;
  double time = 0.0;

  static ProbabilityVector point_mass(const TruncatedSpace& space,
                                      const MultiIndex& m, double time = 0.0);

  /// Throws InvalidArgument unless entries are finite, >= -1e-12 and sum to
  /// 1 within 1e-8.
  void validate() const;
};

enum class TailPolicy {
  /// Throw TruncationError when tail mass exceeds the threshold.
  error,
  /// End the trajectory at the last grid point below the threshold.
  stop,
};

struct IntegrateOptions {
  std::optional<double> tail_threshold;
  TailPolicy tail_policy = TailPolicy::error;
  /// Internal step h <= step_factor / (2d(L+M)).
  double step_factor = 0.1;
  /// Pre-renormalization drift of the total mass that aborts integration.
  double drift_limit = 1e-6;
};

struct Trajectory {
  std::vector<double> grid;
  std::vector<ProbabilityVector> snapshots;
  std::vector<double> tail_mass;

  /// Set when TailPolicy::stop ended the run early: the first grid time whose
  /// tail mass exceeded the threshold.
  std::optional<double> stopped_at;
  /// Smallest entry seen before clipping across all internal steps.
  double min_entry_pre_clip = 0.0;
  /// Largest |sum(p) - 1| seen before renormalization.
  double max_drift = 0.0;
  std::size_t internal_steps = 0;
};

/// Integrates dp/dt = A(t) p with fixed-step classical RK4, re-assembling
/// A(t) at every stage time. After each internal step negative entries are
/// clipped to zero and p is rescaled to unit mass.
Trajectory integrate(const ModelSpec& model, const TruncatedSpace& space,
                     const ProbabilityVector& p0, std::span<const double> grid,
                     const IntegrateOptions& options = {});

/// Uniform grid t0, t0 + step, ..., ending exactly at t0 + horizon.
std::vector<double> make_grid(double horizon, double step, double t0 = 0.0);

double l1_norm(std::span<const double> v);
double weighted_l1_norm(std::span<const double> v,
                        std::span<const double> weights);

/// Probability of the states with at least one coordinate at its cap.
double tail_mass(const ProbabilityVector& p, const TruncatedSpace& space);

}  // namespace bdp
