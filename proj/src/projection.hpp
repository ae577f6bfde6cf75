// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kolmogorov.hpp"
#include "model.hpp"

namespace bdp {

/// Which one-dimensional process to look at: X_j for a single type (0-based
/// index) or the total particle count Z = |X|.
class Coordinate {
 public:
  static Coordinate type(std::size_t j) { return Coordinate(false, j); }
  static Coordinate total() { return Coordinate(true, 0); }

  bool is_total() const noexcept { return total_; }
  std::size_t index() const noexcept { return index_; }

  /// 1-based type number, or "total".
  std::string label() const;

  /// Largest level K of the projection on the given space.
  int max_level(const TruncatedSpace& space) const;
  /// Level of state m under the projection (m_j or |m|).
  int level(const MultiIndex& m) const;

  friend bool operator==(const Coordinate&, const Coordinate&) = default;

 private:
  Coordinate(bool total, std::size_t index) : total_(total), index_(index) {}

  bool total_ = false;
  std::size_t index_ = 0;
};

struct Marginal {
  Coordinate coordinate = Coordinate::type(0);
  std::vector<double> values;
  double time = 0.0;
};

/// x_k = sum of p_m over the level set {m : level(m) = k}.
Marginal marginal(const ProbabilityVector& p, const TruncatedSpace& space,
                  Coordinate coordinate);

/// Marginal probabilities below this are treated as zero when forming the
/// conditional averages.
inline constexpr double kZeroMarginal = 1e-14;

/// Probability-weighted conditional birth and death intensities of the
/// projected process at one time.
///
/// For a single type j the rates are the raw lambda_{j,m}, mu_{j,m}, so every
/// defined level lies within the declared bounds of type j; suppression of
/// births at the cap happens in assemble_projected. For the total count the
/// per-state rates are the truncated ones (births out of a capped coordinate
/// removed), because the level sets of |m| cut across the box boundary.
///
/// Levels with x_k <= kZeroMarginal are flagged undefined and carry the lower
/// bounds as convention values; they multiply x_k = 0 in the dynamics.
struct EffectiveRates {
  Coordinate coordinate = Coordinate::type(0);
  std::vector<double> birth;
  std::vector<double> death;
  std::vector<std::uint8_t> defined;
  double time = 0.0;

  std::size_t max_level() const noexcept { return birth.size() - 1; }
};

EffectiveRates effective_rates(const ProbabilityVector& p,
                               const ModelSpec& model,
                               const TruncatedSpace& space,
                               Coordinate coordinate);

/// Bounds on the projected rates implied by the per-type bounds. For a
/// single type these are its declared bounds; for the total count they are
/// [sum l_j, sum L_j] x [min death_lo_j, sum M_j] (ignoring truncation).
RateBounds projected_bounds(const ModelSpec& model, Coordinate coordinate);

/// Three-diagonal transposed intensity matrix of the projected process.
/// Entry (k+1, k) = lower[k] (birth), (k, k+1) = upper[k] (death),
/// (k, k) = main[k].
struct TridiagonalSystem {
  std::vector<double> lower;
  std::vector<double> main;
  std::vector<double> upper;
  double time = 0.0;

  std::size_t size() const noexcept { return main.size(); }
  double column_sum(std::size_t k) const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> dense_column_major() const;
};

/// Builds the system from effective rates; birth out of the top level K is
/// suppressed to match the reflecting truncation of the full chain.
TridiagonalSystem assemble_projected(const EffectiveRates& rates);

/// dz/dt = B z + f for z = (x_1, ..., x_K) after eliminating
/// x_0 = 1 - sum_{i>=1} x_i. B has the tridiagonal pattern of the lower-right
/// block of the projected matrix, with lambda_0 subtracted from every entry
/// of its first row.
struct ReducedSystem {
  std::vector<double> lower;   // (i+1, i), size K-1
  std::vector<double> main;    // (i, i), size K
  std::vector<double> upper;   // (i, i+1), size K-1
  double first_row_shift = 0.0;
  std::vector<double> forcing;
  double time = 0.0;

  std::size_t size() const noexcept { return main.size(); }
  void multiply(std::span<const double> w, std::span<double> y) const;
  /// Row-major K x K.
  std::vector<double> dense_row_major() const;
  /// Induced l1 norm of B.
  double l1_operator_norm() const;
};

ReducedSystem reduce(const TridiagonalSystem& system,
                     const EffectiveRates& rates);

struct ResidualPoint {
  double time = 0.0;
  double residual = 0.0;
};

/// At every interior grid point: max_k |(x_k(t+) - x_k(t-)) / (t+ - t-) -
/// (A~ x)_k(t)| with A~ rebuilt from the effective rates at t. Needs a
/// trajectory with at least three grid points.
std::vector<ResidualPoint> projection_consistency_residual(
    const Trajectory& trajectory, const ModelSpec& model,
    const TruncatedSpace& space, Coordinate coordinate);

struct ProjectedSnapshot {
  Marginal marginal;
  EffectiveRates rates;
};

std::vector<ProjectedSnapshot> project_trajectory(const Trajectory& trajectory,
                                                  const ModelSpec& model,
                                                  const TruncatedSpace& space,
                                                  Coordinate coordinate);

}  // namespace bdp
