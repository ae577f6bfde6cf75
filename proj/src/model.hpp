// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bdp {

/// A state m = (m_1, ..., m_d): particle counts per type.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> coords);
  MultiIndex(std::initializer_list<int> coords);

  std::size_t size() const noexcept { return coords_.size(); }
  int operator[](std::size_t j) const { return coords_[j]; }
  std::span<const int> coords() const noexcept { return coords_; }

  /// |m| = sum of all coordinates.
  int total() const noexcept;

  /// m + delta * e_j. Does not check the result for negativity.
  MultiIndex shifted(std::size_t j, int delta) const;

  std::string to_string() const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> coords_;
};

/// Declared two-sided bounds on the rates of one particle type:
///   birth_lo <= lambda_{j,m}(t) <= birth_hi
///   death_lo <= mu_{j,m}(t)     <= death_hi   (for m_j > 0)
/// The death lower bound is always called death_lo to keep it apart from the
/// state coordinate m_j.
struct RateBounds {
  double birth_lo = 0.0;
  double birth_hi = 0.0;
  double death_lo = 0.0;
  double death_hi = 0.0;

  void validate() const;
};

enum class RuleKind {
  constant,
  periodic,
  state_affine,
  state_affine_capped,
  table,
};

enum class TableAxis { time, count };

const char* to_string(RuleKind kind) noexcept;

/// A rate as a function of (state, time), drawn from a closed rule algebra.
///
///   constant             params = [c]                       -> c
///   periodic             params = [base, amplitude, phase]  -> base + amplitude * sin(2 pi t / period + phase)
///   state_affine         params = [c0, c1, ..., cd]         -> c0 + sum_i c_i m_i
///   state_affine_capped  params = [c0, c1, ..., cd, cap]    -> min(cap, c0 + sum_i c_i m_i)
///   table (axis=time)    knots/values                       -> piecewise-linear in t, clamped at the ends,
///                                                              wrapped modulo period when period > 0
///   table (axis=count)   values                             -> values[min(m_own, n-1)]
///
/// All kinds are bounded and piecewise continuous in t on any finite horizon.
class RateRule {
 public:
  static RateRule constant(double c);
  static RateRule periodic(double base, double amplitude, double period,
                           double phase = 0.0);
  static RateRule state_affine(std::vector<double> coefficients);
  static RateRule state_affine_capped(std::vector<double> coefficients,
                                      double cap);
  static RateRule time_table(std::vector<double> knots,
                             std::vector<double> values, double period = 0.0);
  static RateRule count_table(std::vector<double> values);

  RuleKind kind() const noexcept { return kind_; }
  std::span<const double> params() const noexcept { return params_; }
  double period() const noexcept { return period_; }
  TableAxis axis() const noexcept { return axis_; }
  std::span<const double> knots() const noexcept { return knots_; }

  /// Raw value of the rule; own_type selects m_own for count tables.
  double evaluate(const MultiIndex& m, std::size_t own_type, double t) const;

  /// Throws ConfigError if the rule is malformed for a model of dimension d.
  void validate(std::size_t dimension) const;

 private:
  RuleKind kind_ = RuleKind::constant;
  std::vector<double> params_;
  std::vector<double> knots_;
  double period_ = 0.0;
  TableAxis axis_ = TableAxis::time;
};

struct TypeSpec {
  RateRule birth;
  RateRule death;
  RateBounds bounds;
};

/// A d-dimensional inhomogeneous birth-death model. Immutable after
/// construction.
class ModelSpec {
 public:
  /// Global caps default to the largest per-type upper bounds.
  ModelSpec(std::vector<TypeSpec> types,
            std::optional<double> global_birth_cap = std::nullopt,
            std::optional<double> global_death_cap = std::nullopt);

  std::size_t dimension() const noexcept { return types_.size(); }
  const TypeSpec& type(std::size_t j) const { return types_.at(j); }
  const RateBounds& bounds(std::size_t j) const { return types_.at(j).bounds; }

  /// L: upper bound on every birth rate.
  double global_birth_cap() const noexcept { return birth_cap_; }
  /// M: upper bound on every death rate.
  double global_death_cap() const noexcept { return death_cap_; }

  /// 2d(L+M), the l1 operator-norm bound of the generator.
  double generator_norm_bound() const noexcept;

 private:
  std::vector<TypeSpec> types_;
  double birth_cap_ = 0.0;
  double death_cap_ = 0.0;
};

struct Rates {
  double birth = 0.0;
  double death = 0.0;
};

/// lambda_{j,m}(t) and mu_{j,m}(t) with eager bound checking. Death is 0
/// whenever m_j = 0. Throws BoundViolation naming (j, m, t) when a value is
/// negative, non-finite, or outside the declared bounds. j is 0-based.
Rates eval_rates(const ModelSpec& model, std::size_t j, const MultiIndex& m,
                 double t);

/// The box prod_j [0, N_j] enumerated in graded-lexicographic order: states
/// sorted by |m| ascending, ties broken lexicographically on the coordinates.
class TruncatedSpace {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  static constexpr std::size_t default_max_size = std::size_t{1} << 22;

  TruncatedSpace(std::vector<int> caps,
                 std::size_t max_size = default_max_size);

  std::size_t size() const noexcept { return states_.size(); }
  std::size_t dimension() const noexcept { return caps_.size(); }
  std::span<const int> caps() const noexcept { return caps_; }

  bool contains(const MultiIndex& m) const noexcept;
  std::size_t index_of(const MultiIndex& m) const;
  const MultiIndex& state_of(std::size_t i) const;

  /// Index of m + e_j (resp. m - e_j) for the state at index i, or npos when
  /// the neighbour leaves the box.
  std::size_t up(std::size_t i, std::size_t j) const noexcept {
    return up_[i * caps_.size() + j];
  }
  std::size_t down(std::size_t i, std::size_t j) const noexcept {
    return down_[i * caps_.size() + j];
  }

  /// True if any coordinate of state i sits at its cap.
  bool on_boundary(std::size_t i) const noexcept { return boundary_[i] != 0; }

 private:
  std::size_t box_offset(const MultiIndex& m) const noexcept;

  std::vector<int> caps_;
  std::vector<std::size_t> strides_;
  std::vector<MultiIndex> states_;
  std::vector<std::size_t> rank_of_box_;
  std::vector<std::size_t> up_;
  std::vector<std::size_t> down_;
  std::vector<std::uint8_t> boundary_;
};

TruncatedSpace build_space(std::vector<int> caps,
                           std::size_t max_size = TruncatedSpace::default_max_size);

}  // namespace bdp
