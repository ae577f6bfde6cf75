// SPDX-License-Identifier: Apache-2.0

#include "projection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "error.hpp"

namespace bdp {

std::string Coordinate::label() const {
  return total_ ? std::string("total") : std::to_string(index_ + 1);
}

int Coordinate::max_level(const TruncatedSpace& space) const {
  if (total_) {
    const auto caps = space.caps();
    return std::accumulate(caps.begin(), caps.end(), 0);
  }
  if (index_ >= space.dimension()) {
    throw InvalidArgument(fmt::format("coordinate {} out of range (d = {})",
                                      index_ + 1, space.dimension()));
  }
  return space.caps()[index_];
}

int Coordinate::level(const MultiIndex& m) const {
  return total_ ? m.total() : m[index_];
}

Marginal marginal(const ProbabilityVector& p, const TruncatedSpace& space,
                  Coordinate coordinate) {
  if (p.values.size() != space.size()) {
    throw InvalidArgument("probability vector does not match the space");
  }
  Marginal out;
  out.coordinate = coordinate;
  out.time = p.time;
  out.values.assign(static_cast<std::size_t>(coordinate.max_level(space)) + 1,
                    0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    out.values[static_cast<std::size_t>(coordinate.level(space.state_of(i)))] +=
        p.values[i];
  }
  return out;
}

RateBounds projected_bounds(const ModelSpec& model, Coordinate coordinate) {
  if (!coordinate.is_total()) {
    if (coordinate.index() >= model.dimension()) {
      throw InvalidArgument("coordinate out of range");
    }
    return model.bounds(coordinate.index());
  }
  RateBounds b;
  b.death_lo = model.bounds(0).death_lo;
  for (std::size_t j = 0; j < model.dimension(); ++j) {
    const RateBounds& bj = model.bounds(j);
    b.birth_lo += bj.birth_lo;
    b.birth_hi += bj.birth_hi;
    b.death_lo = std::min(b.death_lo, bj.death_lo);
    b.death_hi += bj.death_hi;
  }
  return b;
}

EffectiveRates effective_rates(const ProbabilityVector& p,
                               const ModelSpec& model,
                               const TruncatedSpace& space,
                               Coordinate coordinate) {
  if (p.values.size() != space.size()) {
    throw InvalidArgument("probability vector does not match the space");
  }
  const auto levels =
      static_cast<std::size_t>(coordinate.max_level(space)) + 1;
  std::vector<double> mass(levels, 0.0);
  std::vector<double> birth(levels, 0.0);
  std::vector<double> death(levels, 0.0);

  const std::size_t d = space.dimension();
  for (std::size_t i = 0; i < space.size(); ++i) {
    const MultiIndex& m = space.state_of(i);
    const auto k = static_cast<std::size_t>(coordinate.level(m));
    const double w = p.values[i];
    mass[k] += w;
    if (!coordinate.is_total()) {
      const Rates r = eval_rates(model, coordinate.index(), m, p.time);
      birth[k] += r.birth * w;
      death[k] += r.death * w;
    } else {
      for (std::size_t l = 0; l < d; ++l) {
        const Rates r = eval_rates(model, l, m, p.time);
        if (space.up(i, l) != TruncatedSpace::npos) birth[k] += r.birth * w;
        death[k] += r.death * w;
      }
    }
  }

  const RateBounds conv = projected_bounds(model, coordinate);
  EffectiveRates out;
  out.coordinate = coordinate;
  out.time = p.time;
  out.birth.resize(levels);
  out.death.resize(levels);
  out.defined.resize(levels);
  for (std::size_t k = 0; k < levels; ++k) {
    if (mass[k] > kZeroMarginal) {
      out.birth[k] = birth[k] / mass[k];
      out.death[k] = death[k] / mass[k];
      out.defined[k] = 1;
    } else {
      out.birth[k] = conv.birth_lo;
      out.death[k] = k == 0 ? 0.0 : conv.death_lo;
      out.defined[k] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// TridiagonalSystem

double TridiagonalSystem::column_sum(std::size_t k) const {
  double s = main[k];
  if (k + 1 < main.size()) s += lower[k];
  if (k > 0) s += upper[k - 1];
  return s;
}

void TridiagonalSystem::multiply(std::span<const double> x,
                                 std::span<double> y) const {
  const std::size_t n = main.size();
  for (std::size_t k = 0; k < n; ++k) {
    double v = main[k] * x[k];
    if (k > 0) v += lower[k - 1] * x[k - 1];
    if (k + 1 < n) v += upper[k] * x[k + 1];
    y[k] = v;
  }
}

std::vector<double> TridiagonalSystem::dense_column_major() const {
  const std::size_t n = main.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    out[k * n + k] = main[k];
    if (k + 1 < n) {
      out[k * n + k + 1] = lower[k];
      out[(k + 1) * n + k] = upper[k];
    }
  }
  return out;
}

TridiagonalSystem assemble_projected(const EffectiveRates& rates) {
  const std::size_t n = rates.birth.size();
  TridiagonalSystem sys;
  sys.time = rates.time;
  sys.main.resize(n);
  sys.lower.resize(n - 1);
  sys.upper.resize(n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double birth = k + 1 < n ? rates.birth[k] : 0.0;
    sys.main[k] = -(birth + rates.death[k]);
    if (k + 1 < n) {
      sys.lower[k] = rates.birth[k];
      sys.upper[k] = rates.death[k + 1];
    }
  }
  return sys;
}

// ---------------------------------------------------------------------------
// ReducedSystem

void ReducedSystem::multiply(std::span<const double> w,
                             std::span<double> y) const {
  const std::size_t n = main.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = main[i] * w[i];
    if (i > 0) v += lower[i - 1] * w[i - 1];
    if (i + 1 < n) v += upper[i] * w[i + 1];
    y[i] = v;
    total += w[i];
  }
  if (n > 0) y[0] -= first_row_shift * total;
}

std::vector<double> ReducedSystem::dense_row_major() const {
  const std::size_t n = main.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = main[i];
    if (i + 1 < n) {
      out[(i + 1) * n + i] = lower[i];
      out[i * n + i + 1] = upper[i];
    }
  }
  for (std::size_t j = 0; j < n; ++j) out[j] -= first_row_shift;
  return out;
}

double ReducedSystem::l1_operator_norm() const {
  const std::size_t n = main.size();
  double norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      if (i == j) v = main[i];
      else if (i == j + 1) v = lower[j];
      else if (j == i + 1) v = upper[i];
      if (i == 0) v -= first_row_shift;
      s += std::abs(v);
    }
    norm = std::max(norm, s);
  }
  return norm;
}

ReducedSystem reduce(const TridiagonalSystem& system,
                     const EffectiveRates& rates) {
  const std::size_t levels = system.size();
  if (rates.birth.size() != levels) {
    throw InvalidArgument("rates and projected system differ in size");
  }
  ReducedSystem out;
  out.time = system.time;
  if (levels < 2) return out;
  const std::size_t n = levels - 1;
  // Column 0 of the projected matrix is nonzero only in rows 0 and 1, so
  // a_i0 = lambda_0 for i = 1 and 0 below.
  const double a10 = system.lower[0];
  out.main.assign(system.main.begin() + 1, system.main.end());
  out.lower.assign(system.lower.begin() + 1, system.lower.end());
  out.upper.assign(system.upper.begin() + 1, system.upper.end());
  out.first_row_shift = a10;
  out.forcing.assign(n, 0.0);
  out.forcing[0] = rates.birth[0];
  return out;
}

// ---------------------------------------------------------------------------

std::vector<ProjectedSnapshot> project_trajectory(const Trajectory& trajectory,
                                                  const ModelSpec& model,
                                                  const TruncatedSpace& space,
                                                  Coordinate coordinate) {
  std::vector<ProjectedSnapshot> out;
  out.reserve(trajectory.snapshots.size());
  for (const ProbabilityVector& p : trajectory.snapshots) {
    out.push_back({marginal(p, space, coordinate),
                   effective_rates(p, model, space, coordinate)});
  }
  return out;
}

std::vector<ResidualPoint> projection_consistency_residual(
    const Trajectory& trajectory, const ModelSpec& model,
    const TruncatedSpace& space, Coordinate coordinate) {
  const std::size_t n = trajectory.snapshots.size();
  if (n < 3) {
    throw InvalidArgument(
        "projection residual needs a trajectory with at least 3 grid points");
  }
  std::vector<Marginal> xs;
  xs.reserve(n);
  for (const ProbabilityVector& p : trajectory.snapshots) {
    xs.push_back(marginal(p, space, coordinate));
  }

  std::vector<ResidualPoint> out;
  out.reserve(n - 2);
  std::vector<double> ax;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const ProbabilityVector& p = trajectory.snapshots[i];
    const TridiagonalSystem sys =
        assemble_projected(effective_rates(p, model, space, coordinate));
    ax.assign(sys.size(), 0.0);
    sys.multiply(xs[i].values, ax);
    const double dt = trajectory.grid[i + 1] - trajectory.grid[i - 1];
    double worst = 0.0;
    for (std::size_t k = 0; k < ax.size(); ++k) {
      const double dxdt = (xs[i + 1].values[k] - xs[i - 1].values[k]) / dt;
      worst = std::max(worst, std::abs(dxdt - ax[k]));
    }
    out.push_back({trajectory.grid[i], worst});
  }
  return out;
}

}  // namespace bdp
