// SPDX-License-Identifier: Apache-2.0

#include "kolmogorov.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "error.hpp"
#include "rk4.hpp"

namespace bdp {

// ---------------------------------------------------------------------------
// GeneratorMatrix

std::span<const std::size_t> GeneratorMatrix::off_diagonal_rows(
    std::size_t c) const {
  return {rows_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
}

std::span<const double> GeneratorMatrix::off_diagonal_values(
    std::size_t c) const {
  return {values_.data() + col_ptr_[c], col_ptr_[c + 1] - col_ptr_[c]};
}

double GeneratorMatrix::at(std::size_t row, std::size_t col) const {
  if (row >= dimension() || col >= dimension()) {
    throw InvalidArgument("generator entry out of range");
  }
  if (row == col) return diagonal_[col];
  for (std::size_t k = col_ptr_[col]; k < col_ptr_[col + 1]; ++k) {
    if (rows_[k] == row) return values_[k];
  }
  return 0.0;
}

double GeneratorMatrix::column_sum(std::size_t c) const {
  double s = diagonal_[c];
  for (double v : off_diagonal_values(c)) s += v;
  return s;
}

double GeneratorMatrix::l1_operator_norm() const {
  double norm = 0.0;
  for (std::size_t c = 0; c < dimension(); ++c) {
    double s = std::abs(diagonal_[c]);
    for (double v : off_diagonal_values(c)) s += std::abs(v);
    norm = std::max(norm, s);
  }
  return norm;
}

void GeneratorMatrix::multiply(std::span<const double> x,
                               std::span<double> y) const {
  const std::size_t n = dimension();
  for (std::size_t r = 0; r < n; ++r) y[r] = diagonal_[r] * x[r];
  for (std::size_t c = 0; c < n; ++c) {
    const double xc = x[c];
    if (xc == 0.0) continue;
    for (std::size_t k = col_ptr_[c]; k < col_ptr_[c + 1]; ++k) {
      y[rows_[k]] += values_[k] * xc;
    }
  }
}

std::vector<double> GeneratorMatrix::dense_column_major() const {
  const std::size_t n = dimension();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    out[c * n + c] = diagonal_[c];
    for (std::size_t k = col_ptr_[c]; k < col_ptr_[c + 1]; ++k) {
      out[c * n + rows_[k]] = values_[k];
    }
  }
  return out;
}

GeneratorMatrix assemble_generator(const ModelSpec& model,
                                   const TruncatedSpace& space, double t) {
  if (model.dimension() != space.dimension()) {
    throw InvalidArgument("model and space dimensions differ");
  }
  const std::size_t n = space.size();
  const std::size_t d = space.dimension();

  GeneratorMatrix a;
  a.time_ = t;
  a.diagonal_.assign(n, 0.0);
  a.col_ptr_.assign(n + 1, 0);
  a.rows_.reserve(n * 2 * d);
  a.values_.reserve(n * 2 * d);

  for (std::size_t c = 0; c < n; ++c) {
    const MultiIndex& m = space.state_of(c);
    double outflow = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
      const Rates r = eval_rates(model, l, m, t);
      if (const std::size_t up = space.up(c, l); up != TruncatedSpace::npos) {
        a.rows_.push_back(up);
        a.values_.push_back(r.birth);
        outflow += r.birth;
      }
      if (const std::size_t down = space.down(c, l);
          down != TruncatedSpace::npos) {
        a.rows_.push_back(down);
        a.values_.push_back(r.death);
        outflow += r.death;
      }
    }
    a.diagonal_[c] = -outflow;
    a.col_ptr_[c + 1] = a.rows_.size();
  }
  return a;
}

// ---------------------------------------------------------------------------
// ProbabilityVector

ProbabilityVector ProbabilityVector::point_mass(const TruncatedSpace& space,
                                                const MultiIndex& m,
                                                double time) {
  ProbabilityVector p;
  p.values.assign(space.size(), 0.0);
  p.values[space.index_of(m)] = 1.0;
  p.time = time;
  return p;
}

void ProbabilityVector::validate() const {
  if (values.empty()) throw InvalidArgument("probability vector is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      throw InvalidArgument(fmt::format("p[{}] is not finite", i));
    }
    if (v < -1e-12) {
      throw InvalidArgument(fmt::format("p[{}] = {} is negative", i, v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-8) {
    throw InvalidArgument(
        fmt::format("probability vector sums to {}, expected 1", sum));
  }
}

// ---------------------------------------------------------------------------
// integrate

namespace {

// A(t) is needed at t, t + h/2 and t + h; the end of one step is the start
// of the next, so two slots cover every lookup.
class GeneratorCache {
 public:
  GeneratorCache(const ModelSpec& model, const TruncatedSpace& space)
      : model_(model), space_(space) {}

  const GeneratorMatrix& at(double t) {
    for (std::size_t s = 0; s < slots_.size(); ++s) {
      if (valid_[s] && slots_[s].time() == t) return slots_[s];
    }
    const std::size_t victim = next_;
    next_ = 1 - next_;
    slots_[victim] = assemble_generator(model_, space_, t);
    valid_[victim] = true;
    return slots_[victim];
  }

 private:
  const ModelSpec& model_;
  const TruncatedSpace& space_;
  std::array<GeneratorMatrix, 2> slots_;
  std::array<bool, 2> valid_{false, false};
  std::size_t next_ = 0;
};

void check_tail(double tail, double t, const IntegrateOptions& options) {
  if (options.tail_threshold && tail > *options.tail_threshold &&
      options.tail_policy == TailPolicy::error) {
    throw TruncationError(fmt::format(
        "tail mass {} exceeds threshold {} at t={}; enlarge the caps", tail,
        *options.tail_threshold, t));
  }
}

}  // namespace

Trajectory integrate(const ModelSpec& model, const TruncatedSpace& space,
                     const ProbabilityVector& p0, std::span<const double> grid,
                     const IntegrateOptions& options) {
  if (p0.values.size() != space.size()) {
    throw InvalidArgument("initial vector does not match the space size");
  }
  p0.validate();
  if (grid.empty()) throw InvalidArgument("time grid is empty");
  if (std::abs(grid.front() - p0.time) > 1e-12) {
    throw InvalidArgument(
        fmt::format("grid starts at {} but p0 is given at t={}", grid.front(),
                    p0.time));
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1]) || !std::isfinite(grid[i])) {
      throw InvalidArgument("time grid must be finite and strictly increasing");
    }
  }
  if (!(options.step_factor > 0.0)) {
    throw InvalidArgument("step factor must be positive");
  }

  Trajectory traj;
  const double tail0 = tail_mass(p0, space);
  if (options.tail_threshold && tail0 > *options.tail_threshold) {
    throw TruncationError(fmt::format(
        "initial tail mass {} exceeds threshold {}", tail0,
        *options.tail_threshold));
  }
  traj.grid.push_back(grid.front());
  traj.snapshots.push_back(p0);
  traj.tail_mass.push_back(tail0);

  const double norm_bound = model.generator_norm_bound();
  const double h_max = norm_bound > 0.0
                           ? options.step_factor / norm_bound
                           : std::numeric_limits<double>::infinity();

  GeneratorCache cache(model, space);
  auto rhs = [&cache](double t, std::span<const double> y,
                      std::span<double> dydt) {
    cache.at(t).multiply(y, dydt);
  };

  std::vector<double> p = p0.values;
  Rk4Workspace ws;
  double min_pre_clip = *std::min_element(p.begin(), p.end());
  double max_drift = 0.0;

  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double t_begin = grid[g - 1];
    const double span_len = grid[g] - t_begin;
    if (norm_bound > 0.0) {
      const double n_real = std::ceil(span_len / h_max);
      if (!(n_real < 1e12)) {
        throw NumericalError("grid interval needs too many internal steps");
      }
      const auto n_steps = std::max<std::size_t>(1, static_cast<std::size_t>(n_real));
      const double h = span_len / static_cast<double>(n_steps);
      if (!(h > 0.0) || t_begin + h == t_begin) {
        throw NumericalError(fmt::format("step underflow at t={}", t_begin));
      }
      for (std::size_t s = 0; s < n_steps; ++s) {
        const double t0 = t_begin + static_cast<double>(s) * h;
        const double t1 =
            s + 1 == n_steps ? grid[g] : t_begin + static_cast<double>(s + 1) * h;
        rk4_step(rhs, t0, t1, p, ws);
        ++traj.internal_steps;

        double sum = 0.0;
        double lowest = p[0];
        for (double v : p) {
          sum += v;
          lowest = std::min(lowest, v);
        }
        min_pre_clip = std::min(min_pre_clip, lowest);
        const double drift = std::abs(sum - 1.0);
        max_drift = std::max(max_drift, drift);
        if (!std::isfinite(sum) || drift > options.drift_limit) {
          throw NumericalError(fmt::format(
              "mass drift {} before renormalization at t={} exceeds {}", drift,
              t1, options.drift_limit));
        }
        double clipped = 0.0;
        for (double& v : p) {
          if (v < 0.0) v = 0.0;
          clipped += v;
        }
        for (double& v : p) v /= clipped;
      }
    }

    ProbabilityVector snap{p, grid[g]};
    const double tail = tail_mass(snap, space);
    check_tail(tail, grid[g], options);
    if (options.tail_threshold && tail > *options.tail_threshold) {
      traj.stopped_at = grid[g];
      break;
    }
    traj.grid.push_back(grid[g]);
    traj.snapshots.push_back(std::move(snap));
    traj.tail_mass.push_back(tail);
  }

  traj.min_entry_pre_clip = min_pre_clip;
  traj.max_drift = max_drift;
  return traj;
}

std::vector<double> make_grid(double horizon, double step, double t0) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InvalidArgument("grid step must be positive");
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument("horizon must be finite and >= 0");
  }
  const double n_real = std::round(horizon / step);
  if (n_real > 1e8) throw InvalidArgument("grid has too many points");
  const auto n = static_cast<std::size_t>(n_real);
  std::vector<double> grid;
  grid.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) {
    grid.push_back(t0 + static_cast<double>(i) * step);
  }
  const double end = t0 + horizon;
  if (std::abs(grid.back() - end) <= 1e-9 * std::max(1.0, std::abs(end))) {
    grid.back() = end;
  } else if (grid.back() < end) {
    grid.push_back(end);
  } else {
    grid.back() = end;
  }
  if (grid.size() >= 2 && !(grid[grid.size() - 1] > grid[grid.size() - 2])) {
    grid.pop_back();
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Norms and diagnostics

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument("l1_norm: non-finite entry");
    s += std::abs(x);
  }
  return s;
}

double weighted_l1_norm(std::span<const double> v,
                        std::span<const double> weights) {
  if (v.size() != weights.size()) {
    throw InvalidArgument("weighted_l1_norm: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || !std::isfinite(weights[i])) {
      throw InvalidArgument("weighted_l1_norm: non-finite entry");
    }
    if (!(weights[i] > 0.0)) {
      throw InvalidArgument("weighted_l1_norm: weights must be positive");
    }
    s += weights[i] * std::abs(v[i]);
  }
  return s;
}

double tail_mass(const ProbabilityVector& p, const TruncatedSpace& space) {
  double s = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (space.on_boundary(i)) s += p.values[i];
  }
  return s;
}

}  // namespace bdp
