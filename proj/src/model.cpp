// SPDX-License-Identifier: Apache-2.0

#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "error.hpp"

namespace bdp {

namespace {

// Rounding allowance for bound checks, relative to the bound magnitude.
constexpr double kBoundTolerance = 1e-12;

bool above(double value, double hi) {
  return value > hi + kBoundTolerance * std::max(1.0, std::abs(hi));
}

bool below(double value, double lo) {
  return value < lo - kBoundTolerance * std::max(1.0, std::abs(lo));
}

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw ConfigError(fmt::format("{}: non-finite parameter", what));
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex::MultiIndex(std::vector<int> coords) : coords_(std::move(coords)) {}

MultiIndex::MultiIndex(std::initializer_list<int> coords) : coords_(coords) {}

int MultiIndex::total() const noexcept {
  return std::accumulate(coords_.begin(), coords_.end(), 0);
}

MultiIndex MultiIndex::shifted(std::size_t j, int delta) const {
  MultiIndex out = *this;
  out.coords_.at(j) += delta;
  return out;
}

std::string MultiIndex::to_string() const {
  return fmt::format("({})", fmt::join(coords_, ","));
}

// ---------------------------------------------------------------------------
// RateBounds

void RateBounds::validate() const {
  const double all[] = {birth_lo, birth_hi, death_lo, death_hi};
  for (double v : all) {
    if (!std::isfinite(v)) throw ConfigError("rate bounds must be finite");
  }
  if (birth_lo < 0.0 || birth_lo > birth_hi) {
    throw ConfigError(fmt::format(
        "birth bounds must satisfy 0 <= birth_lo <= birth_hi (got {}, {})",
        birth_lo, birth_hi));
  }
  if (death_lo < 0.0 || death_lo > death_hi) {
    throw ConfigError(fmt::format(
        "death bounds must satisfy 0 <= death_lo <= death_hi (got {}, {})",
        death_lo, death_hi));
  }
}

// ---------------------------------------------------------------------------
// RateRule

const char* to_string(RuleKind kind) noexcept {
  switch (kind) {
    case RuleKind::constant: return "constant";
    case RuleKind::periodic: return "periodic";
    case RuleKind::state_affine: return "state_affine";
    case RuleKind::state_affine_capped: return "state_affine_capped";
    case RuleKind::table: return "table";
  }
  return "unknown";
}

RateRule RateRule::constant(double c) {
  RateRule r;
  r.kind_ = RuleKind::constant;
  r.params_ = {c};
  return r;
}

RateRule RateRule::periodic(double base, double amplitude, double period,
                            double phase) {
  RateRule r;
  r.kind_ = RuleKind::periodic;
  r.params_ = {base, amplitude, phase};
  r.period_ = period;
  return r;
}

RateRule RateRule::state_affine(std::vector<double> coefficients) {
  RateRule r;
  r.kind_ = RuleKind::state_affine;
  r.params_ = std::move(coefficients);
  return r;
}

RateRule RateRule::state_affine_capped(std::vector<double> coefficients,
                                       double cap) {
  RateRule r;
  r.kind_ = RuleKind::state_affine_capped;
  r.params_ = std::move(coefficients);
  r.params_.push_back(cap);
  return r;
}

RateRule RateRule::time_table(std::vector<double> knots,
                              std::vector<double> values, double period) {
  RateRule r;
  r.kind_ = RuleKind::table;
  r.axis_ = TableAxis::time;
  r.knots_ = std::move(knots);
  r.params_ = std::move(values);
  r.period_ = period;
  return r;
}

RateRule RateRule::count_table(std::vector<double> values) {
  RateRule r;
  r.kind_ = RuleKind::table;
  r.axis_ = TableAxis::count;
  r.params_ = std::move(values);
  return r;
}

void RateRule::validate(std::size_t dimension) const {
  require_finite(params_, to_string(kind_));
  require_finite(knots_, "table knots");
  switch (kind_) {
    case RuleKind::constant:
      if (params_.size() != 1) {
        throw ConfigError("constant rule takes exactly 1 parameter");
      }
      break;
    case RuleKind::periodic:
      if (params_.size() != 3) {
        throw ConfigError(
            "periodic rule takes parameters [base, amplitude, phase]");
      }
      if (!(period_ > 0.0) || !std::isfinite(period_)) {
        throw ConfigError("periodic rule needs a positive period");
      }
      break;
    case RuleKind::state_affine:
      if (params_.size() != dimension + 1) {
        throw ConfigError(fmt::format(
            "state_affine rule takes d+1 = {} parameters, got {}",
            dimension + 1, params_.size()));
      }
      break;
    case RuleKind::state_affine_capped:
      if (params_.size() != dimension + 2) {
        throw ConfigError(fmt::format(
            "state_affine_capped rule takes d+2 = {} parameters, got {}",
            dimension + 2, params_.size()));
      }
      break;
    case RuleKind::table:
      if (params_.empty()) throw ConfigError("table rule needs values");
      if (axis_ == TableAxis::time) {
        if (knots_.size() != params_.size()) {
          throw ConfigError("time table needs one knot per value");
        }
        if (!std::is_sorted(knots_.begin(), knots_.end()) ||
            std::adjacent_find(knots_.begin(), knots_.end()) != knots_.end()) {
          throw ConfigError("time table knots must be strictly increasing");
        }
        if (period_ < 0.0 || !std::isfinite(period_)) {
          throw ConfigError("time table period must be >= 0");
        }
      }
      break;
  }
}

double RateRule::evaluate(const MultiIndex& m, std::size_t own_type,
                          double t) const {
  switch (kind_) {
    case RuleKind::constant:
      return params_[0];
    case RuleKind::periodic:
      return params_[0] +
             params_[1] *
                 std::sin(2.0 * std::numbers::pi * t / period_ + params_[2]);
    case RuleKind::state_affine:
    case RuleKind::state_affine_capped: {
      double v = params_[0];
      for (std::size_t i = 0; i < m.size(); ++i) v += params_[i + 1] * m[i];
      if (kind_ == RuleKind::state_affine_capped) {
        v = std::min(v, params_[m.size() + 1]);
      }
      return v;
    }
    case RuleKind::table: {
      if (axis_ == TableAxis::count) {
        const auto k = static_cast<std::size_t>(std::max(0, m[own_type]));
        return params_[std::min(k, params_.size() - 1)];
      }
      double s = t;
      if (period_ > 0.0) s = std::fmod(t, period_);
      if (s <= knots_.front()) return params_.front();
      if (s >= knots_.back()) return params_.back();
      const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
      const auto hi = static_cast<std::size_t>(it - knots_.begin());
      const auto lo = hi - 1;
      const double w = (s - knots_[lo]) / (knots_[hi] - knots_[lo]);
      return params_[lo] + w * (params_[hi] - params_[lo]);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// ModelSpec

ModelSpec::ModelSpec(std::vector<TypeSpec> types,
                     std::optional<double> global_birth_cap,
                     std::optional<double> global_death_cap)
    : types_(std::move(types)) {
  if (types_.empty()) throw ConfigError("model dimension must be >= 1");
  double max_birth = 0.0;
  double max_death = 0.0;
  for (std::size_t j = 0; j < types_.size(); ++j) {
    try {
      types_[j].bounds.validate();
      types_[j].birth.validate(types_.size());
      types_[j].death.validate(types_.size());
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("type {}: {}", j + 1, e.what()));
    }
    max_birth = std::max(max_birth, types_[j].bounds.birth_hi);
    max_death = std::max(max_death, types_[j].bounds.death_hi);
  }
  birth_cap_ = global_birth_cap.value_or(max_birth);
  death_cap_ = global_death_cap.value_or(max_death);
  if (!std::isfinite(birth_cap_) || birth_cap_ < max_birth) {
    throw ConfigError(fmt::format(
        "global_birth_cap {} is below the largest birth_hi {}", birth_cap_,
        max_birth));
  }
  if (!std::isfinite(death_cap_) || death_cap_ < max_death) {
    throw ConfigError(fmt::format(
        "global_death_cap {} is below the largest death_hi {}", death_cap_,
        max_death));
  }
}

double ModelSpec::generator_norm_bound() const noexcept {
  return 2.0 * static_cast<double>(types_.size()) * (birth_cap_ + death_cap_);
}

Rates eval_rates(const ModelSpec& model, std::size_t j, const MultiIndex& m,
                 double t) {
  if (j >= model.dimension()) {
    throw InvalidArgument(fmt::format("type index {} out of range (d = {})",
                                      j + 1, model.dimension()));
  }
  if (m.size() != model.dimension()) {
    throw InvalidArgument(fmt::format("state {} has wrong dimension",
                                      m.to_string()));
  }
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw InvalidArgument(fmt::format("time must be finite and >= 0 (got {})", t));
  }
  const TypeSpec& spec = model.type(j);
  const RateBounds& b = spec.bounds;

  Rates r;
  r.birth = spec.birth.evaluate(m, j, t);
  r.death = m[j] > 0 ? spec.death.evaluate(m, j, t) : 0.0;

  auto fail = [&](const char* which, double value, double lo, double hi) {
    throw BoundViolation(fmt::format(
        "{} rate of type {} at m={} t={} is {} (declared bounds [{}, {}])",
        which, j + 1, m.to_string(), t, value, lo, hi));
  };
  if (!std::isfinite(r.birth) || r.birth < 0.0 || below(r.birth, b.birth_lo) ||
      above(r.birth, b.birth_hi)) {
    fail("birth", r.birth, b.birth_lo, b.birth_hi);
  }
  if (m[j] > 0 && (!std::isfinite(r.death) || r.death < 0.0 ||
                   below(r.death, b.death_lo) || above(r.death, b.death_hi))) {
    fail("death", r.death, b.death_lo, b.death_hi);
  }
  return r;
}

// ---------------------------------------------------------------------------
// TruncatedSpace

TruncatedSpace::TruncatedSpace(std::vector<int> caps, std::size_t max_size)
    : caps_(std::move(caps)) {
  if (caps_.empty()) throw InvalidArgument("caps list must not be empty");
  std::size_t size = 1;
  for (std::size_t j = 0; j < caps_.size(); ++j) {
    if (caps_[j] < 1) {
      throw InvalidArgument(
          fmt::format("cap of type {} must be >= 1 (got {})", j + 1, caps_[j]));
    }
    const auto extent = static_cast<std::size_t>(caps_[j]) + 1;
    if (size > max_size / extent) {
      throw InvalidArgument(fmt::format(
          "truncated space exceeds the maximum size {}", max_size));
    }
    size *= extent;
  }

  const std::size_t d = caps_.size();
  // Row-major strides over the box, last coordinate fastest.
  strides_.assign(d, 1);
  for (std::size_t j = d - 1; j-- > 0;) {
    strides_[j] = strides_[j + 1] * static_cast<std::size_t>(caps_[j + 1] + 1);
  }

  // Row-major box order is already lexicographic; a stable sort on |m| gives
  // graded-lexicographic order.
  states_.reserve(size);
  std::vector<int> coords(d, 0);
  for (std::size_t n = 0; n < size; ++n) {
    states_.emplace_back(coords);
    for (std::size_t j = d; j-- > 0;) {
      if (++coords[j] <= caps_[j]) break;
      coords[j] = 0;
    }
  }
  std::stable_sort(states_.begin(), states_.end(),
                   [](const MultiIndex& a, const MultiIndex& b) {
                     return a.total() < b.total();
                   });

  rank_of_box_.assign(size, npos);
  boundary_.assign(size, 0);
  for (std::size_t i = 0; i < size; ++i) {
    rank_of_box_[box_offset(states_[i])] = i;
    for (std::size_t j = 0; j < d; ++j) {
      if (states_[i][j] == caps_[j]) boundary_[i] = 1;
    }
  }

  up_.assign(size * d, npos);
  down_.assign(size * d, npos);
  for (std::size_t i = 0; i < size; ++i) {
    const std::size_t offset = box_offset(states_[i]);
    for (std::size_t j = 0; j < d; ++j) {
      if (states_[i][j] < caps_[j]) {
        up_[i * d + j] = rank_of_box_[offset + strides_[j]];
      }
      if (states_[i][j] > 0) {
        down_[i * d + j] = rank_of_box_[offset - strides_[j]];
      }
    }
  }
}

std::size_t TruncatedSpace::box_offset(const MultiIndex& m) const noexcept {
  std::size_t offset = 0;
  for (std::size_t j = 0; j < caps_.size(); ++j) {
    offset += static_cast<std::size_t>(m[j]) * strides_[j];
  }
  return offset;
}

bool TruncatedSpace::contains(const MultiIndex& m) const noexcept {
  if (m.size() != caps_.size()) return false;
  for (std::size_t j = 0; j < caps_.size(); ++j) {
    if (m[j] < 0 || m[j] > caps_[j]) return false;
  }
  return true;
}

std::size_t TruncatedSpace::index_of(const MultiIndex& m) const {
  if (!contains(m)) {
    throw InvalidArgument(
        fmt::format("state {} lies outside the truncated box", m.to_string()));
  }
  return rank_of_box_[box_offset(m)];
}

const MultiIndex& TruncatedSpace::state_of(std::size_t i) const {
  if (i >= states_.size()) {
    throw InvalidArgument(fmt::format("linear index {} out of range (size {})",
                                      i, states_.size()));
  }
  return states_[i];
}

TruncatedSpace build_space(std::vector<int> caps, std::size_t max_size) {
  return TruncatedSpace(std::move(caps), max_size);
}

}  // namespace bdp
