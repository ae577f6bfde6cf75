// SPDX-License-Identifier: Apache-2.0

#include "acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "error.hpp"
#include "mc_oracle.hpp"
#include "projection.hpp"

namespace bdp::acceptance {

namespace {

constexpr double kConservationTol = 1e-12;
constexpr double kOdeTol = 1e-6;
constexpr double kResidualTol = 1e-4;
constexpr double kResidualStep = 1e-2;
constexpr double kMarginTol = 1e-12;
constexpr double kTailExcessTol = 1e-8;
constexpr double kDecaySlack = 1e-6;
constexpr double kTailThreshold = 1e-3;
constexpr double kBoundsRounding = 1e-12;
constexpr double kMaxZ = 6.0;

std::string g6(double v) { return fmt::format("{:.6g}", v); }

double uniform(PhiloxStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

int uniform_int(PhiloxStream& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng.next_u64() % span);
}

Trajectory solve(const BuiltinModel& m, double horizon, double step) {
  const auto grid = make_grid(horizon, step);
  return integrate(m.model, m.space,
                   ProbabilityVector::point_mass(m.space, m.initial), grid);
}

// Random rule together with the exact range it takes on the box (over states
// with m_own >= 1 for death rules) and over all t.
struct RandomRule {
  RateRule rule;
  double lo = 0.0;
  double hi = 0.0;
};

RandomRule random_rule(PhiloxStream& rng, const std::vector<int>& caps,
                       std::size_t own, bool death, bool frozen) {
  const std::size_t d = caps.size();
  const int choice = frozen ? uniform_int(rng, 0, 3) : uniform_int(rng, 0, 5);
  RandomRule out;
  auto affine = [&](bool capped) {
    std::vector<double> coeffs(d + 1);
    double min_sum = 0.0;
    double max_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = uniform(rng, -0.3, 0.5);
      coeffs[i + 1] = c;
      const double m_lo = (death && i == own) ? 1.0 : 0.0;
      const double m_hi = caps[i];
      min_sum += std::min(c * m_lo, c * m_hi);
      max_sum += std::max(c * m_lo, c * m_hi);
    }
    coeffs[0] = uniform(rng, 0.1, 1.0) + std::max(0.0, -min_sum);
    out.lo = coeffs[0] + min_sum;
    out.hi = coeffs[0] + max_sum;
    if (capped) {
      const double cap = uniform(rng, out.lo, out.hi);
      out.hi = cap;
      out.rule = RateRule::state_affine_capped(std::move(coeffs), cap);
    } else {
      out.rule = RateRule::state_affine(std::move(coeffs));
    }
  };
  switch (choice) {
    case 0: {
      const double c = uniform(rng, 0.0, 2.0);
      out = {RateRule::constant(c), c, c};
      break;
    }
    case 1:
      affine(false);
      break;
    case 2:
      affine(true);
      break;
    case 3: {
      std::vector<double> values(static_cast<std::size_t>(caps[own]) + 1);
      for (double& v : values) v = uniform(rng, 0.0, 2.0);
      const auto first = values.begin() + (death ? 1 : 0);
      out.lo = *std::min_element(first, values.end());
      out.hi = *std::max_element(first, values.end());
      out.rule = RateRule::count_table(std::move(values));
      break;
    }
    case 4: {
      const double base = uniform(rng, 0.5, 2.0);
      const double amp = uniform(rng, 0.0, base);
      out = {RateRule::periodic(base, amp, uniform(rng, 0.5, 3.0),
                                uniform(rng, 0.0, 2.0 * std::numbers::pi)),
             base - amp, base + amp};
      break;
    }
    default: {
      std::vector<double> knots{0.0, 1.0, 2.5, 4.0};
      std::vector<double> values(knots.size());
      for (double& v : values) v = uniform(rng, 0.0, 2.0);
      out.lo = *std::min_element(values.begin(), values.end());
      out.hi = *std::max_element(values.begin(), values.end());
      const double period = rng.uniform() < 0.5 ? 0.0 : 5.0;
      out.rule = RateRule::time_table(std::move(knots), std::move(values), period);
      break;
    }
  }
  return out;
}

double max_abs_diff(const Eigen::VectorXd& a, std::span<const double> b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    s += std::abs(a[i] - b[static_cast<std::size_t>(i)]);
  }
  return s;
}

// Largest norm/bound ratio after the first point (the ratio is 1 at t0).
double late_ratio(const DecayReport& report) {
  double worst = 0.0;
  for (std::size_t i = 1; i < report.points.size(); ++i) {
    worst = std::max(worst, report.points[i].ratio);
  }
  return worst;
}

std::vector<Coordinate> all_coordinates(std::size_t d) {
  std::vector<Coordinate> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back(Coordinate::type(j));
  out.push_back(Coordinate::total());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reference models

BuiltinModel two_state_model() {
  std::vector<TypeSpec> types{{RateRule::constant(1.0), RateRule::constant(1.0),
                               RateBounds{1.0, 1.0, 1.0, 1.0}}};
  return {"two_state", ModelSpec(std::move(types)), TruncatedSpace({1}),
          MultiIndex{0}};
}

BuiltinModel projection_model() {
  std::vector<TypeSpec> types{
      {RateRule::periodic(0.6, 0.3, 2.0),
       RateRule::state_affine_capped({0.1, 0.3, 0.1, 0.0}, 1.2),
       RateBounds{0.3, 0.9, 0.4, 1.2}},
      {RateRule::state_affine({0.3, 0.05, 0.0, 0.05}),
       RateRule::periodic(0.5, 0.2, 1.0), RateBounds{0.3, 0.9, 0.3, 0.7}},
      {RateRule::state_affine_capped({0.2, 0.1, 0.1, 0.0}, 0.8),
       RateRule::count_table({0.0, 0.3, 0.6, 0.9, 1.2, 1.2, 1.2}),
       RateBounds{0.2, 0.8, 0.3, 1.2}},
  };
  return {"projection_d3", ModelSpec(std::move(types)),
          TruncatedSpace({6, 6, 6}), MultiIndex{0, 0, 0}};
}

BuiltinModel null_ergodic_model() {
  std::vector<TypeSpec> types{
      {RateRule::periodic(4.5, 0.5, 1.0),
       RateRule::state_affine_capped({0.3, 0.1, 0.1}, 1.0),
       RateBounds{4.0, 5.0, 0.4, 1.0}},
      {RateRule::constant(1.0),
       RateRule::state_affine_capped({0.0, 0.0, 0.5}, 2.0),
       RateBounds{1.0, 1.0, 0.5, 2.0}},
  };
  return {"null_ergodic", ModelSpec(std::move(types)), TruncatedSpace({60, 10}),
          MultiIndex{3, 0}};
}

BuiltinModel weak_ergodic_model() {
  std::vector<TypeSpec> types{
      {RateRule::constant(1.0), RateRule::constant(4.0),
       RateBounds{1.0, 1.0, 4.0, 4.0}},
      {RateRule::periodic(0.5, 0.3, 1.5),
       RateRule::state_affine_capped({0.5, 0.0, 0.5}, 2.0),
       RateBounds{0.2, 0.8, 1.0, 2.0}},
  };
  return {"weak_ergodic", ModelSpec(std::move(types)), TruncatedSpace({30, 5}),
          MultiIndex{5, 1}};
}

BuiltinModel mc_homogeneous_model() {
  std::vector<TypeSpec> types{
      {RateRule::constant(0.4), RateRule::state_affine({0.0, 1.0, 0.0}),
       RateBounds{0.4, 0.4, 1.0, 4.0}},
      {RateRule::state_affine({0.3, 0.1, 0.0}), RateRule::constant(1.5),
       RateBounds{0.3, 0.7, 1.5, 1.5}},
  };
  return {"mc_homogeneous", ModelSpec(std::move(types)), TruncatedSpace({4, 4}),
          MultiIndex{0, 0}};
}

BuiltinModel mc_periodic_model() {
  std::vector<TypeSpec> types{
      {RateRule::periodic(0.5, 0.4, 1.0), RateRule::constant(1.5),
       RateBounds{0.1, 0.9, 1.5, 1.5}},
      {RateRule::periodic(0.3, 0.2, 1.0, 1.0),
       RateRule::count_table({0.0, 1.0, 2.0, 3.0, 3.0}),
       RateBounds{0.1, 0.5, 1.0, 3.0}},
  };
  return {"mc_periodic", ModelSpec(std::move(types)), TruncatedSpace({4, 4}),
          MultiIndex{1, 0}};
}

BuiltinModel random_model(PhiloxStream& rng, bool frozen, std::size_t max_size) {
  const int d = uniform_int(rng, 1, 3);
  std::vector<int> caps;
  std::size_t size = 0;
  do {
    caps.clear();
    size = 1;
    for (int j = 0; j < d; ++j) {
      caps.push_back(uniform_int(rng, 1, 6));
      size *= static_cast<std::size_t>(caps.back()) + 1;
    }
  } while (size > max_size);

  std::vector<TypeSpec> types;
  double max_birth = 0.0;
  double max_death = 0.0;
  for (int j = 0; j < d; ++j) {
    const auto own = static_cast<std::size_t>(j);
    RandomRule birth = random_rule(rng, caps, own, false, frozen);
    RandomRule death = random_rule(rng, caps, own, true, frozen);
    max_birth = std::max(max_birth, birth.hi);
    max_death = std::max(max_death, death.hi);
    types.push_back({std::move(birth.rule), std::move(death.rule),
                     RateBounds{birth.lo, birth.hi, death.lo, death.hi}});
  }
  // Global caps sometimes strictly above the per-type maxima.
  const double inflate = rng.uniform() < 0.5 ? 1.0 : 1.25;
  std::vector<int> start(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    start[static_cast<std::size_t>(j)] =
        uniform_int(rng, 0, caps[static_cast<std::size_t>(j)] - 1);
  }
  return {"random", ModelSpec(std::move(types), max_birth * inflate,
                              max_death * inflate),
          TruncatedSpace(caps), MultiIndex(std::move(start))};
}

// ---------------------------------------------------------------------------
// Shared building blocks

BoundsScan scan_two_sided_bounds(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory) {
  BoundsScan scan;
  auto outside = [](double v, double lo, double hi) {
    const double tol_lo = kBoundsRounding * std::max(1.0, std::abs(lo));
    const double tol_hi = kBoundsRounding * std::max(1.0, std::abs(hi));
    return v < lo - tol_lo || v > hi + tol_hi;
  };
  for (const ProbabilityVector& p : trajectory.snapshots) {
    for (std::size_t j = 0; j < model.dimension(); ++j) {
      const RateBounds& b = model.bounds(j);
      const EffectiveRates r =
          effective_rates(p, model, space, Coordinate::type(j));
      for (std::size_t k = 0; k < r.birth.size(); ++k) {
        if (!r.defined[k]) continue;
        ++scan.checked;
        bool bad = outside(r.birth[k], b.birth_lo, b.birth_hi);
        if (k > 0) bad = bad || outside(r.death[k], b.death_lo, b.death_hi);
        if (k == 0) bad = bad || r.death[k] != 0.0;
        if (bad) {
          if (scan.violations == 0) {
            scan.first_violation = fmt::format(
                "type {} level {} t={}: birth {} death {}", j + 1, k,
                g6(p.time), g6(r.birth[k]), g6(r.death[k]));
          }
          ++scan.violations;
        }
      }
    }
  }
  return scan;
}

std::size_t tail_window(const Trajectory& trajectory, double threshold) {
  std::size_t n = 0;
  while (n < trajectory.tail_mass.size() && trajectory.tail_mass[n] < threshold) {
    ++n;
  }
  return n;
}

NullDecayResult check_null_decay(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory,
                                 const NullErgodicCertificate& cert,
                                 int initial_level, double tail_threshold,
                                 double slack) {
  NullDecayResult out;
  out.window = tail_window(trajectory, tail_threshold);
  out.worst_tail_excess = -std::numeric_limits<double>::infinity();
  out.min_margin = std::numeric_limits<double>::infinity();
  const Coordinate coord = Coordinate::type(cert.coordinate);

  std::vector<NormSample> series;
  for (std::size_t i = 0; i < trajectory.snapshots.size(); ++i) {
    const ProbabilityVector& p = trajectory.snapshots[i];
    out.min_margin = std::min(
        out.min_margin,
        infimum_margin_null(effective_rates(p, model, space, coord), cert));
    if (i >= out.window) continue;
    const Marginal x = marginal(p, space, coord);
    series.push_back({p.time, l1_norm(lambda_transform(x.values, cert))});
    double cumulative = 0.0;
    for (std::size_t n = 0; n < x.values.size(); ++n) {
      cumulative += x.values[n];
      const double bound = tail_probability_bound(
          cert, initial_level, static_cast<int>(n), p.time - trajectory.grid[0]);
      out.worst_tail_excess = std::max(out.worst_tail_excess, cumulative - bound);
    }
  }
  if (series.empty()) {
    throw TruncationError("initial state already exceeds the tail threshold");
  }
  out.decay = verify_decay(series, cert.alpha_star, slack);
  return out;
}

WeakDecayResult check_weak_decay(const ModelSpec& model,
                                 const TruncatedSpace& space,
                                 const Trajectory& trajectory,
                                 const WeakErgodicCertificate& cert,
                                 std::uint64_t seed, int n_starts,
                                 double slack) {
  WeakDecayResult out;
  out.min_margin = std::numeric_limits<double>::infinity();
  const Coordinate coord = Coordinate::type(cert.coordinate);
  std::vector<ReducedSystem> family;
  family.reserve(trajectory.snapshots.size());
  for (const ProbabilityVector& p : trajectory.snapshots) {
    const EffectiveRates r = effective_rates(p, model, space, coord);
    out.min_margin = std::min(out.min_margin, infimum_margin_weak(r, cert));
    family.push_back(reduce(assemble_projected(r), r));
  }
  const std::size_t k = family.front().size();
  for (int s = 0; s < n_starts; ++s) {
    PhiloxStream rng(seed, 0x5745414bULL + static_cast<std::uint64_t>(s));
    std::vector<double> w0(k);
    for (double& v : w0) v = uniform(rng, -1.0, 1.0);
    const auto series =
        integrate_homogeneous(family, w0, trajectory.grid, cert);
    out.decays.push_back(verify_decay(series, cert.alpha_low, slack));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

CheckResult generator_conservation(const Options& options) {
  PhiloxStream rng(options.seed, 0xC1);
  double worst_sum = 0.0;
  double worst_log_norm = 0.0;
  double worst_norm_ratio = 0.0;
  std::size_t structural = 0;
  std::size_t matrices = 0;
  for (int n = 0; n < 100; ++n) {
    const BuiltinModel m = random_model(rng, false, 343);
    std::vector<double> times{0.0};
    for (int i = 0; i < 4; ++i) times.push_back(uniform(rng, 0.0, 10.0));
    for (double t : times) {
      const GeneratorMatrix a = assemble_generator(m.model, m.space, t);
      ++matrices;
      const std::size_t size = a.dimension();
      for (std::size_t c = 0; c < size; ++c) {
        worst_sum = std::max(worst_sum, std::abs(a.column_sum(c)));
        const auto vals = a.off_diagonal_values(c);
        if (vals.size() > 2 * m.model.dimension()) ++structural;
        for (double v : vals) {
          if (v < 0.0) ++structural;
        }
      }
      worst_log_norm = std::max(
          worst_log_norm, std::abs(log_norm(a.dense_column_major(), size)));
      worst_norm_ratio = std::max(
          worst_norm_ratio,
          a.l1_operator_norm() / m.model.generator_norm_bound());
    }
  }
  const bool pass = worst_sum <= kConservationTol &&
                    worst_log_norm <= kConservationTol &&
                    worst_norm_ratio <= 1.0 + kConservationTol && structural == 0;
  return {"c1_generator_conservation", pass,
          fmt::format("matrices={} max|colsum|={} max|log_norm|={} "
                      "max ||A||/2d(L+M)={} structural_violations={}",
                      matrices, g6(worst_sum), g6(worst_log_norm),
                      g6(worst_norm_ratio), structural)};
}

CheckResult ode_correctness(const Options& options) {
  const BuiltinModel two = two_state_model();
  const Trajectory traj = solve(two, 1.0, 0.01);
  const double exact = (1.0 + std::exp(-2.0)) / 2.0;
  const double two_state_err = std::abs(traj.snapshots.back().values[0] - exact);

  PhiloxStream rng(options.seed, 0xC2);
  double worst = 0.0;
  std::size_t largest = 0;
  const int n_models = 20;
  for (int n = 0; n < n_models; ++n) {
    const BuiltinModel m = random_model(rng, true, 64);
    const std::size_t size = m.space.size();
    largest = std::max(largest, size);
    ProbabilityVector p0;
    p0.values.resize(size);
    double total = 0.0;
    for (double& v : p0.values) total += (v = rng.uniform());
    for (double& v : p0.values) v /= total;

    const auto grid = make_grid(2.0, 0.25);
    const Trajectory tr = integrate(m.model, m.space, p0, grid);
    const auto dense = assemble_generator(m.model, m.space, 0.0).dense_column_major();
    const Eigen::Map<const Eigen::MatrixXd> a(dense.data(),
                                              static_cast<Eigen::Index>(size),
                                              static_cast<Eigen::Index>(size));
    const Eigen::Map<const Eigen::VectorXd> x0(p0.values.data(),
                                               static_cast<Eigen::Index>(size));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const Eigen::MatrixXd e = (a * grid[g]).exp();
      const Eigen::VectorXd expected = e * x0;
      worst = std::max(worst, max_abs_diff(expected, tr.snapshots[g].values));
    }
  }
  const bool pass = two_state_err <= kOdeTol && worst <= kOdeTol;
  return {"c2_ode_correctness", pass,
          fmt::format("two_state |p0(1)-(1+e^-2)/2|={} frozen_models={} "
                      "max_size={} max_l1_err_vs_expm={} tol={}",
                      g6(two_state_err), n_models, largest, g6(worst),
                      g6(kOdeTol))};
}

CheckResult projection_consistency(const Options&) {
  const BuiltinModel m = projection_model();
  const Trajectory traj = solve(m, 5.0, kResidualStep);
  double worst = 0.0;
  std::string per;
  for (const Coordinate c : all_coordinates(m.model.dimension())) {
    double w = 0.0;
    for (const ResidualPoint& r :
         projection_consistency_residual(traj, m.model, m.space, c)) {
      w = std::max(w, r.residual);
    }
    per += fmt::format(" {}={}", c.label(), g6(w));
    worst = std::max(worst, w);
  }
  return {"c3_projection_consistency", worst <= kResidualTol,
          fmt::format("max_residual{} tol={} step={} horizon=5", per,
                      g6(kResidualTol), g6(kResidualStep))};
}

CheckResult two_sided_bounds(const Options&) {
  struct Case {
    BuiltinModel model;
    double horizon;
  };
  std::vector<Case> cases;
  cases.push_back({projection_model(), 5.0});
  cases.push_back({null_ergodic_model(), 10.0});
  cases.push_back({weak_ergodic_model(), 5.0});
  cases.push_back({mc_homogeneous_model(), 2.0});
  cases.push_back({mc_periodic_model(), 2.0});
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::string first;
  for (const Case& c : cases) {
    const Trajectory traj = solve(c.model, c.horizon, 0.01);
    const BoundsScan scan = scan_two_sided_bounds(c.model.model, c.model.space, traj);
    checked += scan.checked;
    if (scan.violations > 0 && first.empty()) {
      first = c.model.name + ": " + scan.first_violation;
    }
    violations += scan.violations;
  }
  return {"c4_two_sided_bounds", violations == 0,
          fmt::format("trajectories={} rate_levels_checked={} violations={}{}",
                      cases.size(), checked, violations,
                      first.empty() ? std::string() : " first: " + first)};
}

CheckResult null_ergodic_decay(const Options&) {
  const BuiltinModel m = null_ergodic_model();
  const NullErgodicCertificate cert = null_certificate(m.model.bounds(0), 0);
  const Trajectory traj = solve(m, 10.0, 0.01);
  const NullDecayResult r = check_null_decay(m.model, m.space, traj, cert,
                                             m.initial[0], kTailThreshold,
                                             kDecaySlack);
  const double window_end = traj.grid[r.window - 1];
  const bool pass = r.decay.pass && r.worst_tail_excess <= kTailExcessTol &&
                    r.min_margin >= cert.alpha_star - kMarginTol &&
                    std::abs(cert.sigma - 0.5) < 1e-15 &&
                    std::abs(cert.alpha_star - 1.0) < 1e-15;
  return {"c5_null_ergodic_decay", pass,
          fmt::format("sigma={} alpha*={} window=[0,{}] (tail<{}) "
                      "worst_ratio={} max_ratio_after_t0={} slack={} worst_tail_excess={} "
                      "min_margin={}",
                      g6(cert.sigma), g6(cert.alpha_star), g6(window_end),
                      g6(kTailThreshold), fmt::format("{:.10g}", r.decay.worst_ratio),
                      fmt::format("{:.10g}", late_ratio(r.decay)), g6(kDecaySlack),
                      g6(r.worst_tail_excess), fmt::format("{:.15g}", r.min_margin))};
}

CheckResult weak_ergodic_decay(const Options& options) {
  const BuiltinModel m = weak_ergodic_model();
  const WeakErgodicCertificate cert = weak_certificate(m.model.bounds(0), 0);
  const Trajectory traj = solve(m, 5.0, 0.01);
  const WeakDecayResult r = check_weak_decay(m.model, m.space, traj, cert,
                                             options.seed, 5, kDecaySlack);
  bool decay_pass = true;
  double worst_ratio = -std::numeric_limits<double>::infinity();
  double late = 0.0;
  for (const DecayReport& d : r.decays) {
    decay_pass = decay_pass && d.pass;
    worst_ratio = std::max(worst_ratio, d.worst_ratio);
    late = std::max(late, late_ratio(d));
  }
  const bool pass = decay_pass && r.min_margin >= cert.alpha_low - kMarginTol &&
                    std::abs(cert.beta - 2.0) < 1e-15 &&
                    std::abs(cert.alpha_low - 1.0) < 1e-15;
  return {"c6_weak_ergodic_decay", pass,
          fmt::format("beta={} alpha_*={} starts={} horizon=5 worst_ratio={} "
                      "max_ratio_after_t0={} "
                      "slack={} min_margin={}",
                      g6(cert.beta), g6(cert.alpha_low), r.decays.size(),
                      fmt::format("{:.10g}", worst_ratio),
                      fmt::format("{:.10g}", late), g6(kDecaySlack),
                      fmt::format("{:.15g}", r.min_margin))};
}

CheckResult oracle_agreement(const Options& options) {
  const std::vector<double> times{0.5, 1.0, 2.0};
  bool pass = true;
  std::string detail;
  std::vector<BuiltinModel> models;
  models.push_back(mc_homogeneous_model());
  models.push_back(mc_periodic_model());
  for (const BuiltinModel& m : models) {
    SimConfig cfg;
    cfg.initial = m.initial;
    cfg.horizon = times.back();
    cfg.n_paths = options.mc_paths;
    cfg.seed = options.seed;
    cfg.sample_times = times;
    cfg.threads = options.threads;
    const EmpiricalMarginals mc = simulate_paths(m.model, m.space, cfg);

    std::vector<double> grid{0.0};
    grid.insert(grid.end(), times.begin(), times.end());
    const Trajectory ode = integrate(
        m.model, m.space, ProbabilityVector::point_mass(m.space, m.initial), grid);

    double worst = 0.0;  // largest TV / (3 max stderr)
    for (std::size_t s = 0; s < times.size(); ++s) {
      for (const EmpiricalMarginal& em : mc.marginals) {
        const Marginal x = marginal(ode.snapshots[s + 1], m.space, em.coordinate);
        const double tv = total_variation(em.estimate[s], x.values);
        const double se = *std::max_element(em.standard_error[s].begin(),
                                            em.standard_error[s].end());
        const double ratio = tv / (3.0 * se);
        worst = std::max(worst, ratio);
        if (!(tv <= 3.0 * se)) pass = false;
      }
    }
    detail += fmt::format(" {}: max TV/(3*stderr)={}", m.name, g6(worst));
  }
  return {"c7_oracle_agreement", pass,
          fmt::format("paths={} seed={} times=0.5,1,2{}", options.mc_paths,
                      options.seed, detail)};
}

// ---------------------------------------------------------------------------
// Module-level invariants

namespace {

CheckResult space_bijection() {
  std::size_t spaces = 0;
  std::size_t bad = 0;
  for (int d = 1; d <= 3; ++d) {
    std::vector<int> caps(static_cast<std::size_t>(d), 1);
    while (true) {
      const TruncatedSpace space(caps);
      ++spaces;
      for (std::size_t i = 0; i < space.size(); ++i) {
        const MultiIndex& m = space.state_of(i);
        if (space.index_of(m) != i) ++bad;
        if (i > 0) {
          const MultiIndex& prev = space.state_of(i - 1);
          const bool ordered =
              prev.total() < m.total() ||
              (prev.total() == m.total() &&
               std::lexicographical_compare(prev.coords().begin(),
                                            prev.coords().end(),
                                            m.coords().begin(),
                                            m.coords().end()));
          if (!ordered) ++bad;
        }
      }
      std::size_t j = 0;
      while (j < caps.size() && caps[j] == 4) caps[j++] = 1;
      if (j == caps.size()) break;
      ++caps[j];
    }
  }
  return {"property.model.space_bijection", bad == 0,
          fmt::format("spaces={} violations={}", spaces, bad)};
}

CheckResult rate_admissibility(const Options& options) {
  PhiloxStream rng(options.seed, 0xA1);
  std::size_t evaluations = 0;
  std::string first;
  for (int n = 0; n < 30; ++n) {
    const BuiltinModel m = random_model(rng, false, 343);
    for (double t = 0.0; t <= 10.0; t += 0.37) {
      for (std::size_t i = 0; i < m.space.size(); ++i) {
        for (std::size_t j = 0; j < m.model.dimension(); ++j) {
          ++evaluations;
          try {
            eval_rates(m.model, j, m.space.state_of(i), t);
          } catch (const BoundViolation& e) {
            if (first.empty()) first = e.what();
          }
        }
      }
    }
  }
  return {"property.model.rate_admissibility", first.empty(),
          fmt::format("evaluations={}{}", evaluations,
                      first.empty() ? std::string() : " first: " + first)};
}

CheckResult positivity(const Options& options) {
  PhiloxStream rng(options.seed, 0xA2);
  double min_entry = 0.0;
  double max_drift = 0.0;
  for (int n = 0; n < 20; ++n) {
    const BuiltinModel m = random_model(rng, false, 343);
    ProbabilityVector p0;
    p0.values.resize(m.space.size());
    double total = 0.0;
    for (double& v : p0.values) total += (v = rng.uniform() < 0.7 ? 0.0 : rng.uniform());
    if (total == 0.0) {
      p0.values[0] = total = 1.0;
    }
    for (double& v : p0.values) v /= total;
    const Trajectory tr = integrate(m.model, m.space, p0, make_grid(3.0, 0.5));
    min_entry = std::min(min_entry, tr.min_entry_pre_clip);
    max_drift = std::max(max_drift, tr.max_drift);
  }
  return {"property.kolmogorov.positivity", min_entry >= -1e-8,
          fmt::format("models=20 min_pre_clip={} max_drift={}", g6(min_entry),
                      g6(max_drift))};
}

double l1_induced(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

CheckResult log_norm_semigroup(const Options& options) {
  PhiloxStream rng(options.seed, 0xA3);
  double worst = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < 20; ++n) {
    const BuiltinModel m = random_model(rng, true, 64);
    const std::size_t size = m.space.size();
    const GeneratorMatrix a = assemble_generator(m.model, m.space, 0.0);
    const auto dense = a.dense_column_major();
    const double beta = log_norm(dense, size);
    const Eigen::Map<const Eigen::MatrixXd> am(dense.data(),
                                               static_cast<Eigen::Index>(size),
                                               static_cast<Eigen::Index>(size));
    for (double h : {1e-3, 1e-2, 1e-1}) {
      const Eigen::MatrixXd e = (am * h).exp();
      worst = std::max(worst, l1_induced(e) - std::exp(beta * h));
    }
  }
  return {"property.kolmogorov.log_norm_semigroup", worst <= 1e-9,
          fmt::format("models=20 max(||e^(Ah)|| - e^(beta* h))={}", g6(worst))};
}

CheckResult log_norm_random(const Options& options) {
  PhiloxStream rng(options.seed, 0xA4);
  double def_err = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < 50; ++n) {
    const auto size = static_cast<std::size_t>(uniform_int(rng, 1, 16));
    std::vector<double> h(size * size);
    for (double& v : h) v = uniform(rng, -2.0, 2.0);
    double brute = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < size; ++c) {
      double v = h[c * size + c];
      for (std::size_t r = 0; r < size; ++r) {
        if (r != c) v += std::abs(h[c * size + r]);
      }
      brute = std::max(brute, v);
    }
    const double beta = log_norm(h, size);
    def_err = std::max(def_err, std::abs(beta - brute));
    const Eigen::Map<const Eigen::MatrixXd> hm(h.data(),
                                               static_cast<Eigen::Index>(size),
                                               static_cast<Eigen::Index>(size));
    for (double step : {1e-3, 1e-2, 1e-1}) {
      const Eigen::MatrixXd e = (hm * step).exp();
      worst = std::max(worst, l1_induced(e) - std::exp(beta * step));
    }
  }
  return {"property.bounds.log_norm_random", def_err <= 1e-12 && worst <= 1e-9,
          fmt::format("matrices=50 max|log_norm - brute|={} "
                      "max(||e^(Hh)|| - e^(beta* h))={}",
                      g6(def_err), g6(worst))};
}

EffectiveRates random_rates(PhiloxStream& rng, int k, const RateBounds& b) {
  EffectiveRates r;
  for (int i = 0; i <= k; ++i) {
    r.birth.push_back(uniform(rng, b.birth_lo, b.birth_hi));
    r.death.push_back(i == 0 ? 0.0 : uniform(rng, b.death_lo, b.death_hi));
    r.defined.push_back(1);
  }
  return r;
}

CheckResult marginal_linearity(const Options& options) {
  PhiloxStream rng(options.seed, 0xA5);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    const BuiltinModel m = random_model(rng, false, 343);
    ProbabilityVector p, q, mix;
    const double alpha = rng.uniform();
    for (std::size_t i = 0; i < m.space.size(); ++i) {
      p.values.push_back(rng.uniform());
      q.values.push_back(rng.uniform());
      mix.values.push_back(alpha * p.values[i] + (1.0 - alpha) * q.values[i]);
    }
    for (const Coordinate c : all_coordinates(m.model.dimension())) {
      const Marginal xp = marginal(p, m.space, c);
      const Marginal xq = marginal(q, m.space, c);
      const Marginal xm = marginal(mix, m.space, c);
      for (std::size_t k = 0; k < xm.values.size(); ++k) {
        worst = std::max(worst, std::abs(xm.values[k] - alpha * xp.values[k] -
                                         (1.0 - alpha) * xq.values[k]));
      }
    }
  }
  return {"property.projection.marginal_linearity", worst <= 1e-13,
          fmt::format("cases=50 max_deviation={}", g6(worst))};
}

CheckResult reduction_identity(const Options& options) {
  PhiloxStream rng(options.seed, 0xA6);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const int k = uniform_int(rng, 1, 8);
    const EffectiveRates r =
        random_rates(rng, k, RateBounds{0.0, 3.0, 0.0, 3.0});
    const TridiagonalSystem sys = assemble_projected(r);
    const ReducedSystem red = reduce(sys, r);
    std::vector<double> x(static_cast<std::size_t>(k) + 1);
    double total = 0.0;
    for (double& v : x) total += (v = rng.uniform());
    for (double& v : x) v /= total;
    std::vector<double> ax(x.size());
    sys.multiply(x, ax);
    const std::vector<double> z(x.begin() + 1, x.end());
    std::vector<double> bz(z.size());
    red.multiply(z, bz);
    for (std::size_t i = 0; i < z.size(); ++i) {
      worst = std::max(worst, std::abs(bz[i] + red.forcing[i] - ax[i + 1]));
    }
  }
  return {"property.projection.reduction_identity", worst <= 1e-12,
          fmt::format("cases=100 max|Bz + f - (A~x)_1..K|={}", g6(worst))};
}

CheckResult certificate_forms(const Options& options) {
  PhiloxStream rng(options.seed, 0xA7);
  double null_err = 0.0;
  double weak_err = 0.0;
  for (int n = 0; n < 200; ++n) {
    const double m_hi = uniform(rng, 0.1, 5.0);
    const double l = m_hi + uniform(rng, 0.1, 5.0);
    const NullErgodicCertificate c =
        null_certificate(RateBounds{l, l + 1.0, 0.0, m_hi}, 0);
    const double alt = l * (1.0 - c.sigma) - m_hi * (1.0 / c.sigma - 1.0);
    null_err = std::max(null_err, std::abs(c.alpha_star - alt) /
                                      std::max(1.0, c.alpha_star));

    const double big_l = uniform(rng, 0.1, 3.0);
    const double little_l = uniform(rng, 0.0, big_l);
    const double m_lo = big_l + uniform(rng, 0.5, 5.0);
    const double m_up = m_lo + uniform(rng, 0.0, 2.0);
    RateBounds b{little_l, big_l, m_lo, m_up};
    WeakErgodicCertificate w;
    try {
      w = weak_certificate(b, 0);
    } catch (const NotApplicable&) {
      continue;
    }
    // Equality corner: lambda_i = l, lambda_{i+1} = L, mu_{i+1} = death_lo,
    // mu_i = M.
    const double corner = little_l + m_lo - w.beta * big_l - m_up / w.beta;
    weak_err = std::max(weak_err, std::abs(w.alpha_low - corner) /
                                      std::max(1.0, w.alpha_low));
  }
  return {"property.bounds.certificate_closed_forms",
          null_err <= 1e-12 && weak_err <= 1e-12,
          fmt::format("cases=200 null_rel_err={} weak_rel_err={}", g6(null_err),
                      g6(weak_err))};
}

CheckResult margin_dominance(const Options& options) {
  PhiloxStream rng(options.seed, 0xA8);
  double null_gap = std::numeric_limits<double>::infinity();
  double weak_gap = std::numeric_limits<double>::infinity();
  for (int n = 0; n < 1000; ++n) {
    const int k = uniform_int(rng, 1, 10);
    const RateBounds nb{4.0, 6.0, 0.0, 1.0};
    const NullErgodicCertificate nc = null_certificate(nb, 0);
    null_gap = std::min(null_gap,
                        infimum_margin_null(random_rates(rng, k, nb), nc) -
                            nc.alpha_star);
    const RateBounds wb{1.0, 1.2, 4.0, 4.5};
    const WeakErgodicCertificate wc = weak_certificate(wb, 0);
    weak_gap = std::min(weak_gap,
                        infimum_margin_weak(random_rates(rng, k, wb), wc) -
                            wc.alpha_low);
  }
  return {"property.bounds.margin_dominance",
          null_gap >= -kMarginTol && weak_gap >= -kMarginTol,
          fmt::format("draws=1000 min(margin_null - alpha*)={} "
                      "min(margin_weak - alpha_*)={}",
                      g6(null_gap), g6(weak_gap))};
}

CheckResult thread_invariance(const Options& options) {
  const BuiltinModel m = mc_periodic_model();
  SimConfig cfg;
  cfg.initial = m.initial;
  cfg.horizon = 2.0;
  cfg.n_paths = 20000;
  cfg.seed = options.seed;
  cfg.sample_times = {0.5, 1.0, 2.0};
  cfg.threads = 1;
  const EmpiricalMarginals one = simulate_paths(m.model, m.space, cfg);
  cfg.threads = 4;
  const EmpiricalMarginals four = simulate_paths(m.model, m.space, cfg);
  bool same = one.marginals.size() == four.marginals.size();
  for (std::size_t i = 0; same && i < one.marginals.size(); ++i) {
    same = one.marginals[i].estimate == four.marginals[i].estimate &&
           one.marginals[i].standard_error == four.marginals[i].standard_error;
  }
  return {"property.mc_oracle.thread_invariance", same,
          fmt::format("paths=20000 threads=1,4 identical={}", same ? "yes" : "no")};
}

}  // namespace

namespace {

// An exception inside a check becomes a failed check instead of aborting the
// whole run.
template <class F>
CheckResult safely(const char* name, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, fmt::format("error: {}", e.what())};
  }
}

}  // namespace

std::vector<CheckResult> run_properties(const Options& o) {
  return {
      safely("property.model.space_bijection", [&] { return space_bijection(); }),
      safely("property.model.rate_admissibility", [&] { return rate_admissibility(o); }),
      safely("property.kolmogorov.positivity", [&] { return positivity(o); }),
      safely("property.kolmogorov.log_norm_semigroup", [&] { return log_norm_semigroup(o); }),
      safely("property.bounds.log_norm_random", [&] { return log_norm_random(o); }),
      safely("property.projection.marginal_linearity", [&] { return marginal_linearity(o); }),
      safely("property.projection.reduction_identity", [&] { return reduction_identity(o); }),
      safely("property.bounds.certificate_closed_forms", [&] { return certificate_forms(o); }),
      safely("property.bounds.margin_dominance", [&] { return margin_dominance(o); }),
      safely("property.mc_oracle.thread_invariance", [&] { return thread_invariance(o); }),
  };
}

std::vector<CheckResult> run_builtin(const Options& o) {
  std::vector<CheckResult> out{
      safely("c1_generator_conservation", [&] { return generator_conservation(o); }),
      safely("c2_ode_correctness", [&] { return ode_correctness(o); }),
      safely("c3_projection_consistency", [&] { return projection_consistency(o); }),
      safely("c4_two_sided_bounds", [&] { return two_sided_bounds(o); }),
      safely("c5_null_ergodic_decay", [&] { return null_ergodic_decay(o); }),
      safely("c6_weak_ergodic_decay", [&] { return weak_ergodic_decay(o); }),
      safely("c7_oracle_agreement", [&] { return oracle_agreement(o); }),
  };
  for (CheckResult& r : run_properties(o)) out.push_back(std::move(r));
  return out;
}

// ---------------------------------------------------------------------------
// Config-specific checks

std::vector<CheckResult> check_config(const ModelConfig& config,
                                      unsigned threads) {
  std::vector<CheckResult> out;
  const ModelSpec& model = config.model;
  const TruncatedSpace& space = config.space;
  const RunSettings& s = config.settings;
  auto guarded = [&out](const std::string& name, auto&& body) {
    try {
      out.push_back(body());
    } catch (const Error& e) {
      out.push_back({name, false, fmt::format("error: {}", e.what())});
    }
  };

  guarded("config.generator_conservation", [&]() -> CheckResult {
    double worst_sum = 0.0;
    double worst_ratio = 0.0;
    for (const double t : make_grid(s.horizon, std::max(s.grid_step, s.horizon / 10.0))) {
      const GeneratorMatrix a = assemble_generator(model, space, t);
      for (std::size_t c = 0; c < a.dimension(); ++c) {
        worst_sum = std::max(worst_sum, std::abs(a.column_sum(c)));
      }
      worst_ratio = std::max(worst_ratio,
                             a.l1_operator_norm() / model.generator_norm_bound());
    }
    return {"config.generator_conservation",
            worst_sum <= kConservationTol && worst_ratio <= 1.0 + kConservationTol,
            fmt::format("max|colsum|={} max ||A||/2d(L+M)={}", g6(worst_sum),
                        g6(worst_ratio))};
  });

  const auto grid = make_grid(s.horizon, s.grid_step);
  Trajectory traj;
  try {
    traj = integrate(model, space, ProbabilityVector::point_mass(space, config.initial),
                     grid);
  } catch (const Error& e) {
    out.push_back({"config.integrate", false, fmt::format("error: {}", e.what())});
    return out;
  }
  out.push_back({"config.integrate", traj.min_entry_pre_clip >= -1e-8,
                 fmt::format("grid_points={} internal_steps={} min_pre_clip={} "
                             "max_drift={} final_tail_mass={}",
                             traj.grid.size(), traj.internal_steps,
                             g6(traj.min_entry_pre_clip), g6(traj.max_drift),
                             g6(traj.tail_mass.back()))});

  guarded("config.two_sided_bounds", [&]() -> CheckResult {
    const BoundsScan scan = scan_two_sided_bounds(model, space, traj);
    return {"config.two_sided_bounds", scan.violations == 0,
            fmt::format("rate_levels_checked={} violations={}{}", scan.checked,
                        scan.violations,
                        scan.first_violation.empty() ? std::string()
                                                     : " first: " + scan.first_violation)};
  });

  // Exact form of the projection identity: the marginal of A(t)p against
  // the projected matrix applied to the marginal of p. The finite-difference
  // residual depends on the rate scale, so it is reported but not judged.
  const double identity_tol = 1e-10 * std::max(1.0, model.generator_norm_bound());
  for (const Coordinate c : all_coordinates(model.dimension())) {
    const std::string name = "config.projection_identity." + c.label();
    guarded(name, [&]() -> CheckResult {
      double worst = 0.0;
      ProbabilityVector dp;
      std::vector<double> ax;
      for (const ProbabilityVector& p : traj.snapshots) {
        const GeneratorMatrix a = assemble_generator(model, space, p.time);
        dp.values.assign(p.values.size(), 0.0);
        a.multiply(p.values, dp.values);
        const Marginal dx = marginal(dp, space, c);
        const Marginal x = marginal(p, space, c);
        const TridiagonalSystem proj =
            assemble_projected(effective_rates(p, model, space, c));
        ax.assign(x.values.size(), 0.0);
        proj.multiply(x.values, ax);
        for (std::size_t k = 0; k < ax.size(); ++k) {
          worst = std::max(worst, std::abs(dx.values[k] - ax[k]));
        }
      }
      double fd = 0.0;
      for (const ResidualPoint& r :
           projection_consistency_residual(traj, model, space, c)) {
        fd = std::max(fd, r.residual);
      }
      return {name, worst <= identity_tol,
              fmt::format("max|P A p - A~ x|={} tol={} finite_difference_residual={}",
                          g6(worst), g6(identity_tol), g6(fd))};
    });
  }

  for (std::size_t j = 0; j < model.dimension(); ++j) {
    const std::string label = std::to_string(j + 1);
    try {
      const NullErgodicCertificate cert = null_certificate(model.bounds(j), j);
      guarded("config.null_ergodic." + label, [&]() -> CheckResult {
        const NullDecayResult r =
            check_null_decay(model, space, traj, cert, config.initial[j],
                             s.tail_threshold, s.slack);
        const bool pass = r.decay.pass && r.worst_tail_excess <= kTailExcessTol &&
                          r.min_margin >= cert.alpha_star - kMarginTol;
        return {"config.null_ergodic." + label, pass,
                fmt::format("sigma={} alpha*={} window_end={} worst_ratio={} "
                            "worst_tail_excess={} min_margin={}",
                            g6(cert.sigma), g6(cert.alpha_star),
                            g6(traj.grid[r.window - 1]),
                            fmt::format("{:.10g}", r.decay.worst_ratio),
                            g6(r.worst_tail_excess), g6(r.min_margin))};
      });
    } catch (const NotApplicable&) {
    }
    try {
      const WeakErgodicCertificate cert = weak_certificate(model.bounds(j), j);
      guarded("config.weak_ergodic." + label, [&]() -> CheckResult {
        const WeakDecayResult r =
            check_weak_decay(model, space, traj, cert, s.seed, 5, s.slack);
        bool pass = r.min_margin >= cert.alpha_low - kMarginTol;
        double worst = -std::numeric_limits<double>::infinity();
        for (const DecayReport& d : r.decays) {
          pass = pass && d.pass;
          worst = std::max(worst, d.worst_ratio);
        }
        return {"config.weak_ergodic." + label, pass,
                fmt::format("beta={} alpha_*={} worst_ratio={} min_margin={}",
                            g6(cert.beta), g6(cert.alpha_low),
                            fmt::format("{:.10g}", worst), g6(r.min_margin))};
      });
    } catch (const NotApplicable&) {
    }
  }

  guarded("config.mc_agreement", [&]() -> CheckResult {
    SimConfig cfg;
    cfg.initial = config.initial;
    cfg.horizon = s.horizon;
    cfg.n_paths = s.paths;
    cfg.seed = s.seed;
    cfg.threads = threads;
    for (double t : s.effective_sample_times()) {
      if (t > 0.0) cfg.sample_times.push_back(t);
    }
    if (cfg.sample_times.empty()) {
      return {"config.mc_agreement", true, "no positive sample times"};
    }
    const EmpiricalMarginals mc = simulate_paths(model, space, cfg);
    std::vector<double> ode_grid{0.0};
    ode_grid.insert(ode_grid.end(), cfg.sample_times.begin(), cfg.sample_times.end());
    const Trajectory ode = integrate(
        model, space, ProbabilityVector::point_mass(space, config.initial), ode_grid);
    // Per-level z-scores with the standard error implied by the ODE
    // probability (floored at one path).
    const double n = static_cast<double>(s.paths);
    double worst_z = 0.0;
    double worst_tv = 0.0;
    for (std::size_t i = 0; i < cfg.sample_times.size(); ++i) {
      for (const EmpiricalMarginal& em : mc.marginals) {
        const Marginal x = marginal(ode.snapshots[i + 1], space, em.coordinate);
        worst_tv = std::max(worst_tv, total_variation(em.estimate[i], x.values));
        for (std::size_t k = 0; k < x.values.size(); ++k) {
          const double q = std::clamp(x.values[k], 0.0, 1.0);
          const double se = std::sqrt(std::max(q * (1.0 - q), 1.0 / n) / n);
          worst_z = std::max(worst_z, std::abs(em.estimate[i][k] - q) / se);
        }
      }
    }
    return {"config.mc_agreement", worst_z <= kMaxZ,
            fmt::format("paths={} seed={} sample_times={} max_z={} limit={} "
                        "max_TV={}",
                        s.paths, s.seed, cfg.sample_times.size(), g6(worst_z),
                        g6(kMaxZ), g6(worst_tv))};
  });
  return out;
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::string out;
  for (const CheckResult& r : results) {
    out += fmt::format("CHECK {} {} {}\n", r.name, r.pass ? "PASS" : "FAIL",
                       r.detail);
  }
  return out;
}

}  // namespace bdp::acceptance
