// SPDX-License-Identifier: Apache-2.0

#include "bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "error.hpp"
#include "rk4.hpp"

namespace bdp {

double log_norm(std::span<const double> column_major, std::size_t n) {
  if (n == 0 || column_major.size() != n * n) {
    throw InvalidArgument("log_norm: matrix must be square and non-empty");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < n; ++c) {
    const double* col = column_major.data() + c * n;
    double s = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (!std::isfinite(col[r])) {
        throw InvalidArgument("log_norm: non-finite entry");
      }
      s += r == c ? col[r] : std::abs(col[r]);
    }
    best = std::max(best, s);
  }
  return best;
}

NullErgodicCertificate null_certificate(const RateBounds& bounds,
                                        std::size_t coordinate) {
  bounds.validate();
  const double l = bounds.birth_lo;
  const double big_m = bounds.death_hi;
  if (!(big_m < l)) {
    throw NotApplicable(fmt::format(
        "M_j >= l_j (death_hi {} >= birth_lo {})", big_m, l));
  }
  NullErgodicCertificate cert;
  cert.coordinate = coordinate;
  cert.sigma = std::sqrt(big_m / l);
  const double gap = std::sqrt(l) - std::sqrt(big_m);
  cert.alpha_star = gap * gap;
  return cert;
}

WeakErgodicCertificate weak_certificate(const RateBounds& bounds,
                                        std::size_t coordinate) {
  bounds.validate();
  const double l = bounds.birth_lo;
  const double big_l = bounds.birth_hi;
  const double m_lo = bounds.death_lo;
  const double big_m = bounds.death_hi;
  if (!(big_l < m_lo)) {
    throw NotApplicable(fmt::format(
        "L_j >= m_j (birth_hi {} >= death_lo {})", big_l, m_lo));
  }
  const double alpha = l + m_lo - 2.0 * std::sqrt(big_l * big_m);
  if (!(alpha > 0.0)) {
    throw NotApplicable(fmt::format(
        "alpha_* = l_j + m_j - 2 sqrt(L_j M_j) = {} <= 0", alpha));
  }
  // Pure-death types leave beta = sqrt(M_j / L_j) undefined.
  if (!(big_l > 0.0)) {
    throw NotApplicable("L_j = 0 leaves beta = sqrt(M_j / L_j) undefined");
  }
  WeakErgodicCertificate cert;
  cert.coordinate = coordinate;
  cert.beta = std::sqrt(big_m / big_l);
  cert.alpha_low = alpha;
  return cert;
}

std::vector<double> lambda_transform(std::span<const double> x,
                                     const NullErgodicCertificate& cert) {
  std::vector<double> out(x.size());
  double delta = 1.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    out[n] = delta * x[n];
    delta *= cert.sigma;
  }
  return out;
}

std::vector<double> d_transform(std::span<const double> w,
                                const WeakErgodicCertificate& cert) {
  const std::size_t n = w.size();
  std::vector<double> out(n, 0.0);
  double suffix = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    suffix += w[i];
    out[i] = suffix;
  }
  double d = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] *= d;
    d *= cert.beta;
  }
  return out;
}

double tail_probability_bound(const NullErgodicCertificate& cert, int k, int n,
                              double t) {
  if (!(t >= 0.0)) {
    throw InvalidArgument(fmt::format("tail bound needs t >= 0 (got {})", t));
  }
  if (k < n) return 1.0;
  const double b = std::pow(cert.sigma, k - n) * std::exp(-cert.alpha_star * t);
  return std::min(1.0, b);
}

double infimum_margin_null(const EffectiveRates& rates,
                           const NullErgodicCertificate& cert) {
  double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rates.birth.size(); ++k) {
    if (!rates.defined[k]) continue;
    const double lam = rates.birth[k];
    const double mu = rates.death[k];
    inf = std::min(inf, lam + mu - cert.sigma * lam - mu / cert.sigma);
  }
  return inf;
}

double infimum_margin_weak(const EffectiveRates& rates,
                           const WeakErgodicCertificate& cert) {
  double inf = std::numeric_limits<double>::infinity();
  const std::size_t levels = rates.birth.size();
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    const double v = rates.birth[i] + rates.death[i + 1] -
                     cert.beta * rates.birth[i + 1] - rates.death[i] / cert.beta;
    inf = std::min(inf, v);
  }
  return inf;
}

DecayReport verify_decay(std::span<const NormSample> series, double rate,
                         double slack) {
  if (series.empty()) throw InvalidArgument("verify_decay: empty series");
  const double t0 = series.front().time;
  const double v0 = series.front().norm;
  if (!(v0 > 0.0)) {
    throw InvalidArgument("verify_decay: initial norm must be positive");
  }
  DecayReport report;
  report.rate = rate;
  report.slack = slack;
  report.worst_ratio = -std::numeric_limits<double>::infinity();
  report.worst_time = t0;
  double prev = -std::numeric_limits<double>::infinity();
  for (const NormSample& s : series) {
    if (!(s.time > prev)) {
      throw InvalidArgument("verify_decay: times must be increasing");
    }
    prev = s.time;
    DecayPoint pt;
    pt.time = s.time;
    pt.norm = s.norm;
    pt.bound = std::exp(-rate * (s.time - t0)) * v0;
    pt.ratio = s.norm / pt.bound;
    pt.pass = pt.ratio <= 1.0 + slack;
    report.pass = report.pass && pt.pass;
    if (pt.ratio > report.worst_ratio) {
      report.worst_ratio = pt.ratio;
      report.worst_time = s.time;
    }
    report.points.push_back(pt);
  }
  return report;
}

namespace {

// Entry-wise linear interpolation between neighbouring reduced systems.
class ReducedInterpolator {
 public:
  explicit ReducedInterpolator(std::span<const ReducedSystem> family)
      : family_(family), scratch_(family.front()) {}

  const ReducedSystem& at(double t) {
    if (family_.size() == 1) return family_.front();
    auto it = std::upper_bound(
        family_.begin(), family_.end(), t,
        [](double v, const ReducedSystem& s) { return v < s.time; });
    if (it == family_.begin()) return family_.front();
    if (it == family_.end()) return family_.back();
    const ReducedSystem& hi = *it;
    const ReducedSystem& lo = *(it - 1);
    const double w = (t - lo.time) / (hi.time - lo.time);
    auto lerp = [w](const std::vector<double>& a, const std::vector<double>& b,
                    std::vector<double>& out) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + w * (b[i] - a[i]);
      }
    };
    lerp(lo.main, hi.main, scratch_.main);
    lerp(lo.lower, hi.lower, scratch_.lower);
    lerp(lo.upper, hi.upper, scratch_.upper);
    scratch_.first_row_shift =
        lo.first_row_shift + w * (hi.first_row_shift - lo.first_row_shift);
    scratch_.time = t;
    return scratch_;
  }

 private:
  std::span<const ReducedSystem> family_;
  ReducedSystem scratch_;
};

}  // namespace

std::vector<NormSample> integrate_homogeneous(
    std::span<const ReducedSystem> family, std::span<const double> w0,
    std::span<const double> grid, const WeakErgodicCertificate& cert,
    double step_factor) {
  if (family.empty()) throw InvalidArgument("empty reduced-system family");
  if (grid.empty()) throw InvalidArgument("time grid is empty");
  const std::size_t n = family.front().size();
  if (w0.size() != n) {
    throw InvalidArgument(fmt::format(
        "w0 has length {}, reduced system has size {}", w0.size(), n));
  }
  double norm_bound = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    if (family[i].size() != n) {
      throw InvalidArgument("reduced systems differ in size");
    }
    if (i > 0 && !(family[i].time > family[i - 1].time)) {
      throw InvalidArgument("reduced-system times must be increasing");
    }
    norm_bound = std::max(norm_bound, family[i].l1_operator_norm());
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw InvalidArgument("time grid must be strictly increasing");
    }
  }
  if (family.size() > 1 &&
      (grid.front() < family.front().time - 1e-12 ||
       grid.back() > family.back().time + 1e-12)) {
    throw InvalidArgument("grid extends beyond the reduced-system family");
  }

  ReducedInterpolator interp(family);
  auto rhs = [&interp](double t, std::span<const double> y,
                       std::span<double> dydt) { interp.at(t).multiply(y, dydt); };

  std::vector<double> w(w0.begin(), w0.end());
  Rk4Workspace ws;
  std::vector<NormSample> out;
  out.reserve(grid.size());
  out.push_back({grid.front(), l1_norm(d_transform(w, cert))});

  const double h_max = norm_bound > 0.0
                           ? step_factor / norm_bound
                           : std::numeric_limits<double>::infinity();
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double t_begin = grid[g - 1];
    const double span_len = grid[g] - t_begin;
    if (norm_bound > 0.0) {
      const auto n_steps = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(span_len / h_max)));
      const double h = span_len / static_cast<double>(n_steps);
      if (!(h > 0.0) || t_begin + h == t_begin) {
        throw NumericalError(fmt::format("step underflow at t={}", t_begin));
      }
      for (std::size_t s = 0; s < n_steps; ++s) {
        const double t0 = t_begin + static_cast<double>(s) * h;
        const double t1 = s + 1 == n_steps
                              ? grid[g]
                              : t_begin + static_cast<double>(s + 1) * h;
        rk4_step(rhs, t0, t1, w, ws);
      }
    }
    const double norm = l1_norm(d_transform(w, cert));
    if (!std::isfinite(norm)) {
      throw NumericalError("homogeneous solution became non-finite");
    }
    out.push_back({grid[g], norm});
  }
  return out;
}

}  // namespace bdp
