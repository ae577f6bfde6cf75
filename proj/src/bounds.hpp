// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "projection.hpp"

namespace bdp {

/// Column functional max_i (h_ii + sum_{j != i} |h_ji|) of a square matrix
/// given column-major. For a bounded linear operator on l1 this is its
/// logarithmic norm; it bounds the growth rate of ||y|| for y' = H y.
double log_norm(std::span<const double> column_major, std::size_t n);

/// Null-ergodic certificate for one coordinate, valid when death_hi < birth_lo.
/// Under the weighting delta_n = sigma^n the projected marginal satisfies
/// ||x~(t)|| <= exp(-alpha_star t) ||x~(0)||.
struct NullErgodicCertificate {
  std::size_t coordinate = 0;
  double sigma = 0.0;       // sqrt(M_j / l_j)
  double alpha_star = 0.0;  // (sqrt(l_j) - sqrt(M_j))^2
};

/// Weak-ergodic certificate, valid when birth_hi < death_lo and alpha_low > 0.
/// With d_{k+1} = beta^k the homogeneous reduced system satisfies
/// ||D w(t)|| <= exp(-alpha_low t) ||D w(0)||.
struct WeakErgodicCertificate {
  std::size_t coordinate = 0;
  double beta = 0.0;       // sqrt(M_j / L_j)
  double alpha_low = 0.0;  // l_j + death_lo_j - 2 sqrt(L_j M_j)
};

/// Throws NotApplicable when death_hi >= birth_lo.
NullErgodicCertificate null_certificate(const RateBounds& bounds,
                                        std::size_t coordinate);

/// Throws NotApplicable naming the failed condition (birth_hi >= death_lo,
/// or alpha_low <= 0).
WeakErgodicCertificate weak_certificate(const RateBounds& bounds,
                                        std::size_t coordinate);

/// x~_n = sigma^n x_n.
std::vector<double> lambda_transform(std::span<const double> x,
                                     const NullErgodicCertificate& cert);

/// (D w)_i = beta^(i-1) sum_{j >= i} w_j for i = 1..K, computed as a suffix
/// sum in O(K).
std::vector<double> d_transform(std::span<const double> w,
                                const WeakErgodicCertificate& cert);

/// min(1, sigma^(k-n) exp(-alpha_star t)): bound on Pr(X_j(t) <= n | X_j(0) = k).
double tail_probability_bound(const NullErgodicCertificate& cert, int k, int n,
                              double t);

/// inf over defined k of lambda_k + mu_k - sigma lambda_k - mu_k / sigma.
double infimum_margin_null(const EffectiveRates& rates,
                           const NullErgodicCertificate& cert);

/// inf over i = 0..K-1 of lambda_i + mu_{i+1} - beta lambda_{i+1} - mu_i / beta.
double infimum_margin_weak(const EffectiveRates& rates,
                           const WeakErgodicCertificate& cert);

struct NormSample {
  double time = 0.0;
  double norm = 0.0;
};

struct DecayPoint {
  double time = 0.0;
  double norm = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  bool pass = true;
};

struct DecayReport {
  bool pass = true;
  double rate = 0.0;
  double slack = 0.0;
  double worst_ratio = 0.0;
  double worst_time = 0.0;
  std::vector<DecayPoint> points;
};

/// Checks v_i <= exp(-rate t_i) v_0 (1 + slack) relative to the first sample.
/// ratio = v_i / (exp(-rate t_i) v_0).
DecayReport verify_decay(std::span<const NormSample> series, double rate,
                         double slack);

/// Integrates dw/dt = B(t) w with the RK4 stepper used for the full chain.
/// B(t) is linearly interpolated between the supplied snapshots (which stays
/// inside the admissible rate box because the bounds are convex). Returns
/// ||D w(t)|| at every grid point.
std::vector<NormSample> integrate_homogeneous(
    std::span<const ReducedSystem> family, std::span<const double> w0,
    std::span<const double> grid, const WeakErgodicCertificate& cert,
    double step_factor = 0.1);

}  // namespace bdp
