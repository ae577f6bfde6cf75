// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdp {

/// Scratch buffers for the classical fourth-order Runge-Kutta step.
struct Rk4Workspace {
  std::vector<double> k1, k2, k3, k4, tmp;

  void resize(std::size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

/// One classical RK4 step of y' = rhs(t, y) from t to t_end = t + h, in place.
/// rhs(double, std::span<const double> y, std::span<double> dydt).
/// The end stage is evaluated at exactly t_end so callers can cache
/// time-dependent operators across consecutive steps.
template <class Rhs>
void rk4_step(Rhs&& rhs, double t, double t_end, std::vector<double>& y,
              Rk4Workspace& ws) {
  const std::size_t n = y.size();
  ws.resize(n);
  const double h = t_end - t;
  const double mid = t + 0.5 * h;

  rhs(t, std::span<const double>(y), std::span<double>(ws.k1));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + 0.5 * h * ws.k1[i];
  rhs(mid, std::span<const double>(ws.tmp), std::span<double>(ws.k2));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + 0.5 * h * ws.k2[i];
  rhs(mid, std::span<const double>(ws.tmp), std::span<double>(ws.k3));
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = y[i] + h * ws.k3[i];
  rhs(t_end, std::span<const double>(ws.tmp), std::span<double>(ws.k4));
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
  }
}

}  // namespace bdp
