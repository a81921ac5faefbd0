#pragma once

#include <array>
#include <cstddef>

namespace ucrcd {

/// One classical fourth-order Runge-Kutta step of size h for an N-dimensional
/// autonomous-or-not system `rhs(t, state) -> derivative`.
template <std::size_t N, typename Rhs>
std::array<double, N> rk4_step(const Rhs& rhs, double t, const std::array<double, N>& x, double h) {
  auto axpy = [](const std::array<double, N>& a, double s, const std::array<double, N>& b) {
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i] + s * b[i];
    return out;
  };
  const double half = 0.5 * h;
  const auto k1 = rhs(t, x);
  const auto k2 = rhs(t + half, axpy(x, half, k1));
  const auto k3 = rhs(t + half, axpy(x, half, k2));
  const auto k4 = rhs(t + h, axpy(x, h, k3));
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

/// Integrates from t0 to t1 with `steps` equal RK4 steps.
template <std::size_t N, typename Rhs>
std::array<double, N> rk4_integrate(const Rhs& rhs, double t0, double t1, std::array<double, N> x,
                                    std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    x = rk4_step<N>(rhs, t0 + static_cast<double>(i) * h, x, h);
  }
  return x;
}

}  // namespace ucrcd
