#ifndef MSHMM_DIRECT_HPP
#define MSHMM_DIRECT_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mshmm/amplitude.hpp"
#include "mshmm/hmm.hpp"
#include "mshmm/rng.hpp"
#include "mshmm/sde.hpp"
#include "mshmm/spectral.hpp"

// Reference integrators: Euler-Maruyama for the scalar effective SDE, and
// brute-force integration of the full stiff fast-slow system at explicit
// epsilon. The stiff route exists as an oracle for moderate epsilon only;
// a step budget refuses runs that should use the micro-macro solver instead.

namespace mshmm {

/// Time series of one slow-mode integrator on the macro grid.
struct Series {
  std::vector<double> times;
  std::vector<double> values;
  DivergenceEvent divergence;
};

/// Euler-Maruyama for dX = drift dt + sigma dW with the analytic effective
/// coefficients. The Wiener increments come from the (seed, MacroNoise, 0, n)
/// streams, so runs with the same seed share the Brownian path with the
/// micro-macro solver.
inline Series run_amplitude_em(const AmplitudeCoeffs& coeffs, double X0, double dt,
                               int n, std::uint64_t seed) {
  Series out;
  out.times.reserve(static_cast<std::size_t>(n) + 1);
  out.values.reserve(static_cast<std::size_t>(n) + 1);
  out.times.push_back(0.0);
  out.values.push_back(X0);
  double X = X0;
  for (int i = 0; i < n; ++i) {
    const auto [drift, sigma] = amplitude_drift_diffusion(coeffs, X);
    const double z =
        RngStream(seed, StreamPurpose::MacroNoise, 0, static_cast<std::uint64_t>(i)).gaussian();
    X = euler_maruyama_step(X, drift, sigma, dt, z);
    out.times.push_back((i + 1) * dt);
    out.values.push_back(X);
    if (!std::isfinite(X)) {
      out.divergence = {true, i, "amplitude EM"};
      return out;
    }
  }
  return out;
}

struct DirectStiffOptions {
  double X0 = 0.5;
  double dt_macro = 0.1;      // subsampling grid for the returned series
  std::uint64_t budget = 1000000000ull; // max mode-steps
};

/// Explicit Euler-Maruyama on the full (x, y) system at the diffusive scale:
///   x += dt (a0 / eps + a1),   y += dt (-L y / eps^2 + b0 / eps + b1) + sqrt(dt) Q J / eps.
/// Requires dt lambda_max / eps^2 < 2 and a total mode-step count within the
/// budget. The slow component is returned subsampled to the macro grid.
inline Series run_direct_stiff(const TruncatedSystem& system, double epsilon,
                               double dt_micro, double T, std::uint64_t seed,
                               const DirectStiffOptions& opts = {}) {
  const int M = system.fast_dim();
  const double eps2 = epsilon * epsilon;
  if (dt_micro * system.lambda_max() / eps2 >= 2.0)
    throw StabilityError(system.lambda_max() / eps2, dt_micro);
  const auto steps_total = static_cast<std::uint64_t>(T / dt_micro) + 1;
  if (steps_total * static_cast<std::uint64_t>(M + 1) > opts.budget)
    throw std::runtime_error(
        "run_direct_stiff: step budget exceeded (" +
        std::to_string(steps_total * static_cast<std::uint64_t>(M + 1)) + " > " +
        std::to_string(opts.budget) + " mode-steps); use the micro-macro solver");

  const auto& lambda = system.lambda_fast();
  const auto& q = system.q_fast();
  RngStream rng(seed, StreamPurpose::Replica, 0, 0);

  Series out;
  out.times.push_back(0.0);
  out.values.push_back(opts.X0);

  double x = opts.X0;
  std::vector<double> y(static_cast<std::size_t>(M), 0.0);
  std::vector<double> ynew(static_cast<std::size_t>(M));
  std::vector<double> b0(static_cast<std::size_t>(M)), b1(static_cast<std::size_t>(M));
  const double sdt = std::sqrt(dt_micro);
  double t = 0.0;
  double next_sample = opts.dt_macro;
  long step = 0;
  while (t < T - 0.5 * dt_micro) {
    system.b0(x, y, b0);
    system.b1(y, b1);
    const double xdrift = system.a0(x, y) / epsilon + system.a1(x);
    for (int k = 0; k < M; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      ynew[ks] = y[ks] +
                 dt_micro * (-lambda[ks] * y[ks] / eps2 + b0[ks] / epsilon + b1[ks]) +
                 sdt / epsilon * q[ks] * rng.gaussian();
    }
    x += dt_micro * xdrift;
    y.swap(ynew);
    t += dt_micro;
    ++step;
    if (!std::isfinite(x) || !all_finite(y)) {
      out.divergence = {true, step, "direct stiff"};
      return out;
    }
    if (t >= next_sample - 0.5 * dt_micro) {
      out.times.push_back(t);
      out.values.push_back(x);
      next_sample += opts.dt_macro;
    }
  }
  return out;
}

/// Mode-sum reconstruction u(x_i, t_n) = X_n sin(x_i) + sum_k Y_{k,n} sin(k x_i)
/// of the spatial field on a grid in [0, pi]. fast_modes may be empty; when
/// present it is indexed fast_modes[n][k-2] for global mode k.
inline std::vector<std::vector<double>>
reconstruct_field(const std::vector<double>& slow,
                  const std::vector<std::vector<double>>& fast_modes,
                  const std::vector<double>& grid) {
  for (double xg : grid)
    if (xg < 0.0 || xg > 3.14159265358979323846 + 1e-12)
      throw std::invalid_argument("reconstruct_field: grid point outside [0, pi]");
  std::vector<std::vector<double>> u(slow.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t n = 0; n < slow.size(); ++n) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double v = slow[n] * std::sin(grid[i]);
      if (!fast_modes.empty()) {
        const auto& yn = fast_modes[n];
        for (std::size_t k = 0; k < yn.size(); ++k)
          v += yn[k] * std::sin((static_cast<double>(k) + 2.0) * grid[i]);
      }
      u[n][i] = v;
    }
  }
  return u;
}

} // namespace mshmm

#endif // MSHMM_DIRECT_HPP
