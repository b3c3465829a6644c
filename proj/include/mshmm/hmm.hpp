#ifndef MSHMM_HMM_HPP
#define MSHMM_HMM_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mshmm/rng.hpp"
#include "mshmm/sde.hpp"
#include "mshmm/spectral.hpp"

// Micro-macro solver for the truncated fast-slow system. Each macro step
// freezes the slow state, runs short bursts of the fast dynamics and
// recovers the effective drift and diffusion from time-ensemble averages;
// the macro integrator is explicit Euler(-Maruyama).
//
// The diffusive-scale recursions are written in the dimensionless micro step
// h = (micro step) / epsilon^2, so no scale-separation parameter is needed.
// The advective scale keeps an explicit epsilon through h = (micro step) / epsilon.

namespace mshmm {

/// Micro/macro parameter schedule. With only the accuracy index p set,
/// finalize() fills the standard schedule h = 2^-p, L = 2^{3p}, L' = p 2^p,
/// lT = 16, K = 1.
struct HmmParams {
  int p = 4;
  double h = 0.0;     // dimensionless micro step; 2^-p when unset
  int K = 1;          // samples
  long L = 0;         // averaging window; 2^{3p} when unset
  long Lp = 0;        // lag window; p 2^p when unset
  long lT = 16;       // transient micro steps skipped
  double dt_macro = 0.1;
  int n_macro = 10;
  double epsilon = 0.0;    // advective scale only
  bool include_b1 = false; // include the linear fast drift in the burst

  HmmParams finalized() const {
    HmmParams out = *this;
    if (out.h <= 0.0) out.h = std::pow(2.0, -p);
    if (out.L <= 0) out.L = 1L << (3 * p);
    if (out.Lp <= 0) out.Lp = static_cast<long>(p) << p;
    if (out.lT < 1 || out.K < 1 || out.L < 1 || out.Lp < 1)
      throw std::invalid_argument("HmmParams: window sizes and K must be >= 1");
    return out;
  }
};

/// Thrown when the micro chain would be unstable (h * lambda_max >= 2).
struct StabilityError : std::runtime_error {
  StabilityError(double lambda_, double h_)
      : std::runtime_error("micro step h = " + std::to_string(h_) +
                           " unstable for eigenvalue " + std::to_string(lambda_) +
                           " (need h < " + std::to_string(2.0 / lambda_) + ")"),
        lambda(lambda_), h(h_) {}
  double lambda, h;
};

/// Largest stable dimensionless micro step, 2 / lambda_max over the M fast modes.
inline double stability_max_step(const EigenSpectrum& spectrum, int M) {
  double lmax = 0.0;
  for (int i = 1; i <= M; ++i)
    lmax = std::max(lmax, spectrum.lambda(spectrum.null_dim + i));
  return 2.0 / lmax;
}

inline void check_stability(const TruncatedSystem& system, double h) {
  const double lmax = system.lambda_max();
  if (!(h > 0.0) || h * lmax >= 2.0) throw StabilityError(lmax, h);
}

/// Final micro states carried across macro steps (warm restart).
struct MicroState {
  std::vector<double> y1, y2;
};

/// One burst of the auxiliary fast system: the OU path y1 and the forced
/// correction path y2, stored flat as path[l * M + k].
struct MicroPaths {
  long P1 = 0, P2 = 0; // path lengths (state count, including index 0)
  int M = 0;
  std::vector<double> y1, y2;
  DivergenceEvent divergence;
};

/// Marches the auxiliary pair with the slow state frozen at X:
///   y1 <- (1 - h L) y1 + sqrt(h) Q J         (lT + L + L' - 1 steps)
///   y2 <- (1 - h L) y2 + h b0(X, y1)         (lT + L - 1 steps)
/// starting from `state` (zeros when empty) and leaving the final states in
/// it for the next macro step.
inline MicroPaths micro_solve_diffusive(const TruncatedSystem& system, double X,
                                        const HmmParams& params, MicroState& state,
                                        RngStream rng) {
  check_stability(system, params.h);
  const int M = system.fast_dim();
  const double h = params.h;
  const double sh = std::sqrt(h);
  const auto& lambda = system.lambda_fast();
  const auto& q = system.q_fast();

  MicroPaths out;
  out.M = M;
  out.P1 = params.lT + params.L + params.Lp;
  out.P2 = params.lT + params.L;
  out.y1.assign(static_cast<std::size_t>(out.P1) * M, 0.0);
  out.y2.assign(static_cast<std::size_t>(out.P2) * M, 0.0);

  if (state.y1.empty()) state.y1.assign(static_cast<std::size_t>(M), 0.0);
  if (state.y2.empty()) state.y2.assign(static_cast<std::size_t>(M), 0.0);
  for (int k = 0; k < M; ++k) {
    out.y1[static_cast<std::size_t>(k)] = state.y1[static_cast<std::size_t>(k)];
    out.y2[static_cast<std::size_t>(k)] = state.y2[static_cast<std::size_t>(k)];
  }

  std::vector<double> b(static_cast<std::size_t>(M));
  std::vector<double> b1v(static_cast<std::size_t>(M));
  for (long l = 0; l + 1 < out.P1; ++l) {
    const double* y1l = &out.y1[static_cast<std::size_t>(l) * M];
    double* y1n = &out.y1[static_cast<std::size_t>(l + 1) * M];
    for (int k = 0; k < M; ++k)
      y1n[k] = (1.0 - h * lambda[static_cast<std::size_t>(k)]) * y1l[k] +
               sh * q[static_cast<std::size_t>(k)] * rng.gaussian();
    if (l + 1 < out.P2) {
      const double* y2l = &out.y2[static_cast<std::size_t>(l) * M];
      double* y2n = &out.y2[static_cast<std::size_t>(l + 1) * M];
      system.b0(X, {y1l, static_cast<std::size_t>(M)}, b);
      if (params.include_b1 && params.epsilon > 0.0) {
        system.b1({y1l, static_cast<std::size_t>(M)}, b1v);
        for (int k = 0; k < M; ++k) b[static_cast<std::size_t>(k)] += params.epsilon * b1v[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < M; ++k) {
        y2n[k] = (1.0 - h * lambda[static_cast<std::size_t>(k)]) * y2l[k] +
                 h * b[static_cast<std::size_t>(k)];
        if (!std::isfinite(y2n[k])) {
          out.divergence = {true, l + 1, "micro y2"};
          return out;
        }
      }
    }
  }
  if (!all_finite(out.y1)) {
    out.divergence = {true, out.P1 - 1, "micro y1"};
    return out;
  }
  for (int k = 0; k < M; ++k) {
    state.y1[static_cast<std::size_t>(k)] = out.y1[static_cast<std::size_t>(out.P1 - 1) * M + k];
    state.y2[static_cast<std::size_t>(k)] = out.y2[static_cast<std::size_t>(out.P2 - 1) * M + k];
  }
  return out;
}

/// Effective macro coefficients recovered from one set of bursts.
struct EffectiveCoeffs {
  double abar = 0.0;
  double sigbar2 = 0.0;
  bool clamped = false;
};

/// Time-ensemble estimator at frozen slow state X:
///   abar    = mean of a1 + (d_y a0) y2 over the window
///           + h * lagged correlation of (d_x a0) with a0,
///   sigbar2 = 2 h * lagged correlation of a0 with itself,
/// windows l in [lT, lT+L-1], lags l' in [0, L'], averaged over samples.
/// A negative variance estimate is clamped to zero with the flag set.
inline EffectiveCoeffs
estimate_effective_coeffs(const TruncatedSystem& system, double X,
                          const HmmParams& params,
                          const std::vector<MicroPaths>& bursts) {
  const int M = system.fast_dim();
  const long L = params.L, Lp = params.Lp, lT = params.lT;
  double sumA1 = 0.0, sumA2 = 0.0, sumA3 = 0.0, sumSig = 0.0;

  std::vector<double> a0v, dxa0v, dya0(static_cast<std::size_t>(M));
  for (const auto& paths : bursts) {
    if (paths.P1 < lT + L + Lp || paths.P2 < lT + L)
      throw std::invalid_argument("estimate_effective_coeffs: window exceeds path length");
    const long top = lT + L - 1 + Lp; // largest y1 index touched
    a0v.assign(static_cast<std::size_t>(top) + 1, 0.0);
    dxa0v.assign(static_cast<std::size_t>(top) + 1, 0.0);
    for (long i = lT; i <= top; ++i) {
      std::span<const double> y1{&paths.y1[static_cast<std::size_t>(i) * M],
                                 static_cast<std::size_t>(M)};
      a0v[static_cast<std::size_t>(i)] = system.a0(X, y1);
      dxa0v[static_cast<std::size_t>(i)] = system.dx_a0(X, y1);
    }

    // Sliding lag-window sums over l' = 0..Lp.
    double winDx = 0.0, winA0 = 0.0;
    for (long i = lT; i <= lT + Lp; ++i) {
      winDx += dxa0v[static_cast<std::size_t>(i)];
      winA0 += a0v[static_cast<std::size_t>(i)];
    }
    for (long l = lT; l <= lT + L - 1; ++l) {
      std::span<const double> y1{&paths.y1[static_cast<std::size_t>(l) * M],
                                 static_cast<std::size_t>(M)};
      std::span<const double> y2{&paths.y2[static_cast<std::size_t>(l) * M],
                                 static_cast<std::size_t>(M)};
      sumA1 += system.a1(X);
      system.dy_a0(X, y1, dya0);
      double dot = 0.0;
      for (int k = 0; k < M; ++k)
        dot += dya0[static_cast<std::size_t>(k)] * y2[static_cast<std::size_t>(k)];
      sumA2 += dot;
      sumA3 += a0v[static_cast<std::size_t>(l)] * winDx;
      sumSig += a0v[static_cast<std::size_t>(l)] * winA0;
      if (l + 1 <= lT + L - 1) {
        winDx += dxa0v[static_cast<std::size_t>(l + 1 + Lp)] - dxa0v[static_cast<std::size_t>(l)];
        winA0 += a0v[static_cast<std::size_t>(l + 1 + Lp)] - a0v[static_cast<std::size_t>(l)];
      }
    }
  }

  const double norm = 1.0 / (static_cast<double>(params.K) * static_cast<double>(L));
  EffectiveCoeffs out;
  out.abar = norm * (sumA1 + sumA2 + params.h * sumA3);
  out.sigbar2 = norm * 2.0 * params.h * sumSig;
  if (out.sigbar2 < 0.0) {
    out.sigbar2 = 0.0;
    out.clamped = true;
  }
  return out;
}

/// One macro trajectory with per-step effective-coefficient estimates.
struct HmmRun {
  std::vector<double> times;  // n_macro + 1 grid points
  std::vector<double> X;      // macro states on the grid
  std::vector<double> abar;   // estimate used on step n (size n_macro)
  std::vector<double> sigbar; // sqrt of the clamped variance estimate
  long clamped_steps = 0;
  DivergenceEvent divergence;
};

/// Diffusive-scale micro-macro run:
///   X_{n+1} = X_n + dt abar_n + sigbar_n dW_n,
/// with warm-restarted bursts per sample and the macro increments dW_n drawn
/// from the (seed, MacroNoise, 0, n) streams shared with the reference
/// integrators.
inline HmmRun hmm_macro_run_diffusive(const TruncatedSystem& system,
                                      const HmmParams& params_in,
                                      std::uint64_t seed, double X0) {
  const HmmParams params = params_in.finalized();
  check_stability(system, params.h);

  HmmRun run;
  run.times.reserve(static_cast<std::size_t>(params.n_macro) + 1);
  run.X.reserve(static_cast<std::size_t>(params.n_macro) + 1);
  run.times.push_back(0.0);
  run.X.push_back(X0);

  std::vector<MicroState> states(static_cast<std::size_t>(params.K));
  std::vector<MicroPaths> bursts(static_cast<std::size_t>(params.K));
  double X = X0;
  const double sdt = std::sqrt(params.dt_macro);
  for (int n = 0; n < params.n_macro; ++n) {
    for (int j = 0; j < params.K; ++j) {
      bursts[static_cast<std::size_t>(j)] = micro_solve_diffusive(
          system, X, params, states[static_cast<std::size_t>(j)],
          RngStream(seed, StreamPurpose::MicroNoise, static_cast<std::uint64_t>(j),
                    static_cast<std::uint64_t>(n)));
      if (bursts[static_cast<std::size_t>(j)].divergence) {
        run.divergence = bursts[static_cast<std::size_t>(j)].divergence;
        run.divergence.stage += " (macro step " + std::to_string(n) + ")";
        return run;
      }
    }
    const EffectiveCoeffs est = estimate_effective_coeffs(system, X, params, bursts);
    if (est.clamped) ++run.clamped_steps;
    const double sig = std::sqrt(est.sigbar2);
    const double dW =
        sdt * RngStream(seed, StreamPurpose::MacroNoise, 0, static_cast<std::uint64_t>(n)).gaussian();
    X = X + params.dt_macro * est.abar + sig * dW;
    run.abar.push_back(est.abar);
    run.sigbar.push_back(sig);
    run.times.push_back((n + 1) * params.dt_macro);
    run.X.push_back(X);
    if (!std::isfinite(X)) {
      run.divergence = {true, n, "macro state"};
      return run;
    }
  }
  return run;
}

/// Advective-scale burst: the full fast equation with the slow state frozen,
///   y <- (1 - h L) y + eps h b(X, y) + sqrt(h) Q J,
/// h = (micro step) / eps. Returns the y path (lT + L states); warm restart
/// through `state` as in the diffusive case.
inline MicroPaths micro_solve_advective(const TruncatedSystem& system, double X,
                                        const HmmParams& params, MicroState& state,
                                        RngStream rng) {
  check_stability(system, params.h);
  const int M = system.fast_dim();
  const double h = params.h, eps = params.epsilon;
  const double sh = std::sqrt(h);
  const auto& lambda = system.lambda_fast();
  const auto& q = system.q_fast();

  MicroPaths out;
  out.M = M;
  out.P1 = params.lT + params.L;
  out.y1.assign(static_cast<std::size_t>(out.P1) * M, 0.0);
  if (state.y1.empty()) state.y1.assign(static_cast<std::size_t>(M), 0.0);
  for (int k = 0; k < M; ++k)
    out.y1[static_cast<std::size_t>(k)] = state.y1[static_cast<std::size_t>(k)];

  std::vector<double> b(static_cast<std::size_t>(M)), b1v(static_cast<std::size_t>(M));
  for (long l = 0; l + 1 < out.P1; ++l) {
    const double* yl = &out.y1[static_cast<std::size_t>(l) * M];
    double* yn = &out.y1[static_cast<std::size_t>(l + 1) * M];
    system.b0(X, {yl, static_cast<std::size_t>(M)}, b);
    system.b1({yl, static_cast<std::size_t>(M)}, b1v);
    for (int k = 0; k < M; ++k) {
      const double bk = b[static_cast<std::size_t>(k)] + eps * b1v[static_cast<std::size_t>(k)];
      yn[k] = (1.0 - h * lambda[static_cast<std::size_t>(k)]) * yl[k] + eps * h * bk +
              sh * q[static_cast<std::size_t>(k)] * rng.gaussian();
      if (!std::isfinite(yn[k])) {
        out.divergence = {true, l + 1, "micro y"};
        return out;
      }
    }
  }
  for (int k = 0; k < M; ++k)
    state.y1[static_cast<std::size_t>(k)] = out.y1[static_cast<std::size_t>(out.P1 - 1) * M + k];
  return out;
}

/// Advective-scale run: deterministic macro update X_{n+1} = X_n + dt abar_n
/// with abar_n the window average of the full slow drift a0 + eps a1.
inline HmmRun hmm_macro_run_advective(const TruncatedSystem& system,
                                      const HmmParams& params_in,
                                      std::uint64_t seed, double X0) {
  const HmmParams params = params_in.finalized();
  check_stability(system, params.h);

  HmmRun run;
  run.times.push_back(0.0);
  run.X.push_back(X0);

  std::vector<MicroState> states(static_cast<std::size_t>(params.K));
  double X = X0;
  for (int n = 0; n < params.n_macro; ++n) {
    double acc = 0.0;
    for (int j = 0; j < params.K; ++j) {
      const MicroPaths paths = micro_solve_advective(
          system, X, params, states[static_cast<std::size_t>(j)],
          RngStream(seed, StreamPurpose::MicroNoise, static_cast<std::uint64_t>(j),
                    static_cast<std::uint64_t>(n)));
      if (paths.divergence) {
        run.divergence = paths.divergence;
        run.divergence.stage += " (macro step " + std::to_string(n) + ")";
        return run;
      }
      for (long l = params.lT; l <= params.lT + params.L - 1; ++l) {
        std::span<const double> y{&paths.y1[static_cast<std::size_t>(l) * paths.M],
                                  static_cast<std::size_t>(paths.M)};
        acc += system.a0(X, y) + params.epsilon * system.a1(X);
      }
    }
    const double abar = acc / (static_cast<double>(params.K) * static_cast<double>(params.L));
    X = X + params.dt_macro * abar;
    run.abar.push_back(abar);
    run.sigbar.push_back(0.0);
    run.times.push_back((n + 1) * params.dt_macro);
    run.X.push_back(X);
    if (!std::isfinite(X)) {
      run.divergence = {true, n, "macro state"};
      return run;
    }
  }
  return run;
}

} // namespace mshmm

#endif // MSHMM_HMM_HPP
