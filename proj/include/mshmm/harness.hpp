#ifndef MSHMM_HARNESS_HPP
#define MSHMM_HARNESS_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

#include "mshmm/amplitude.hpp"
#include "mshmm/direct.hpp"
#include "mshmm/hmm.hpp"
#include "mshmm/spectral.hpp"

// Experiment drivers: the coupled three-integrator run on one shared
// Brownian path, the error metrics against the analytic coefficients, and
// convergence sweeps over the accuracy index p.

namespace mshmm {

/// Three slow-mode trajectories on one time grid and one Brownian path:
/// the micro-macro solver, the truncated effective SDE and the limit
/// effective SDE, plus the per-step estimator values.
struct CoupledRun {
  std::vector<double> times;
  std::vector<double> X_hmm, X_hom, X_inf;
  std::vector<double> abar, sigbar;
  long clamped_steps = 0;
  DivergenceEvent div_hmm, div_hom, div_inf;
};

inline CoupledRun trajectory_compare(const TruncatedSystem& system,
                                     const AmplitudeCoeffs& coeffs_M,
                                     const AmplitudeCoeffs& coeffs_inf,
                                     const HmmParams& params_in, std::uint64_t seed,
                                     double X0) {
  const HmmParams params = params_in.finalized();
  const HmmRun hmm = hmm_macro_run_diffusive(system, params, seed, X0);
  const Series hom = run_amplitude_em(coeffs_M, X0, params.dt_macro, params.n_macro, seed);
  const Series inf = run_amplitude_em(coeffs_inf, X0, params.dt_macro, params.n_macro, seed);

  CoupledRun run;
  run.times = hom.times;
  run.X_hmm = hmm.X;
  run.X_hom = hom.values;
  run.X_inf = inf.values;
  run.abar = hmm.abar;
  run.sigbar = hmm.sigbar;
  run.clamped_steps = hmm.clamped_steps;
  run.div_hmm = hmm.divergence;
  run.div_hom = hom.divergence;
  run.div_inf = inf.divergence;
  return run;
}

struct ErrorMetrics {
  double E_p = 0.0;
  double E_lp = 0.0;
};

/// Mean absolute deviation of the on-the-fly estimates from the analytic
/// coefficient functions along the trajectories:
///   E_p  : against the truncated coefficients at X_hom,
///   E_lp : against the limit coefficients at X_inf.
/// With mixed_eval the limit diffusion is evaluated at X_hom instead.
inline ErrorMetrics error_metrics(const CoupledRun& run,
                                  const AmplitudeCoeffs& coeffs_M,
                                  const AmplitudeCoeffs& coeffs_inf,
                                  bool mixed_eval = false) {
  const std::size_t n = run.abar.size();
  if (run.X_hom.size() != n + 1 || run.X_inf.size() != n + 1 || run.X_hmm.size() != n + 1)
    throw std::invalid_argument("error_metrics: trajectories do not share the grid");
  ErrorMetrics m;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [aM, sM] = amplitude_drift_diffusion(coeffs_M, run.X_hom[i]);
    m.E_p += std::abs(run.abar[i] - aM) + std::abs(run.sigbar[i] - sM);
    const auto [aI, sI] = amplitude_drift_diffusion(coeffs_inf, run.X_inf[i]);
    const double sRef =
        mixed_eval ? amplitude_drift_diffusion(coeffs_inf, run.X_hom[i]).second : sI;
    m.E_lp += std::abs(run.abar[i] - aI) + std::abs(run.sigbar[i] - sRef);
  }
  m.E_p /= static_cast<double>(n);
  m.E_lp /= static_cast<double>(n);
  return m;
}

struct SweepRow {
  int p = 0;
  int M = 0;
  double E_p = 0.0, E_lp = 0.0;
  double se_Ep = 0.0, se_Elp = 0.0;
  int seeds = 0;
  std::string status = "ok";
  double runtime_s = 0.0;
};

struct ConvergenceTable {
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  double dt_macro = 0.1;
  double T = 1.0;
  double X0 = 0.5;
  bool mixed_eval = false;
  double row_time_cap_s = 600.0;
  int workers = 0; // 0: from MSHMM_WORKERS env, else 1
};

inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MSHMM_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

/// One sweep over p at fixed truncation M: for each p the documented
/// schedule is built, the coupled run executed per seed and the metrics
/// aggregated as mean +- standard error. Rows whose schedule violates the
/// stability bound are annotated and skipped; a row exceeding the time cap
/// truncates the sweep.
inline ConvergenceTable convergence_sweep(const ModelSpec& model, int M,
                                          const std::vector<int>& ps,
                                          const std::vector<std::uint64_t>& seeds,
                                          const AmplitudeCoeffs& coeffs_M,
                                          const AmplitudeCoeffs& coeffs_inf,
                                          const SweepOptions& opts = {}) {
  if (ps.empty()) throw std::invalid_argument("convergence_sweep: empty p range");
  const TruncatedSystem system = build_truncated_system(model, M);
  const int workers = worker_count(opts.workers);

  ConvergenceTable table;
  for (int p : ps) {
    SweepRow row;
    row.p = p;
    row.M = M;
    row.seeds = static_cast<int>(seeds.size());
    HmmParams params;
    params.p = p;
    params.dt_macro = opts.dt_macro;
    params.n_macro = static_cast<int>(std::lround(opts.T / opts.dt_macro));
    const HmmParams fin = params.finalized();
    const auto t0 = std::chrono::steady_clock::now();
    if (fin.h * system.lambda_max() >= 2.0) {
      row.status = "unstable";
      table.rows.push_back(row);
      continue;
    }

    auto one_seed = [&](std::uint64_t seed) {
      const CoupledRun run = trajectory_compare(system, coeffs_M, coeffs_inf, fin, seed, opts.X0);
      if (run.div_hmm || run.div_hom || run.div_inf)
        throw std::runtime_error("diverged");
      return error_metrics(run, coeffs_M, coeffs_inf, opts.mixed_eval);
    };

    std::vector<ErrorMetrics> results(seeds.size());
    bool diverged = false;
    if (workers <= 1) {
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        try {
          results[i] = one_seed(seeds[i]);
        } catch (const std::runtime_error&) {
          diverged = true;
          break;
        }
      }
    } else {
      std::vector<std::future<ErrorMetrics>> futures;
      futures.reserve(seeds.size());
      for (std::size_t i = 0; i < seeds.size(); ++i)
        futures.push_back(std::async(std::launch::async, one_seed, seeds[i]));
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        try {
          results[i] = futures[i].get(); // fixed-order reduction
        } catch (const std::runtime_error&) {
          diverged = true;
        }
      }
    }
    if (diverged) {
      row.status = "diverged";
      table.rows.push_back(row);
      continue;
    }

    const auto ns = static_cast<double>(seeds.size());
    for (const auto& r : results) {
      row.E_p += r.E_p;
      row.E_lp += r.E_lp;
    }
    row.E_p /= ns;
    row.E_lp /= ns;
    if (seeds.size() > 1) {
      double vp = 0.0, vl = 0.0;
      for (const auto& r : results) {
        vp += (r.E_p - row.E_p) * (r.E_p - row.E_p);
        vl += (r.E_lp - row.E_lp) * (r.E_lp - row.E_lp);
      }
      row.se_Ep = std::sqrt(vp / (ns - 1.0) / ns);
      row.se_Elp = std::sqrt(vl / (ns - 1.0) / ns);
    }
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    table.rows.push_back(row);
    if (row.runtime_s > opts.row_time_cap_s) break; // graceful truncation
  }
  return table;
}

/// Least-squares slope of log2(values) against p; used by the convergence
/// assertions.
inline double log2_slope(const std::vector<int>& ps, const std::vector<double>& values) {
  if (ps.size() != values.size() || ps.size() < 2)
    throw std::invalid_argument("log2_slope: need matching series of length >= 2");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    mx += ps[i];
    my += std::log2(values[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double dx = ps[i] - mx;
    sxx += dx * dx;
    sxy += dx * (std::log2(values[i]) - my);
  }
  return sxy / sxx;
}

} // namespace mshmm

#endif // MSHMM_HARNESS_HPP
