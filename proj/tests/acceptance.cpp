// End-to-end acceptance checks. Each numbered check prints exactly one
// PASS/FAIL line; the process exits nonzero if any check fails.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mshmm/config.hpp"
#include "mshmm/harness.hpp"

using namespace mshmm;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const auto unit_q = [](int) { return 1.0; };

// 1. Two-fast-mode coefficient table, exact to 1e-9.
void check_coefficients() {
  const auto c = burgers_homog_coeffs(unit_q, 0.0, 2);
  const bool ok = std::abs(c.A - 0.003735726834) < 1e-9 &&
                  std::abs(c.C - 0.0002593873518) < 1e-9;
  report(1, ok, "coefficient table M=2: A=" + fmt(c.A) + " C=" + fmt(c.C));
}

// 2. Tail-summed limit coefficients to 1e-7.
void check_limit_coefficients() {
  const auto c = burgers_homog_coeffs_limit(unit_q, 0.0);
  const bool ok =
      std::abs(c.A - 0.0026744369) < 1e-7 && std::abs(c.C - 0.00026592835) < 1e-7;
  report(2, ok, "limit coefficients: A=" + fmt(c.A) + " C=" + fmt(c.C));
}

// 3. Estimator convergence over the accuracy index for the 2-fast-mode
// truncation. p = 1, 2 violate the explicit-Euler stability bound
// (h lambda_max >= 2 at lambda_max = 8) and must be reported unstable; the
// decrease and slope are asserted on the stable rows p = 3..5.
void check_estimator_convergence() {
  const auto model = burgers_model(2);
  const auto cM = burgers_homog_coeffs(unit_q, 0.0, 2);
  const auto ci = burgers_homog_coeffs_limit(unit_q, 0.0);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 8; ++i) seeds.push_back(100 + static_cast<std::uint64_t>(i));
  SweepOptions opts;
  opts.workers = 1;
  const auto table = convergence_sweep(model, 2, {1, 2, 3, 4, 5}, seeds, cM, ci, opts);

  bool ok = table.rows.size() == 5 && table.rows[0].status == "unstable" &&
            table.rows[1].status == "unstable";
  std::vector<int> ps;
  std::vector<double> es;
  for (const auto& row : table.rows)
    if (row.status == "ok") {
      ps.push_back(row.p);
      es.push_back(row.E_p);
    }
  ok = ok && ps.size() == 3;
  for (std::size_t i = 0; ok && i + 1 < es.size(); ++i) ok = es[i + 1] < es[i];
  double slope = 0.0;
  if (ok) {
    slope = log2_slope(ps, es);
    ok = slope >= -1.4 && slope <= -0.6;
  }
  std::string detail = "estimator convergence: ";
  for (std::size_t i = 0; i < ps.size(); ++i)
    detail += "E_" + std::to_string(ps[i]) + "=" + fmt(es[i]) + " ";
  detail += "slope=" + fmt(slope) + " (p=1,2 unstable)";
  report(3, ok, detail);
}

// 4. Deviation from the limit coefficients is nonincreasing in the
// truncation level, within one standard error.
void check_truncation_gap() {
  const auto ci = burgers_homog_coeffs_limit(unit_q, 0.0);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < 16; ++i) seeds.push_back(100 + static_cast<std::uint64_t>(i));
  std::vector<double> means, ses;
  for (int M = 2; M <= 4; ++M) {
    const auto model = burgers_model(M);
    const auto cM = burgers_homog_coeffs(unit_q, 0.0, M);
    const TruncatedSystem sys = build_truncated_system(model, M);
    HmmParams params;
    params.p = 4;
    params.n_macro = 10;
    const auto fin = params.finalized();
    std::vector<double> es;
    double m = 0.0;
    for (auto s : seeds) {
      const auto run = trajectory_compare(sys, cM, ci, fin, s, 0.5);
      const auto em = error_metrics(run, cM, ci);
      es.push_back(em.E_lp);
      m += em.E_lp;
    }
    m /= static_cast<double>(es.size());
    double v = 0.0;
    for (double e : es) v += (e - m) * (e - m);
    means.push_back(m);
    ses.push_back(std::sqrt(v / (es.size() - 1.0) / static_cast<double>(es.size())));
  }
  bool ok = true;
  for (std::size_t i = 0; i + 1 < means.size(); ++i)
    ok = ok && means[i + 1] <= means[i] + ses[i] + ses[i + 1];
  report(4, ok,
         "truncation gap at p=4: E_l(M=2)=" + fmt(means[0]) + " E_l(M=3)=" +
             fmt(means[1]) + " E_l(M=4)=" + fmt(means[2]) + " (1 SE allowance)");
}

// 5. Stability boundary at M = 4 (lambda_max = 24).
void check_stability_boundary() {
  const auto model = burgers_model(4);
  const TruncatedSystem sys = build_truncated_system(model, 4);
  bool tripped = false;
  try {
    HmmParams p;
    p.h = 0.125;
    p.n_macro = 10;
    const auto run = hmm_macro_run_diffusive(sys, p, 1, 0.5);
    tripped = static_cast<bool>(run.divergence);
  } catch (const StabilityError&) {
    tripped = true;
  }
  bool stable_ok = false;
  try {
    HmmParams p;
    p.p = 4; // h = 1/16
    p.n_macro = 10;
    const auto run = hmm_macro_run_diffusive(sys, p, 1, 0.5);
    stable_ok = !run.divergence;
  } catch (const StabilityError&) {
  }
  report(5, tripped && stable_ok,
         "stability boundary M=4: h=1/8 rejected, h=1/16 completes");
}

// 6. Micro-solver law: the explicit chain's sample variance matches
// q^2 / (lambda (2 - lambda h)).
void check_micro_law() {
  const double lambda = 3.0, q = 1.0, h = 0.125;
  const double a = 1.0 - lambda * h;
  const double target = ou_stationary_variance(lambda, q, h);
  const long n = 1000000, burn = 1000;
  RngStream rng(2024, StreamPurpose::General);
  double y = 0.0, sum = 0.0;
  for (long i = 0; i < burn + n; ++i) {
    y = a * y + std::sqrt(h) * q * rng.gaussian();
    if (i >= burn) sum += y * y;
  }
  const double var = sum / static_cast<double>(n);
  // autocorrelated samples: Var(mean of y^2) = 2 var^2 (1+a^2)/(1-a^2) / n
  const double se =
      target * std::sqrt(2.0 * (1.0 + a * a) / (1.0 - a * a) / static_cast<double>(n));
  const bool ok = std::abs(var - target) < 3.0 * se;
  report(6, ok,
         "micro chain variance=" + fmt(var) + " target=" + fmt(target) +
             " (3 SE = " + fmt(3.0 * se) + ")");
}

// 7. Averaged-scale oracle: custom model with D = E = 1 tracks tan(t).
void check_advective_oracle() {
  ModelConfig mc;
  mc.name = "custom";
  mc.M = 2;
  mc.lambda = {0.0, 2.0, 5.0};
  mc.q = {0.0, 1.0, 1.0};
  mc.tensor_entries = {{1, 1, 1, 1.0}, {2, 2, 1, 2.0}, {3, 3, 1, 5.0}};
  const auto spec = build_model(mc);
  const TruncatedSystem sys = build_truncated_system(spec, 2);
  const auto avg = averaged_coeffs(spec.spectrum, spec.noise, spec.tensor, 0.0, 2);

  auto max_err = [&](int p) {
    HmmParams params;
    params.p = p;
    params.dt_macro = 0.01;
    params.n_macro = 100;
    params.epsilon = 1e-3;
    const auto run = hmm_macro_run_advective(sys, params, 7, 0.0);
    double e = 0.0;
    for (std::size_t i = 0; i < run.times.size(); ++i)
      e = std::max(e, std::abs(run.X[i] - averaged_closed_form(avg, 0.0, run.times[i])));
    return e;
  };
  const double e4 = max_err(4), e5 = max_err(5), e6 = max_err(6);
  const bool ok = e6 <= 0.05 && e6 < e5 && e5 < e4;
  report(7, ok,
         "averaged-scale run vs tan(t): err(p=4)=" + fmt(e4) + " err(p=5)=" + fmt(e5) +
             " err(p=6)=" + fmt(e6));
}

// 8. Weak homogenization consistency: second moment at T = 1 of the direct
// stiff simulation vs the effective SDE, within combined 2 SE.
void check_weak_consistency() {
  const auto model = burgers_model(2);
  const TruncatedSystem sys = build_truncated_system(model, 2);
  const auto coeffs =
      homog_coeffs_modes(model.spectrum, model.noise, model.tensor, 0.0, 3);

  const int R = 200;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < R; ++r) {
    DirectStiffOptions opts;
    opts.X0 = 0.5;
    const auto s = run_direct_stiff(sys, 0.05, 2.5e-4, 1.0,
                                    1000 + static_cast<std::uint64_t>(r), opts);
    if (s.divergence) {
      report(8, false, "direct stiff run diverged");
      return;
    }
    const double x2 = s.values.back() * s.values.back();
    sum += x2;
    sum2 += x2 * x2;
  }
  const double md = sum / R;
  const double sed = std::sqrt((sum2 / R - md * md) / R);

  const int RA = 4000;
  const double dt = 1e-3;
  double sa = 0.0, sa2 = 0.0;
  for (int r = 0; r < RA; ++r) {
    RngStream g(555 + static_cast<std::uint64_t>(r), StreamPurpose::Replica, 1, 0);
    double X = 0.5;
    for (int i = 0; i < 1000; ++i) {
      const auto [a, s] = amplitude_drift_diffusion(coeffs, X);
      X = euler_maruyama_step(X, a, s, dt, g.gaussian());
    }
    sa += X * X;
    sa2 += X * X * X * X;
  }
  const double ma = sa / RA;
  const double sea = std::sqrt((sa2 / RA - ma * ma) / RA);

  const double diff = std::abs(md - ma);
  const double band = 2.0 * std::sqrt(sed * sed + sea * sea);
  report(8, diff < band,
         "weak consistency: direct E[X_T^2]=" + fmt(md) + " effective=" + fmt(ma) +
             " |diff|=" + fmt(diff) + " band=" + fmt(band));
}

// 9. Replaying a run command from its manifest reproduces the files byte-
// identically.
void check_determinism(const std::string& self) {
  const auto slash = self.find_last_of('/');
  const std::string dir = slash == std::string::npos ? "." : self.substr(0, slash);
  const std::string cli = dir + "/mshmm_cli";
  const std::string tmp = dir + "/acceptance_tmp";
  if (std::system(("mkdir -p " + tmp).c_str()) != 0) {
    report(9, false, "could not create scratch directory");
    return;
  }

  RunConfig cfg;
  cfg.seed = 9;
  {
    std::ofstream f(tmp + "/cfg.json");
    f << to_json(cfg).dump(2) << "\n";
  }
  auto run = [&](const std::string& cfgfile, const std::string& out) {
    return std::system(
        (cli + " --config " + cfgfile + " --out " + out + " run > /dev/null").c_str());
  };
  bool ok = run(tmp + "/cfg.json", tmp + "/a.csv") == 0;
  if (ok) {
    // extract the config block from the manifest and replay
    std::ifstream m(tmp + "/a.csv.manifest.json");
    nlohmann::json manifest;
    m >> manifest;
    std::ofstream f(tmp + "/cfg2.json");
    f << manifest["config"].dump(2) << "\n";
  }
  ok = ok && run(tmp + "/cfg2.json", tmp + "/b.csv") == 0;
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  if (ok) {
    const auto a = slurp(tmp + "/a.csv"), b = slurp(tmp + "/b.csv");
    ok = !a.empty() && a == b &&
         slurp(tmp + "/a.csv.manifest.json") == slurp(tmp + "/b.csv.manifest.json");
  }
  report(9, ok, "manifest replay reproduces run output byte-identically");
}

} // namespace

int main(int, char** argv) {
  check_coefficients();
  check_limit_coefficients();
  check_estimator_convergence();
  check_truncation_gap();
  check_stability_boundary();
  check_micro_law();
  check_advective_oracle();
  check_weak_consistency();
  check_determinism(argv[0]);
  return failures == 0 ? 0 : 1;
}
