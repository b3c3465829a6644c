// Command-line harness binding the configuration files to the library:
// coefficient tables, single comparison runs, convergence sweeps and field
// reconstruction. Exit codes: 0 success, 1 validation error, 2 divergence or
// instability, 3 budget exceeded.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mshmm/amplitude.hpp"
#include "mshmm/config.hpp"
#include "mshmm/direct.hpp"
#include "mshmm/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUnstable = 2;
constexpr int kExitBudget = 3;

std::string fmt(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Output sink: file when a path is given, stdout otherwise.
class Sink {
public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw mshmm::ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

void write_manifest(const mshmm::RunConfig& cfg, const std::string& out_path) {
  if (out_path.empty()) return;
  std::ofstream m(out_path + ".manifest.json");
  m << mshmm::make_manifest(cfg).dump(2) << "\n";
}

std::string stamp(const mshmm::RunConfig& cfg) {
  return "# model_hash=" + mshmm::model_hash(cfg.model) + " seed=" + std::to_string(cfg.seed);
}

// Noise amplitude for arbitrarily high modes: the configured list, extended
// past its end by its last value (flat unit noise when no list is given).
// The tail-summed limit coefficients need this extension; the stored spectra
// stop at the truncation.
std::function<double(int)> extended_noise(const mshmm::ModelConfig& m) {
  return [q = m.q](int k) -> double {
    if (k < 2) return 0.0;
    if (q.empty()) return 1.0;
    if (k <= static_cast<int>(q.size())) return q[static_cast<std::size_t>(k - 1)];
    return q.back();
  };
}

mshmm::AmplitudeCoeffs coeffs_for(const mshmm::RunConfig& cfg, const mshmm::ModelSpec& spec,
                                  int M) {
  if (cfg.model.name == "burgers") {
    auto q = [&spec](int k) { return spec.noise(k); };
    return mshmm::burgers_homog_coeffs(q, cfg.model.nu, M);
  }
  return mshmm::homog_coeffs_general(spec.spectrum, spec.noise, spec.tensor, cfg.model.nu, M);
}

int cmd_coeffs(const mshmm::RunConfig& cfg, const std::vector<int>& Ms,
               bool with_limit, const std::string& out_path) {
  // The table needs spectra two modes past the largest truncation.
  mshmm::ModelConfig wide = cfg.model;
  int maxM = 1;
  for (int M : Ms) maxM = std::max(maxM, M);
  if (cfg.model.name != "custom") wide.M = maxM + 2;
  mshmm::RunConfig wide_cfg = cfg;
  wide_cfg.model = wide;
  const mshmm::ModelSpec spec = mshmm::build_model(wide);

  Sink sink(out_path);
  auto& os = sink.out();
  os << stamp(cfg) << "\n";
  os << "M,A,C,tail_bound\n";
  nlohmann::json summary;
  summary["rows"] = nlohmann::json::array();
  for (int M : Ms) {
    const auto c = coeffs_for(wide_cfg, spec, M);
    os << M << "," << fmt(c.A) << "," << fmt(c.C) << "," << fmt(c.tail_bound) << "\n";
    summary["rows"].push_back({{"M", M}, {"A", c.A}, {"C", c.C}, {"tail_bound", c.tail_bound}});
  }
  if (with_limit) {
    if (cfg.model.name != "burgers")
      throw mshmm::ConfigError("tail-estimated limit coefficients need analytic rates (model=burgers)");
    double qb = 1.0;
    for (double qk : cfg.model.q) qb = std::max(qb, std::abs(qk));
    const auto c =
        mshmm::burgers_homog_coeffs_limit(extended_noise(cfg.model), cfg.model.nu, 1e-10, qb);
    os << "inf," << fmt(c.A) << "," << fmt(c.C) << "," << fmt(c.tail_bound) << "\n";
    summary["limit"] = {{"A", c.A}, {"C", c.C}, {"tail_bound", c.tail_bound}};
  }
  summary["model_hash"] = mshmm::model_hash(cfg.model);
  std::cout << summary.dump(2) << "\n";
  write_manifest(cfg, out_path);
  return kExitOk;
}

int cmd_run(const mshmm::RunConfig& cfg, const std::string& out_path) {
  const mshmm::ModelSpec spec = mshmm::build_model(cfg.model);
  const mshmm::TruncatedSystem system = mshmm::build_truncated_system(spec, cfg.model.M);
  mshmm::HmmParams params = cfg.hmm;
  params.n_macro = static_cast<int>(std::lround(cfg.T / cfg.hmm.dt_macro));

  Sink sink(out_path);
  auto& os = sink.out();
  os << stamp(cfg) << "\n";

  if (cfg.scaling == "advective") {
    const mshmm::HmmRun run = mshmm::hmm_macro_run_advective(system, params, cfg.seed, cfg.X0);
    bool have_oracle = true;
    mshmm::AveragedCoeffs avg;
    try {
      avg = mshmm::averaged_coeffs(spec.spectrum, spec.noise, spec.tensor, cfg.model.nu, cfg.model.M);
      mshmm::averaged_blowup_time(avg, cfg.X0);
    } catch (const std::exception&) {
      have_oracle = false;
    }
    os << (have_oracle ? "t,X_hmm,X_avg\n" : "t,X_hmm\n");
    for (std::size_t i = 0; i < run.times.size(); ++i) {
      os << fmt(run.times[i], 15) << "," << fmt(run.X[i], 15);
      if (have_oracle)
        os << "," << fmt(mshmm::averaged_closed_form(avg, cfg.X0, run.times[i]), 15);
      os << "\n";
    }
    write_manifest(cfg, out_path);
    if (run.divergence) {
      std::cerr << "divergence: " << run.divergence.stage << " at step " << run.divergence.step << "\n";
      return kExitUnstable;
    }
    return kExitOk;
  }

  const auto cM = coeffs_for(cfg, mshmm::build_model(cfg.model), cfg.model.M);
  const auto cinf = cfg.model.name == "burgers"
                        ? mshmm::burgers_homog_coeffs_limit(extended_noise(cfg.model), cfg.model.nu)
                        : cM;
  const mshmm::CoupledRun run =
      mshmm::trajectory_compare(system, cM, cinf, params, cfg.seed, cfg.X0);
  os << "t,X_hmm,X_hom,X_inf\n";
  for (std::size_t i = 0; i < run.times.size(); ++i)
    os << fmt(run.times[i], 15) << "," << fmt(run.X_hmm[i], 15) << ","
       << fmt(run.X_hom[i], 15) << "," << fmt(run.X_inf[i], 15) << "\n";
  write_manifest(cfg, out_path);
  if (run.div_hmm || run.div_hom || run.div_inf) {
    std::cerr << "divergence detected\n";
    return kExitUnstable;
  }
  return kExitOk;
}

int cmd_sweep(const mshmm::RunConfig& cfg, const std::string& out_path) {
  if (cfg.p_min > cfg.p_max) throw mshmm::ConfigError("empty p range (p_min > p_max)");
  const mshmm::ModelSpec spec = mshmm::build_model(cfg.model);
  const auto cM = coeffs_for(cfg, spec, cfg.model.M);
  const auto cinf = cfg.model.name == "burgers"
                        ? mshmm::burgers_homog_coeffs_limit(extended_noise(cfg.model), cfg.model.nu)
                        : cM;
  std::vector<int> ps;
  for (int p = cfg.p_min; p <= cfg.p_max; ++p) ps.push_back(p);
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < cfg.n_seeds; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));

  mshmm::SweepOptions opts;
  opts.dt_macro = cfg.hmm.dt_macro;
  opts.T = cfg.T;
  opts.X0 = cfg.X0;
  opts.mixed_eval = cfg.mixed_eval;
  opts.row_time_cap_s = cfg.row_time_cap_s;
  opts.workers = cfg.workers;
  const auto table = mshmm::convergence_sweep(spec, cfg.model.M, ps, seeds, cM, cinf, opts);

  Sink sink(out_path);
  auto& os = sink.out();
  os << stamp(cfg) << "\n";
  os << "p,M,E_p,E_lp,se_Ep,se_Elp,status\n";
  for (const auto& row : table.rows)
    os << row.p << "," << row.M << "," << fmt(row.E_p) << "," << fmt(row.E_lp) << ","
       << fmt(row.se_Ep) << "," << fmt(row.se_Elp) << "," << row.status << "\n";
  write_manifest(cfg, out_path);
  return kExitOk;
}

int cmd_field(const mshmm::RunConfig& cfg, int nx, const std::string& out_path) {
  const mshmm::ModelSpec spec = mshmm::build_model(cfg.model);
  const mshmm::TruncatedSystem system = mshmm::build_truncated_system(spec, cfg.model.M);
  mshmm::HmmParams params = cfg.hmm;
  params.n_macro = static_cast<int>(std::lround(cfg.T / cfg.hmm.dt_macro));
  const mshmm::HmmRun run = cfg.scaling == "advective"
                                ? mshmm::hmm_macro_run_advective(system, params, cfg.seed, cfg.X0)
                                : mshmm::hmm_macro_run_diffusive(system, params, cfg.seed, cfg.X0);

  std::vector<double> grid(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i)
    grid[static_cast<std::size_t>(i)] = 3.14159265358979323846 * i / (nx - 1);
  const auto u = mshmm::reconstruct_field(run.X, {}, grid);

  Sink sink(out_path);
  auto& os = sink.out();
  os << stamp(cfg) << "\n";
  os << "t,x,u\n";
  for (std::size_t ti = 0; ti < run.times.size(); ++ti)
    for (std::size_t xi = 0; xi < grid.size(); ++xi)
      os << fmt(run.times[ti], 15) << "," << fmt(grid[xi], 15) << ","
         << fmt(u[ti][xi], 15) << "\n";
  write_manifest(cfg, out_path);
  return run.divergence ? kExitUnstable : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Micro-macro solver for spectral fast-slow SDE systems"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path;
  std::uint64_t seed_override = 0;
  bool have_seed = false;
  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("-o,--out", out_path, "output CSV path (stdout when omitted)");
  auto* seed_opt = app.add_option("--seed", seed_override, "override config seed");
  int workers_override = 0;
  auto* workers_opt = app.add_option("--workers", workers_override, "bound sweep concurrency");

  auto* coeffs = app.add_subcommand("coeffs", "effective-coefficient table");
  std::vector<int> Ms{2, 3, 4};
  bool no_limit = false;
  coeffs->add_option("--M", Ms, "truncation levels");
  coeffs->add_flag("--no-limit", no_limit, "skip the tail-summed limit row");

  auto* runc = app.add_subcommand("run", "single comparison run");
  auto* sweep = app.add_subcommand("sweep", "convergence sweep over p");
  auto* field = app.add_subcommand("field", "space-time field reconstruction");
  int nx = 33;
  field->add_option("--nx", nx, "spatial grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  have_seed = seed_opt->count() > 0;

  try {
    mshmm::RunConfig cfg;
    if (!config_path.empty()) cfg = mshmm::load_config(config_path);
    if (have_seed) cfg.seed = seed_override;
    if (workers_opt->count() > 0) cfg.workers = workers_override;
    if (coeffs->parsed()) return cmd_coeffs(cfg, Ms, !no_limit, out_path);
    if (runc->parsed()) return cmd_run(cfg, out_path);
    if (sweep->parsed()) return cmd_sweep(cfg, out_path);
    if (field->parsed()) return cmd_field(cfg, nx, out_path);
  } catch (const mshmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const mshmm::StabilityError& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return kExitUnstable;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.find("budget") != std::string::npos ? kExitBudget : kExitUnstable;
  }
  return kExitOk;
}
