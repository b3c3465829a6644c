#include <catch2/catch_amalgamated.hpp>

#include "mshmm/direct.hpp"

using namespace mshmm;

TEST_CASE("amplitude integrator draws the shared macro noise streams") {
  AmplitudeCoeffs c;
  c.A = 0.0;
  c.Bc = 0.0;
  c.C = 0.5; // sigma = 1
  const double dt = 0.1;
  const auto s = run_amplitude_em(c, 0.0, dt, 5, 77);
  for (int n = 0; n < 5; ++n) {
    const double z =
        RngStream(77, StreamPurpose::MacroNoise, 0, static_cast<std::uint64_t>(n)).gaussian();
    const double expect = s.values[static_cast<std::size_t>(n)] + std::sqrt(dt) * z;
    REQUIRE(s.values[static_cast<std::size_t>(n) + 1] == Catch::Approx(expect).margin(1e-15));
  }
}

TEST_CASE("drift-only amplitude integrator converges at first order") {
  AmplitudeCoeffs c;
  c.A = 1.0;
  c.Bc = 0.0; // dX = X dt, X(1) = X0 e
  const double X0 = 1.0;
  const double exact = X0 * std::exp(1.0);
  const double e1 = std::abs(run_amplitude_em(c, X0, 1e-3, 1000, 1).values.back() - exact);
  const double e2 = std::abs(run_amplitude_em(c, X0, 5e-4, 2000, 1).values.back() - exact);
  REQUIRE(e1 / e2 == Catch::Approx(2.0).epsilon(0.05));
}

TEST_CASE("stiff integrator matches the truncated dynamics statistics") {
  // smoke-level check: finite, deterministic, correct grid
  const auto model = burgers_model(2);
  const TruncatedSystem sys = build_truncated_system(model, 2);
  DirectStiffOptions opts;
  opts.X0 = 0.5;
  opts.dt_macro = 0.1;
  const auto a = run_direct_stiff(sys, 0.1, 1e-3, 1.0, 5, opts);
  const auto b = run_direct_stiff(sys, 0.1, 1e-3, 1.0, 5, opts);
  REQUIRE_FALSE(a.divergence);
  REQUIRE(a.values == b.values);
  REQUIRE(a.times.size() == 11);
  REQUIRE(a.times.back() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("stiff integrator refuses an unstable micro step") {
  const auto model = burgers_model(2); // lambda_max = 8
  const TruncatedSystem sys = build_truncated_system(model, 2);
  // dt lambda / eps^2 = 0.01 * 8 / 0.01 = 8 >= 2
  REQUIRE_THROWS_AS(run_direct_stiff(sys, 0.1, 0.01, 1.0, 5), StabilityError);
}

TEST_CASE("stiff integrator enforces the step budget") {
  const auto model = burgers_model(2);
  const TruncatedSystem sys = build_truncated_system(model, 2);
  DirectStiffOptions opts;
  opts.budget = 1000; // far below the required mode-steps
  try {
    run_direct_stiff(sys, 0.1, 1e-4, 1.0, 5, opts);
    FAIL("expected budget error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("budget") != std::string::npos);
  }
}

TEST_CASE("field reconstruction is the plain mode sum") {
  const std::vector<double> grid{0.0, 0.5, 1.0, 3.14159265358979323846};
  const std::vector<double> slow{0.3, -0.2};
  const std::vector<std::vector<double>> fast{{0.1, 0.05}, {-0.4, 0.2}};
  const auto u = reconstruct_field(slow, fast, grid);
  REQUIRE(u.size() == 2);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      const double expect = slow[n] * std::sin(x) + fast[n][0] * std::sin(2.0 * x) +
                            fast[n][1] * std::sin(3.0 * x);
      REQUIRE(u[n][i] == Catch::Approx(expect).margin(1e-14));
    }
  // Dirichlet boundary values vanish
  REQUIRE(u[0][0] == Catch::Approx(0.0).margin(1e-14));
  REQUIRE(std::abs(u[0][3]) < 1e-12);
}

TEST_CASE("field reconstruction is linear in the coefficients") {
  const std::vector<double> grid{0.2, 0.9, 2.5};
  const std::vector<double> a{0.5}, b{-1.2};
  std::vector<double> sum{a[0] + b[0]};
  const auto ua = reconstruct_field(a, {}, grid);
  const auto ub = reconstruct_field(b, {}, grid);
  const auto us = reconstruct_field(sum, {}, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    REQUIRE(us[0][i] == Catch::Approx(ua[0][i] + ub[0][i]).margin(1e-14));
}

TEST_CASE("field reconstruction rejects points outside the domain") {
  REQUIRE_THROWS_AS(reconstruct_field({1.0}, {}, {-0.1}), std::invalid_argument);
  REQUIRE_THROWS_AS(reconstruct_field({1.0}, {}, {3.2}), std::invalid_argument);
}
