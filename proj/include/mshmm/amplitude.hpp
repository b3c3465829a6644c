#ifndef MSHMM_AMPLITUDE_HPP
#define MSHMM_AMPLITUDE_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "mshmm/spectral.hpp"

// Analytic coefficients of the scalar effective equations.
//
// Diffusive scaling: the slow mode follows the cubic SDE
//     dX = (A X - Bc X^3) dt + sigma(X) dW,   sigma(X)^2 = 2 (C + D X^2 / 2).
// The additive coefficient C is stored so that the specialized series values
// below enter sigma as sqrt(2 (C + X^2 q2^2 / (8 l2^2))); the equivalent
// flat form is sigma^2 = 2C + D X^2.
//
// Advective scaling: the slow mode follows dX/dt = D_adv X^2 + nu X + E_adv,
// with the tangent closed-form solution when D_adv, E_adv > 0.

namespace mshmm {

struct AmplitudeCoeffs {
  double A = 0.0;   // linear drift coefficient
  double Bc = 0.0;  // cubic drift coefficient, drift = A X - Bc X^3
  double C = 0.0;   // additive noise coefficient, sigma^2 = 2(C + D X^2 / 2)
  double D = 0.0;   // multiplicative noise coefficient
  int truncation = 0;        // fast-mode count M; -1 for the tail-summed limit
  double tail_bound = 0.0;   // estimated remainder of the truncated series
};

/// Effective drift and diffusion of the scalar homogenized equation.
inline std::pair<double, double> amplitude_drift_diffusion(const AmplitudeCoeffs& c,
                                                           double X) {
  const double drift = c.A * X - c.Bc * X * X * X;
  const double rad = 2.0 * (c.C + 0.5 * c.D * X * X);
  if (rad < 0.0)
    throw std::logic_error("amplitude_drift_diffusion: negative radicand");
  return {drift, std::sqrt(rad)};
}

/// Homogenized coefficients of a one-slow-mode system from the general
/// series, with every sum running over fast modes 2..kmax. Requires the
/// centering property B_{kk1} = 0 and positive fast rates.
inline AmplitudeCoeffs homog_coeffs_modes(const EigenSpectrum& spectrum,
                                          const NoiseSpectrum& noise,
                                          const InteractionTensor& tensor,
                                          double nu, int kmax) {
  if (spectrum.null_dim != 1)
    throw std::invalid_argument("homog_coeffs_modes: one kernel mode required");
  if (spectrum.modes() < kmax || noise.modes() < kmax)
    throw std::invalid_argument("homog_coeffs_modes: spectra shorter than truncation");
  for (int k = 2; k <= kmax; ++k) {
    if (spectrum.lambda(k) <= 0.0)
      throw std::domain_error("homog_coeffs_modes: non-positive fast rate at mode " +
                              std::to_string(k));
    if (tensor.get(k, k, 1) != 0.0)
      throw std::domain_error("homog_coeffs_modes: centering violated at mode " +
                              std::to_string(k));
  }

  AmplitudeCoeffs c;
  c.truncation = kmax - 1;
  double A = nu, Bc = 0.0, Cfull = 0.0, D = 0.0;
  for (int k = 2; k <= kmax; ++k) {
    const double lk = spectrum.lambda(k);
    const double qk2 = noise(k) * noise(k);
    const double Bk11 = tensor.get(k, 1, 1);
    A += 2.0 * Bk11 * Bk11 * qk2 / (lk * lk);
    Bc -= 2.0 * Bk11 * tensor.get(1, 1, k) / lk; // drift carries -Bc X^3
    D += 4.0 * Bk11 * Bk11 * qk2 / (lk * lk);
    for (int l = 2; l <= kmax; ++l) {
      const double ll = spectrum.lambda(l);
      const double ql2 = noise(l) * noise(l);
      A += Bk11 * tensor.get(l, l, k) * ql2 / (lk * ll);
      A += 2.0 * tensor.get(k, l, 1) * tensor.get(k, 1, l) / (lk + ll) * qk2 / lk;
      Cfull += 2.0 * tensor.get(k, l, 1) * tensor.get(k, l, 1) * qk2 * ql2 /
               ((lk + ll) * (lk + ll) * lk);
    }
  }
  c.A = A;
  c.Bc = Bc;
  c.C = 0.5 * Cfull;
  c.D = D;
  return c;
}

/// Same series re-labeled by fast-mode count M: keeps exactly the coefficient
/// groups of the specialized sequences below summed through index M+1, which
/// touch modes up to M+2.
inline AmplitudeCoeffs homog_coeffs_general(const EigenSpectrum& spectrum,
                                            const NoiseSpectrum& noise,
                                            const InteractionTensor& tensor,
                                            double nu, int M) {
  AmplitudeCoeffs c = homog_coeffs_modes(spectrum, noise, tensor, nu, M + 2);
  c.truncation = M;
  return c;
}

namespace detail {

struct BurgersSeriesTerm {
  double dA, dC;
};

// k-th group of the specialized series for rates l_k = k^2 - 1 in the plain
// sine basis; the group touches modes k and k+1.
inline BurgersSeriesTerm burgers_series_term(const std::function<double(int)>& q,
                                             int k) {
  const double lk = static_cast<double>(k) * k - 1.0;
  const double lk1 = static_cast<double>(k + 1) * (k + 1) - 1.0;
  const double qk2 = q(k) * q(k);
  const double qk12 = q(k + 1) * q(k + 1);
  BurgersSeriesTerm t;
  t.dA = 0.125 * (k * lk * qk12 - lk1 * qk2 * (k + 1)) / ((lk1 + lk) * lk * lk1);
  t.dC = 0.0625 * qk2 * qk12 / (lk * lk1 * (lk + lk1));
  return t;
}

} // namespace detail

/// Closed-form coefficient series for the rates k^2 - 1, summed through
/// index M+1 (the convention used by the reference coefficient tables).
/// q is the noise amplitude per global mode in the plain sine basis.
inline AmplitudeCoeffs burgers_homog_coeffs(const std::function<double(int)>& q,
                                            double nu, int M) {
  const double l2 = 3.0;
  AmplitudeCoeffs c;
  c.truncation = M;
  c.A = nu + 0.125 * q(2) * q(2) / (l2 * l2);
  c.Bc = 1.0 / (4.0 * l2);
  c.C = 0.0;
  c.D = 0.25 * q(2) * q(2) / (l2 * l2);
  for (int k = 2; k <= M + 1; ++k) {
    const auto t = detail::burgers_series_term(q, k);
    c.A += t.dA;
    c.C += t.dC;
  }
  const double qb = std::max(std::abs(q(M + 2)), std::abs(q(M + 3)));
  c.tail_bound = 3.0 * qb * qb / (16.0 * std::pow(M + 2.0, 3.0));
  return c;
}

/// Tail-summed limit coefficients: groups are added until the analytic
/// O(k^-4) remainder bound falls below `tol`. `q_bound` bounds |q_k| over the
/// yet-unsummed modes.
inline AmplitudeCoeffs burgers_homog_coeffs_limit(const std::function<double(int)>& q,
                                                  double nu, double tol = 1e-10,
                                                  double q_bound = 1.0) {
  AmplitudeCoeffs c = burgers_homog_coeffs(q, nu, 1);
  int k = 3; // next group index
  double bound = std::numeric_limits<double>::infinity();
  while (k < 2000000) {
    const auto t = detail::burgers_series_term(q, k);
    c.A += t.dA;
    c.C += t.dC;
    ++k;
    // group magnitudes decay like 3 q^2 / (16 k^4); remainder ~ q^2 / (16 k^3)
    bound = q_bound * q_bound * (1.0 + q_bound * q_bound) / (16.0 * k * k * k);
    if (bound < tol) break;
  }
  c.truncation = -1;
  c.tail_bound = bound;
  return c;
}

/// Coefficients of the averaged (advective-scale) equation
/// dX/dt = D_adv X^2 + nu X + E_adv.
struct AveragedCoeffs {
  double D_adv = 0.0;
  double E_adv = 0.0;
  double nu = 0.0;
};

inline AveragedCoeffs averaged_coeffs(const EigenSpectrum& spectrum,
                                      const NoiseSpectrum& noise,
                                      const InteractionTensor& tensor, double nu,
                                      int M) {
  if (spectrum.null_dim != 1)
    throw std::invalid_argument("averaged_coeffs: one kernel mode required");
  AveragedCoeffs c;
  c.D_adv = tensor.get(1, 1, 1);
  c.nu = nu;
  for (int k = 2; k <= M + 1; ++k)
    c.E_adv += noise(k) * noise(k) / (2.0 * spectrum.lambda(k)) * tensor.get(k, k, 1);
  return c;
}

/// Existence horizon of the closed-form solution below; infinity when the
/// solution is global.
inline double averaged_blowup_time(const AveragedCoeffs& c, double x0) {
  const double inf = std::numeric_limits<double>::infinity();
  if (c.D_adv == 0.0) return inf;
  if (c.E_adv == 0.0 && c.nu == 0.0)
    return c.D_adv * x0 > 0.0 ? 1.0 / (c.D_adv * x0) : inf;
  if (c.D_adv > 0.0 && c.E_adv > 0.0 && c.nu == 0.0) {
    const double s = std::sqrt(c.E_adv * c.D_adv);
    return (0.5 * 3.14159265358979323846 - std::atan(c.D_adv * x0 / s)) / s;
  }
  throw std::domain_error("averaged_blowup_time: no closed form for these coefficients");
}

/// Closed-form solution of dx/dt = D x^2 + nu x + E. The tangent formula
/// covers D, E > 0 (nu = 0); degenerate cases dispatch to the affine and
/// separable solutions. Throws past the blow-up time.
inline double averaged_closed_form(const AveragedCoeffs& c, double x0, double t) {
  if (c.D_adv == 0.0) {
    if (c.nu == 0.0) return x0 + c.E_adv * t;
    return (x0 + c.E_adv / c.nu) * std::exp(c.nu * t) - c.E_adv / c.nu;
  }
  if (c.nu != 0.0)
    throw std::domain_error("averaged_closed_form: no closed form with D != 0 and nu != 0");
  if (t >= averaged_blowup_time(c, x0))
    throw std::domain_error("averaged_closed_form: requested time at or past blow-up");
  if (c.E_adv == 0.0) return x0 / (1.0 - c.D_adv * x0 * t);
  if (c.E_adv < 0.0 || c.D_adv < 0.0)
    throw std::domain_error("averaged_closed_form: tangent formula needs D, E > 0");
  const double s = std::sqrt(c.E_adv * c.D_adv);
  return std::sqrt(c.E_adv / c.D_adv) *
         std::tan(s * t + std::atan(c.D_adv * x0 / s));
}

/// Stationary variance q^2 / (2 lambda) of the scalar OU process.
inline double ou_stationary_variance(double lambda, double q) {
  if (lambda <= 0.0)
    throw std::domain_error("ou_stationary_variance: rate must be positive");
  return q * q / (2.0 * lambda);
}

/// Stationary variance of the explicit Euler chain
/// y' = (1 - lambda h) y + sqrt(h) q J; requires 0 < h < 2 / lambda.
inline double ou_stationary_variance(double lambda, double q, double h) {
  if (lambda <= 0.0)
    throw std::domain_error("ou_stationary_variance: rate must be positive");
  if (!(h > 0.0) || h >= 2.0 / lambda)
    throw std::domain_error("ou_stationary_variance: unstable chain, h >= 2/lambda");
  return q * q / (lambda * (2.0 - lambda * h));
}

} // namespace mshmm

#endif // MSHMM_AMPLITUDE_HPP
