#ifndef MSHMM_QUADRATURE_HPP
#define MSHMM_QUADRATURE_HPP

#include <cmath>
#include <functional>
#include <stdexcept>

#include "mshmm/spectral.hpp"

// Interaction-tensor entries by numerical quadrature. This is the slow,
// assumption-free route: project the bilinear map onto the basis by
// integration and divide by the basis norm, so it works for non-normalized
// bases as well. Used to cross-check the closed-form tensors.

namespace mshmm {

/// A function family e_k(x) on [a, b] together with its derivative.
struct BasisFamily {
  double a = 0.0, b = 3.14159265358979323846;
  std::function<double(int, double)> value;  // e_k(x)
  std::function<double(int, double)> deriv;  // e_k'(x)
};

inline BasisFamily sine_basis(bool normalized) {
  const double pi = 3.14159265358979323846;
  const double c = normalized ? std::sqrt(2.0 / pi) : 1.0;
  BasisFamily fam;
  fam.a = 0.0;
  fam.b = pi;
  fam.value = [c](int k, double x) { return c * std::sin(k * x); };
  fam.deriv = [c](int k, double x) { return c * k * std::cos(k * x); };
  return fam;
}

/// Bilinear map acting on two basis functions pointwise; receives values and
/// derivatives of both arguments. The advection form (u v)' / 2 is the
/// built-in case.
using BilinearMap = std::function<double(double u, double du, double v, double dv)>;

inline BilinearMap advection_form() {
  return [](double u, double du, double v, double dv) {
    return 0.5 * (du * v + u * dv);
  };
}

namespace detail {

// Composite Simpson on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

} // namespace detail

/// Tensor entries <B(e_k, e_l), e_m> / <e_m, e_m> for all k, l, m <= modes.
/// Convergence is checked by doubling the resolution; throws if the residual
/// stays above `tol`.
inline InteractionTensor tensor_by_quadrature(const BasisFamily& basis,
                                              const BilinearMap& form, int M,
                                              int resolution = 16384,
                                              double tol = 1e-10) {
  const int modes = M + 1;
  InteractionTensor t;
  t.basis_scale.assign(static_cast<std::size_t>(modes), 1.0);

  auto entry = [&](int k, int l, int m, int n) {
    const double num = detail::simpson(
        [&](double x) {
          return form(basis.value(k, x), basis.deriv(k, x), basis.value(l, x),
                      basis.deriv(l, x)) *
                 basis.value(m, x);
        },
        basis.a, basis.b, n);
    const double den = detail::simpson(
        [&](double x) {
          const double e = basis.value(m, x);
          return e * e;
        },
        basis.a, basis.b, n);
    return num / den;
  };

  for (int k = 1; k <= modes; ++k) {
    for (int l = k; l <= modes; ++l) {
      for (int m = 1; m <= modes; ++m) {
        const double coarse = entry(k, l, m, resolution);
        const double fine = entry(k, l, m, 2 * resolution);
        if (std::abs(fine - coarse) > tol)
          throw std::runtime_error(
              "tensor_by_quadrature: residual " + std::to_string(std::abs(fine - coarse)) +
              " above tolerance at (" + std::to_string(k) + "," + std::to_string(l) +
              "," + std::to_string(m) + ")");
        if (std::abs(fine) > 1e-12) t.set(k, l, m, fine);
      }
    }
  }
  return t;
}

} // namespace mshmm

#endif // MSHMM_QUADRATURE_HPP
