#ifndef MSHMM_SDE_HPP
#define MSHMM_SDE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "mshmm/rng.hpp"

// Euler-Maruyama primitives. Instability is reported as a divergence event
// carried in the result, never as a crash: the stability-boundary experiments
// rely on detecting it.

namespace mshmm {

/// Records the first non-finite state encountered by an integrator.
struct DivergenceEvent {
  bool diverged = false;
  long step = -1;
  std::string stage;

  explicit operator bool() const { return diverged; }
};

/// One scalar Euler-Maruyama step: x + dt drift + sqrt(dt) diffusion z.
inline double euler_maruyama_step(double x, double drift, double diffusion,
                                  double dt, double z) {
  return x + dt * drift + std::sqrt(dt) * diffusion * z;
}

/// Vector step with per-component (diagonal) diffusion, in place.
inline void euler_maruyama_step(std::span<double> x, std::span<const double> drift,
                                std::span<const double> diffusion, double dt,
                                std::span<const double> z) {
  const double sdt = std::sqrt(dt);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] += dt * drift[i] + sdt * diffusion[i] * z[i];
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

} // namespace mshmm

#endif // MSHMM_SDE_HPP
