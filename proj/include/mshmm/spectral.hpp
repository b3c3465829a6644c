#ifndef MSHMM_SPECTRAL_HPP
#define MSHMM_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

// Spectral description of a dissipative operator with a quadratic
// nonlinearity: eigenvalue sequence, mode-interaction tensor and noise
// spectrum, plus the assembly of the truncated fast-slow system.
//
// Mode indices are global and 1-based throughout: k = 1..null_dim are the
// kernel (slow) modes, k > null_dim are the damped (fast) modes. Relabeling
// of fast modes to a 0-based local index happens only at the system level.

namespace mshmm {

/// Nonnegative decay rates of the linear operator, ordered by mode index.
struct EigenSpectrum {
  std::vector<double> lambdas; // lambdas[k-1] is the rate of mode k
  int null_dim = 1;            // number of leading zero rates

  double lambda(int k) const { return lambdas.at(static_cast<std::size_t>(k - 1)); }
  int modes() const { return static_cast<int>(lambdas.size()); }
};

/// Per-mode white-noise intensities; zero on the kernel modes.
struct NoiseSpectrum {
  std::vector<double> q; // q[k-1] for mode k

  double operator()(int k) const {
    return k <= static_cast<int>(q.size()) ? q[static_cast<std::size_t>(k - 1)] : 0.0;
  }
  int modes() const { return static_cast<int>(q.size()); }
};

/// Sparse symmetric interaction tensor, entries keyed by (k, l, m) with
/// l >= k canonical ordering. basis_scale records the per-mode factors c_k
/// of the basis the entries refer to (1 for the orthonormal basis).
class InteractionTensor {
public:
  struct Entry {
    int k, l, m;
    double value;
  };

  void set(int k, int l, int m, double value) {
    if (l < k) std::swap(k, l);
    if (value == 0.0) {
      map_.erase({k, l, m});
    } else {
      map_[{k, l, m}] = value;
    }
  }

  void add(int k, int l, int m, double value) { set(k, l, m, get(k, l, m) + value); }

  double get(int k, int l, int m) const {
    if (l < k) std::swap(k, l);
    auto it = map_.find({k, l, m});
    return it == map_.end() ? 0.0 : it->second;
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(map_.size());
    for (const auto& [key, v] : map_)
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
    return out;
  }

  std::size_t size() const { return map_.size(); }

  std::vector<double> basis_scale;

private:
  std::map<std::tuple<int, int, int>, double> map_;
};

inline std::vector<double> uniform_basis_scale(int modes, double c) {
  return std::vector<double>(static_cast<std::size_t>(modes), c);
}

/// Rates k^2 - 1 for modes k = 1..M+1 (kernel mode plus M fast modes).
inline EigenSpectrum burgers_spectrum(int M) {
  EigenSpectrum s;
  s.null_dim = 1;
  s.lambdas.resize(static_cast<std::size_t>(M) + 1);
  for (int k = 1; k <= M + 1; ++k)
    s.lambdas[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) * k - 1.0;
  return s;
}

/// Rates k^4 - k^2 for modes k = 1..M+1.
inline EigenSpectrum ks_spectrum(int M) {
  EigenSpectrum s;
  s.null_dim = 1;
  s.lambdas.resize(static_cast<std::size_t>(M) + 1);
  for (int k = 1; k <= M + 1; ++k) {
    const double kk = static_cast<double>(k) * k;
    s.lambdas[static_cast<std::size_t>(k - 1)] = kk * kk - kk;
  }
  return s;
}

/// Interaction tensor of the advection nonlinearity u u_x = (u^2)'/2 in the
/// sine basis on [0, pi]. With the orthonormal basis sqrt(2/pi) sin(kx) the
/// entries are (|k+l| d_{k+l,m} - |k-l| d_{|k-l|,m}) / (2 sqrt(2 pi)); in the
/// plain sine basis (c_k = sqrt(pi/2)) the prefactor becomes 1/4.
inline InteractionTensor burgers_tensor(int M, bool normalized) {
  const int modes = M + 1;
  InteractionTensor t;
  const double pref =
      normalized ? 1.0 / (2.0 * std::sqrt(2.0 * 3.14159265358979323846)) : 0.25;
  t.basis_scale = uniform_basis_scale(
      modes, normalized ? 1.0 : std::sqrt(3.14159265358979323846 / 2.0));
  for (int k = 1; k <= modes; ++k) {
    for (int l = k; l <= modes; ++l) {
      const int msum = k + l;
      if (msum <= modes) t.add(k, l, msum, pref * msum);
      const int mdiff = l - k;
      if (mdiff >= 1) t.add(k, l, mdiff, -pref * mdiff);
    }
  }
  return t;
}

/// Flat noise spectrum q_k = level on the fast modes, 0 on the kernel.
inline NoiseSpectrum flat_noise(int modes, int null_dim, double level = 1.0) {
  NoiseSpectrum n;
  n.q.assign(static_cast<std::size_t>(modes), level);
  for (int k = 1; k <= null_dim; ++k) n.q[static_cast<std::size_t>(k - 1)] = 0.0;
  return n;
}

/// Transforms tensor entries and noise amplitudes to the basis scaled by c:
/// B'_{klm} = (c_k c_l / c_m) B_{klm}, q'_k = c_k q_k.
inline std::pair<InteractionTensor, NoiseSpectrum>
basis_rescale(const InteractionTensor& tensor, const NoiseSpectrum& noise,
              const std::vector<double>& c) {
  for (double ck : c)
    if (ck == 0.0) throw std::invalid_argument("basis_rescale: zero scale factor");
  auto at = [&](int k) { return c.at(static_cast<std::size_t>(k - 1)); };

  InteractionTensor out;
  for (const auto& e : tensor.entries())
    out.set(e.k, e.l, e.m, at(e.k) * at(e.l) / at(e.m) * e.value);
  out.basis_scale.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double prev = i < tensor.basis_scale.size() ? tensor.basis_scale[i] : 1.0;
    out.basis_scale[i] = prev * c[i];
  }

  NoiseSpectrum qout;
  qout.q.resize(noise.q.size());
  for (std::size_t i = 0; i < noise.q.size(); ++i)
    qout.q[i] = c.at(i) * noise.q[i];
  return {out, qout};
}

enum class Scaling { Diffusive, Advective };

/// Full spectral description of one model problem.
struct ModelSpec {
  EigenSpectrum spectrum;
  InteractionTensor tensor;
  NoiseSpectrum noise;
  double nu = 0.0;
  Scaling scaling = Scaling::Diffusive;
  double epsilon = 0.0; // only meaningful where the algorithm is not eps-free
};

inline ModelSpec burgers_model(int M, double nu = 0.0, bool normalized = false) {
  ModelSpec m;
  m.spectrum = burgers_spectrum(M);
  m.tensor = burgers_tensor(M, normalized);
  m.noise = flat_noise(M + 1, 1, 1.0);
  m.nu = nu;
  return m;
}

inline ModelSpec ks_model(int M, double nu = 0.0, bool normalized = false) {
  ModelSpec m = burgers_model(M, nu, normalized); // same nonlinearity and basis
  m.spectrum = ks_spectrum(M);
  return m;
}

/// The truncated fast-slow system with one slow mode and M fast modes.
/// Drift components are exactly quadratic (a0, b0) plus the linear
/// instability part (a1 = nu x, b1 = nu y); partial derivatives of a0 are
/// assembled analytically from the same tensor entries.
class TruncatedSystem {
public:
  TruncatedSystem(const ModelSpec& model, int M) : M_(M), nu_(model.nu) {
    const int N = model.spectrum.null_dim;
    if (N != 1)
      throw std::invalid_argument("TruncatedSystem: only one kernel mode supported");
    const int modes = N + M;
    if (model.spectrum.modes() < modes || model.noise.modes() < modes)
      throw std::invalid_argument("TruncatedSystem: spectra shorter than truncation");
    lambda_fast_.resize(static_cast<std::size_t>(M));
    q_fast_.resize(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) {
      lambda_fast_[static_cast<std::size_t>(i)] = model.spectrum.lambda(N + 1 + i);
      q_fast_[static_cast<std::size_t>(i)] = model.noise(N + 1 + i);
    }
    rows_.resize(static_cast<std::size_t>(modes));
    for (const auto& e : model.tensor.entries()) {
      if (e.k > modes || e.l > modes || e.m > modes) continue;
      // weight 2 on off-diagonal pairs: the quadratic form counts (k,l) and (l,k)
      rows_[static_cast<std::size_t>(e.m - 1)].push_back(
          {e.k - 1, e.l - 1, e.k == e.l ? e.value : 2.0 * e.value});
    }
  }

  int fast_dim() const { return M_; }
  double nu() const { return nu_; }
  double lambda_max() const {
    return *std::max_element(lambda_fast_.begin(), lambda_fast_.end());
  }
  const std::vector<double>& lambda_fast() const { return lambda_fast_; }
  const std::vector<double>& q_fast() const { return q_fast_; }

  /// Quadratic slow drift a0(x, y).
  double a0(double x, std::span<const double> y) const {
    return quad_row(0, x, y);
  }

  /// d a0 / dx.
  double dx_a0(double x, std::span<const double> y) const {
    double s = 0.0;
    for (const auto& t : rows_[0]) {
      if (t.i == 0) s += t.w * ((t.j == 0) ? 2.0 * x : u(t.j, x, y));
      else if (t.j == 0) s += t.w * u(t.i, x, y);
    }
    return s;
  }

  /// d a0 / dy into out (length M).
  void dy_a0(double x, std::span<const double> y, std::span<double> out) const {
    for (int i = 0; i < M_; ++i) out[static_cast<std::size_t>(i)] = 0.0;
    for (const auto& t : rows_[0]) {
      if (t.i > 0) out[static_cast<std::size_t>(t.i - 1)] += t.w * u(t.j, x, y);
      if (t.j > 0 && t.j != t.i) out[static_cast<std::size_t>(t.j - 1)] += t.w * u(t.i, x, y);
      if (t.i > 0 && t.j == t.i) out[static_cast<std::size_t>(t.i - 1)] += t.w * u(t.i, x, y);
    }
  }

  /// Quadratic fast drift b0(x, y) into out (length M).
  void b0(double x, std::span<const double> y, std::span<double> out) const {
    for (int i = 0; i < M_; ++i)
      out[static_cast<std::size_t>(i)] = quad_row(i + 1, x, y);
  }

  /// Linear slow drift a1 = nu x.
  double a1(double x) const { return nu_ * x; }

  /// Linear fast drift b1 = nu y into out.
  void b1(std::span<const double> y, std::span<double> out) const {
    for (int i = 0; i < M_; ++i)
      out[static_cast<std::size_t>(i)] = nu_ * y[static_cast<std::size_t>(i)];
  }

private:
  struct Term {
    int i, j;  // 0-based mode indices into (x, y1, ..., yM)
    double w;  // tensor value, doubled on off-diagonal pairs
  };

  static double u(int idx, double x, std::span<const double> y) {
    return idx == 0 ? x : y[static_cast<std::size_t>(idx - 1)];
  }

  double quad_row(int m, double x, std::span<const double> y) const {
    double s = 0.0;
    for (const auto& t : rows_[static_cast<std::size_t>(m)])
      s += t.w * u(t.i, x, y) * u(t.j, x, y);
    return s;
  }

  int M_;
  double nu_;
  std::vector<double> lambda_fast_, q_fast_;
  std::vector<std::vector<Term>> rows_; // rows_[m]: terms of output mode m+1
};

inline TruncatedSystem build_truncated_system(const ModelSpec& model, int M) {
  return TruncatedSystem(model, M);
}

} // namespace mshmm

#endif // MSHMM_SPECTRAL_HPP
