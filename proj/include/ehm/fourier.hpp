#pragma once

// FFT, trigonometric polynomials on the torus (evaluable at complex phase),
// and analytic logarithms of zero-free loops.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "ehm/errors.hpp"

namespace ehm {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi_v<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi_v<double>;

// In-place radix-2 FFT.  forward: A_k = sum_j a_j e^{-2pi i jk/n};
// inverse: a_j = (1/n) sum_k A_k e^{+2pi i jk/n}.
inline void fft_inplace(std::vector<cplx>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw domain_error("fft: size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        cplx u = a[i + j];
        cplx v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

// Finite Fourier sum f(z) = e^{pi i half z} * sum_{k} c[k - k_min] e^{2 pi i k z}.
// half = 1 models half-integer frequencies (period-2 objects); 0 otherwise.
struct TrigPoly {
  int k_min = 0;
  int half = 0;
  std::vector<cplx> c;

  int k_max() const { return k_min + static_cast<int>(c.size()) - 1; }

  cplx eval(cplx z) const {
    const cplx i2pi(0.0, kTwoPi);
    cplx w = std::exp(i2pi * z);
    cplx acc(0.0, 0.0);
    for (size_t idx = c.size(); idx-- > 0;) acc = acc * w + c[idx];
    acc *= std::exp(i2pi * (static_cast<double>(k_min) * z));
    if (half) acc *= std::exp(cplx(0.0, kPi) * z);
    return acc;
  }

  cplx operator()(double x) const { return eval(cplx(x, 0.0)); }

  // Coefficients of z -> conj(f(conj z)); on the real axis this is the
  // complex conjugate of f.
  TrigPoly bar() const {
    TrigPoly r;
    r.half = -half;
    r.k_min = -k_max();
    r.c.resize(c.size());
    for (size_t i = 0; i < c.size(); ++i)
      r.c[i] = std::conj(c[c.size() - 1 - i]);
    return r;
  }

  // Drop leading/trailing coefficients below rel_floor * max|c_k|.  Noise
  // modes cost nothing on the axis but blow up exponentially when the
  // polynomial is evaluated at complex phase, so continuations trim first.
  TrigPoly trimmed(double rel_floor = 1e-15) const {
    double mx = 0;
    for (const auto& ck : c) mx = std::max(mx, std::abs(ck));
    double floor_abs = mx * rel_floor;
    size_t lo = 0, hi = c.size();
    while (lo < hi && std::abs(c[lo]) <= floor_abs) ++lo;
    while (hi > lo && std::abs(c[hi - 1]) <= floor_abs) --hi;
    TrigPoly r;
    r.half = half;
    if (lo == hi) {
      r.k_min = 0;
      r.c = {cplx(0, 0)};
      return r;
    }
    r.k_min = k_min + static_cast<int>(lo);
    r.c.assign(c.begin() + static_cast<long>(lo), c.begin() + static_cast<long>(hi));
    return r;
  }

  double sup_on_circle(double im, int n_grid = 1024) const {
    double best = 0;
    for (int j = 0; j < n_grid; ++j) {
      double v = std::abs(eval(cplx(static_cast<double>(j) / n_grid, im)));
      if (v > best) best = v;
    }
    return best;
  }
};

// Interpolating polynomial with modes [-n/2, n/2) from n uniform samples
// f(j/n).  n must be a power of two.
inline TrigPoly trig_interp(const std::vector<cplx>& samples) {
  std::vector<cplx> a = samples;
  const int n = static_cast<int>(a.size());
  fft_inplace(a, false);
  TrigPoly p;
  p.k_min = -n / 2;
  p.c.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    int k = p.k_min + i;
    int idx = k >= 0 ? k : k + n;
    p.c[static_cast<size_t>(i)] = a[static_cast<size_t>(idx)] / static_cast<double>(n);
  }
  return p;
}

inline TrigPoly trig_interp(int n, const std::function<cplx(double)>& f) {
  std::vector<cplx> s(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) s[static_cast<size_t>(j)] = f(static_cast<double>(j) / n);
  return trig_interp(s);
}

struct AnalyticLog {
  int winding = 0;      // degree of g: T -> C\{0}
  TrigPoly log_poly;    // interpolant of log g - 2 pi i * winding * x
};

// Logarithm of a zero-free loop sampled on a power-of-two grid.  The
// argument is continued along the loop; a nonzero winding is reported and
// the log of the de-wound function is interpolated.  require_winding_zero
// turns nonzero winding into an error for callers that need a torus log.
inline AnalyticLog analytic_log(const std::vector<cplx>& samples,
                                bool require_winding_zero = true) {
  const int n = static_cast<int>(samples.size());
  std::vector<double> arg(static_cast<size_t>(n) + 1);
  for (int j = 0; j <= n; ++j) {
    cplx v = samples[static_cast<size_t>(j % n)];
    if (std::abs(v) == 0.0) throw SingularSymbol("analytic_log: zero sample");
    double a = std::arg(v);
    if (j == 0) {
      arg[0] = a;
    } else {
      double prev = arg[static_cast<size_t>(j) - 1];
      double d = a - std::fmod(prev, kTwoPi);
      // Continue the argument: pick the branch nearest the previous value.
      d -= kTwoPi * std::round(d / kTwoPi);
      arg[static_cast<size_t>(j)] = prev + d;
    }
  }
  double total = arg[static_cast<size_t>(n)] - arg[0];
  int winding = static_cast<int>(std::round(total / kTwoPi));
  if (std::abs(total - kTwoPi * winding) > 0.3)
    throw GridTooCoarse("analytic_log: winding not integral on this grid");
  if (require_winding_zero && winding != 0)
    throw WindingNonzero("analytic_log: winding " + std::to_string(winding));
  std::vector<cplx> logs(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) {
    double dewind = kTwoPi * winding * static_cast<double>(j) / n;
    logs[static_cast<size_t>(j)] =
        cplx(std::log(std::abs(samples[static_cast<size_t>(j)])),
             arg[static_cast<size_t>(j)] - dewind);
  }
  AnalyticLog out;
  out.winding = winding;
  out.log_poly = trig_interp(logs);
  return out;
}

}  // namespace ehm
