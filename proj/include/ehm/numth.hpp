#pragma once

// Continued fractions, torus metric, Diophantine exponent estimate and
// resonance detection for the frequency/phase arithmetic layer.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ehm/errors.hpp"

namespace ehm {

// Extended precision for frequency/phase arithmetic (64-bit mantissa on x86-64).
using real = long double;

using int128 = __int128;

inline std::string int128_to_string(int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                            : static_cast<unsigned __int128>(v);
  std::string s;
  while (u) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) s.insert(s.begin(), '-');
  return s;
}

// dist(x, Z), in [0, 1/2].
inline real torus_norm(real x) {
  real r = x - std::floor(x + 0.5L);
  return r < 0 ? -r : r;
}

// Fractional part in [0, 1).
inline real fracl(real x) {
  real r = x - std::floor(x);
  if (r >= 1.0L) r -= 1.0L;
  return r;
}

// Frequency with its continued-fraction data.  Convergents p_n/q_n are kept
// in 128-bit integers; the expansion stops before q would overflow the
// guard, since convergents past the precision of `value` carry no usable
// information anyway.
struct Irrational {
  real value = 0;                     // alpha in (0,1)
  std::vector<std::int64_t> a;        // partial quotients a_1..a_D
  std::vector<int128> p, q;           // convergents, index n = 0..D; p0/q0 = 0/1
  int depth() const { return static_cast<int>(a.size()); }

  double value_d() const { return static_cast<double>(value); }

  // q_n as double (exact while q_n < 2^53; callers only use moderate n).
  double q_d(int n) const { return static_cast<double>(q.at(static_cast<size_t>(n))); }
};

namespace detail {
constexpr int128 kConvergentGuard = int128(1) << 100;

inline void push_convergent(Irrational& ir, std::int64_t ak) {
  size_t n = ir.q.size();
  int128 pn = ak * ir.p[n - 1] + ir.p[n - 2];
  int128 qn = ak * ir.q[n - 1] + ir.q[n - 2];
  ir.a.push_back(ak);
  ir.p.push_back(pn);
  ir.q.push_back(qn);
}
}  // namespace detail

// Continued-fraction expansion of alpha in (0,1).  Truncates early when a
// convergent matches alpha to working precision or when q_n would exceed the
// 128-bit guard.
inline Irrational cf_expand(real alpha, int max_depth) {
  if (!(alpha > 0.0L && alpha < 1.0L))
    throw RationalInput("alpha must lie strictly in (0,1)");
  Irrational ir;
  ir.value = alpha;
  ir.p = {0};  // p_0/q_0 = 0/1; the recurrence below seeds p_{-1}/q_{-1} = 1/0
  ir.q = {1};
  // Temporarily hold the n-1 = "(-1)" convergent by special-casing the first step.
  real x = alpha;
  for (int d = 0; d < max_depth; ++d) {
    real inv = 1.0L / x;
    real fl = std::floor(inv);
    // Guard against 0.9999.. artifacts of finite precision.
    if (inv - fl > 1.0L - 1e-12L) fl += 1.0L;
    auto ak = static_cast<std::int64_t>(fl);
    if (ak < 1) ak = 1;
    int128 pn, qn;
    if (d == 0) {
      pn = 1;
      qn = ak;
    } else {
      pn = ak * ir.p[ir.p.size() - 1] + ir.p[ir.p.size() - 2];
      qn = ak * ir.q[ir.q.size() - 1] + ir.q[ir.q.size() - 2];
    }
    if (qn > detail::kConvergentGuard) break;
    ir.a.push_back(ak);
    ir.p.push_back(pn);
    ir.q.push_back(qn);
    x = inv - static_cast<real>(ak);
    // Remaining tail below precision: alpha is a rational hit at this depth.
    if (x <= 1e-16L) {
      if (ir.depth() < 3)
        throw RationalInput("expansion terminated at depth " + std::to_string(ir.depth()));
      break;
    }
  }
  if (ir.depth() < 3)
    throw RationalInput("expansion terminated at depth " + std::to_string(ir.depth()));
  return ir;
}

// Frequencies with known partial quotients are built from them directly; the
// value is the deep-convergent limit, exact to extended precision.
inline Irrational named_constant_quotients(std::int64_t ak, int depth, real value) {
  Irrational ir;
  ir.value = value;
  ir.p = {0};
  ir.q = {1};
  for (int d = 0; d < depth; ++d) {
    int128 pn, qn;
    if (d == 0) {
      pn = 1;
      qn = ak;
    } else {
      pn = ak * ir.p[ir.p.size() - 1] + ir.p[ir.p.size() - 2];
      qn = ak * ir.q[ir.q.size() - 1] + ir.q[ir.q.size() - 2];
    }
    if (qn > detail::kConvergentGuard) break;
    ir.a.push_back(ak);
    ir.p.push_back(pn);
    ir.q.push_back(qn);
  }
  return ir;
}

inline Irrational golden_mean(int depth = 96) {
  return named_constant_quotients(1, depth, (std::sqrt(5.0L) - 1.0L) / 2.0L);
}

inline Irrational silver_mean(int depth = 64) {
  return named_constant_quotients(2, depth, std::sqrt(2.0L) - 1.0L);
}

// Finite-depth surrogate for limsup ln(q_{n+1})/q_n, maximized over stored
// n >= n_min.
inline real beta_estimate(const Irrational& ir, int n_min = 3) {
  if (ir.depth() < 3) throw InsufficientDepth("need depth >= 3");
  real best = 0;
  for (int n = n_min; n + 1 < static_cast<int>(ir.q.size()); ++n) {
    real qn = static_cast<real>(ir.q[static_cast<size_t>(n)]);
    real qn1 = static_cast<real>(ir.q[static_cast<size_t>(n) + 1]);
    real r = std::log(qn1) / qn;
    if (r > best) best = r;
  }
  return best;
}

struct ResonanceEntry {
  std::int64_t n = 0;   // resonant integer
  real dist = 0;        // ||2 theta - n alpha||
};

struct ResonanceList {
  real theta = 0;
  double epsilon0 = 0;
  std::int64_t k_max = 0;
  std::vector<ResonanceEntry> entries;  // |n_0| < |n_1| < ... (n_0 = 0)
  // Diagnostic: true when every consecutive pair beyond the first satisfies
  // |n_{j+1}| > 250 |n_j|.  Reported, never asserted.
  bool growth_250 = true;
};

// Exhaustive resonance scan over |k| <= k_max: k qualifies when
// ||2 theta - k alpha|| <= e^{-eps0 |k|} and the distance is minimal among
// all |l| <= |k|.
inline ResonanceList resonances(real theta, const Irrational& alpha, double eps0,
                                std::int64_t k_max) {
  if (!(eps0 > 0)) throw domain_error("resonances: epsilon0 must be positive");
  if (k_max < 1) throw domain_error("resonances: k_max must be >= 1");
  ResonanceList out;
  out.theta = theta;
  out.epsilon0 = eps0;
  out.k_max = k_max;
  const real two_theta = 2.0L * theta;
  real run_min = torus_norm(two_theta);
  out.entries.push_back({0, run_min});
  for (std::int64_t k = 1; k <= k_max; ++k) {
    real dp = torus_norm(two_theta - static_cast<real>(k) * alpha.value);
    real dm = torus_norm(two_theta + static_cast<real>(k) * alpha.value);
    std::int64_t n = dp <= dm ? k : -k;
    real d = dp <= dm ? dp : dm;
    if (d <= run_min && d <= std::exp(-eps0 * static_cast<double>(k)))
      out.entries.push_back({n, d});
    if (d < run_min) run_min = d;
  }
  for (size_t j = 2; j < out.entries.size(); ++j) {
    if (std::abs(out.entries[j].n) <= 250 * std::abs(out.entries[j - 1].n))
      out.growth_250 = false;
  }
  return out;
}

// Fitted constant for the lower bound ||k alpha|| >= C e^{-xi |k|} over the
// scanned range: the largest C that holds for all 1 <= |k| <= k_max.
inline real fitted_c_xi(const Irrational& alpha, double xi, std::int64_t k_max) {
  real best = 1e300L;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    real v = torus_norm(static_cast<real>(k) * alpha.value) *
             std::exp(xi * static_cast<double>(k));
    if (v < best) best = v;
  }
  return best;
}

}  // namespace ehm
