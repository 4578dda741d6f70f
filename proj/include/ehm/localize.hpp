#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ehm/errors.hpp"
#include "ehm/fourier.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"

// Localization diagnostics on the dual side: finite-section eigenvectors
// with their decay profiles, interval Green's functions (determinant-ratio
// and direct-solve routes), regularity and node-uniformity classifiers, and
// audits that fit the constants appearing in the underlying estimates.

namespace ehm {

// ---------------------------------------------------------------------------
// Dual finite-section eigenpairs.

struct DualEigenpair {
  double e_dual = 0;     // eigenvalue of the dual finite section
  double e_primal = 0;   // same point in primal energy units (l2 * e_dual)
  long n0 = 0;           // site of u.v.front(); the section is centered, n0 = -(size-1)/2
  SeqWindow u;           // eigenvector with u.at(0) == 1
  double residual = 0;   // sup_n |(H u)_n - e_dual u_n| over |n| <= 0.95 |n0|
};

// Eigenvector of the dual operator's centered finite section nearest
// e_target / l2, normalized so the center entry equals one.  section_size
// must be odd so the center site exists.
inline DualEigenpair dual_eigenpair(const CouplingTriple& lam, real alpha, real theta,
                                    double e_target, int section_size,
                                    double max_distance = 0.05) {
  lam.validate();
  if (classify_region(lam) != Region::II)
    throw WrongRegion("dual_eigenpair: couplings must lie in region II");
  if (section_size < 3 || section_size % 2 == 0)
    throw std::invalid_argument("dual_eigenpair: section_size must be odd and >= 3");
  if (!(max_distance > 0))
    throw std::invalid_argument("dual_eigenpair: max_distance must be positive");

  const CouplingTriple lh = dual(lam);
  const double target = e_target / lam.l2;
  const long n0 = -static_cast<long>(section_size / 2);
  const FiniteSection s = build_section(lh, alpha, theta, section_size, n0);

  // The two section eigenvalues bracketing the target; keep the nearer one.
  const int below = sturm_count_below(s, target);
  double best = 0, best_dist = std::numeric_limits<double>::infinity();
  if (below >= 1) {
    const double e = section_eigenvalue_bisect(s, below - 1);
    best = e;
    best_dist = std::abs(e - target);
  }
  if (below < section_size) {
    const double e = section_eigenvalue_bisect(s, below);
    const double d = std::abs(e - target);
    if (d < best_dist) {
      best = e;
      best_dist = d;
    }
  }
  if (!(best_dist <= max_distance))
    throw NoNearbyEigenvalue("dual_eigenpair: nearest section eigenvalue is " +
                             std::to_string(best_dist) + " from target, allowed " +
                             std::to_string(max_distance));

  EigenPair ep = section_eigenpair(s, best);
  const std::size_t center = static_cast<std::size_t>(-n0);
  const cplx u0 = ep.vec[center];
  if (std::abs(u0) < 1e-8)
    throw CenterVanishes("dual_eigenpair: |u_0| = " + std::to_string(std::abs(u0)) +
                         " before normalization");

  DualEigenpair out;
  out.e_dual = ep.value;
  out.e_primal = lam.l2 * ep.value;
  out.n0 = n0;
  out.u.n0 = n0;
  out.u.v.resize(ep.vec.size());
  for (std::size_t i = 0; i < ep.vec.size(); ++i) out.u.v[i] = ep.vec[i] / u0;

  // Residual against the whole-line action; the two sites just outside the
  // window carry the truncation error, so the sup stays off the edges.
  const SeqWindow hu = apply_h(lh, alpha, theta, out.u);
  const long edge = static_cast<long>(0.95 * static_cast<double>(-n0));
  double sup = 0;
  for (long n = -edge; n <= edge; ++n)
    sup = std::max(sup, std::abs(hu.at(n) - out.e_dual * out.u.at(n)));
  out.residual = sup;
  return out;
}

// ---------------------------------------------------------------------------
// Decay profiles between resonances.

struct DecayWindow {
  int j = 0;               // index of the resonance opening the window
  long k_lo = 0, k_hi = 0; // inclusive |k| range used for the fit
  double fitted_rate = 0;  // minus the least-squares slope of ln|u_k| vs |k|
  double max_abs = 0;      // max |u_k| over the window
  int points = 0;
};

struct DecayProfile {
  SeqWindow u;
  std::vector<DecayWindow> windows;
  double eps1 = 0;
  double rate_threshold = 0;  // eps1 / 5
  bool pass = false;          // every window meets the threshold
};

// Per-window decay fit of ln|u_k| against |k|.  Window j covers
// 3(|n_j|+1) < |k| < |n_{j+1}|/3 (the last window extends to the section
// edge); the outer edge_exclude fraction of the section never enters a fit.
// Windows squeezed shut by consecutive resonances are skipped; a window that
// is only empty because the section is too short throws WindowEmpty.
inline DecayProfile decay_profile(const SeqWindow& u, const ResonanceList& res,
                                  double eps1, double edge_exclude = 0.10) {
  if (!(eps1 > 0)) throw std::invalid_argument("decay_profile: eps1 must be positive");
  if (!(edge_exclude >= 0 && edge_exclude < 1))
    throw std::invalid_argument("decay_profile: edge_exclude must lie in [0,1)");
  if (u.n0 >= 0 || u.n_end() <= 0)
    throw std::invalid_argument("decay_profile: window must contain site 0");
  if (res.entries.empty() || res.entries.front().n != 0)
    throw std::invalid_argument("decay_profile: resonance list must start at n = 0");

  const long reach = std::min(-u.n0, u.n_end() - 1);
  const long edge = static_cast<long>(std::floor((1.0 - edge_exclude) *
                                                 static_cast<double>(reach)));

  DecayProfile out;
  out.u = u;
  out.eps1 = eps1;
  out.rate_threshold = eps1 / 5.0;

  const std::size_t m = res.entries.size();
  for (std::size_t j = 0; j < m; ++j) {
    const double nj = std::abs(static_cast<double>(res.entries[j].n));
    const double lo_real = 3.0 * (nj + 1.0);
    const bool has_next = j + 1 < m;
    const double hi_real =
        has_next ? std::abs(static_cast<double>(res.entries[j + 1].n)) / 3.0
                 : std::numeric_limits<double>::infinity();

    const long k_lo = static_cast<long>(std::floor(lo_real)) + 1;
    long k_hi = has_next ? static_cast<long>(std::ceil(hi_real - 1e-12)) - 1
                         : edge;
    if (has_next && k_lo > k_hi) continue;  // shut by the resonances themselves
    k_hi = std::min(k_hi, edge);
    if (k_hi - k_lo + 1 < 2)
      throw WindowEmpty("decay_profile: window " + std::to_string(j) +
                        " holds fewer than two |k| at this section size");

    double sx = 0, sy = 0, sxx = 0, sxy = 0, mx = 0;
    int pts = 0;
    for (long kk = k_lo; kk <= k_hi; ++kk) {
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        const double av = std::max(std::abs(u.at(sgn * kk)), 1e-300);
        const double X = static_cast<double>(kk);
        const double Y = std::log(av);
        sx += X;
        sy += Y;
        sxx += X * X;
        sxy += X * Y;
        mx = std::max(mx, av);
        ++pts;
      }
    }
    const double denom = static_cast<double>(pts) * sxx - sx * sx;
    const double slope = (static_cast<double>(pts) * sxy - sx * sy) / denom;

    DecayWindow w;
    w.j = static_cast<int>(j);
    w.k_lo = k_lo;
    w.k_hi = k_hi;
    w.fitted_rate = -slope;
    w.max_abs = mx;
    w.points = pts;
    out.windows.push_back(w);
  }

  if (out.windows.empty())
    throw WindowEmpty("decay_profile: no window is resolvable at this section size");
  out.pass = true;
  for (const auto& w : out.windows)
    if (!(w.fitted_rate >= out.rate_threshold)) out.pass = false;
  return out;
}

inline DecayProfile decay_profile(const DualEigenpair& dep, const ResonanceList& res,
                                  double eps1, double edge_exclude = 0.10) {
  return decay_profile(dep.u, res, eps1, edge_exclude);
}

// ---------------------------------------------------------------------------
// Interval Green's functions G_I = (E - H_I)^{-1}.

enum class GreenMethod { cramer, dense_inverse };

struct GreenEval {
  long x1 = 0, x2 = 0;
  long x = 0, y = 0;
  double e = 0;
  cplx value{};
  GreenMethod method = GreenMethod::cramer;
};

// G_I(x, y) on I = [x1, x2].  The determinant-ratio route multiplies the
// hopping symbols between x and y by the principal minors on either side of
// the pair and divides by the full interval determinant; the direct route
// solves (H_I - E) g = e_y and flips the sign.  Both see the same matrix, so
// they agree to rounding.
inline cplx green_value(const CouplingTriple& lam, real alpha, real theta, double E,
                        long x1, long x2, long x, long y,
                        GreenMethod method = GreenMethod::cramer) {
  lam.validate();
  if (x2 < x1) throw std::invalid_argument("green_value: needs x1 <= x2");
  if (x < x1 || x > x2 || y < x1 || y > x2)
    throw std::invalid_argument("green_value: x and y must lie in [x1, x2]");
  const long len = x2 - x1 + 1;
  if (len > 100000) throw std::invalid_argument("green_value: interval too long");
  const int n = static_cast<int>(len);

  if (method == GreenMethod::dense_inverse) {
    const FiniteSection s = build_section(lam, alpha, theta, n, x1);
    std::vector<cplx> rhs(static_cast<std::size_t>(n), cplx(0, 0));
    rhs[static_cast<std::size_t>(y - x1)] = cplx(1, 0);
    const std::vector<cplx> g = tridiag_solve_shifted(s, E, rhs);
    return -g[static_cast<std::size_t>(x - x1)];
  }

  // Hermitian interval: the lower triangle is the conjugate of the upper.
  bool swapped = false;
  long xx = x, yy = y;
  if (xx > yy) {
    std::swap(xx, yy);
    swapped = true;
  }

  const real theta1 = theta + static_cast<real>(x1) * alpha;
  const std::vector<double> P = det_P(lam, alpha, theta1, E, n);
  double scale = 0;
  for (double pv : P) scale = std::max(scale, std::abs(pv));
  const double p_full = P[static_cast<std::size_t>(n)];
  if (std::abs(p_full) < 1e-12 * scale)
    throw NearSingular("green_value: interval determinant " + std::to_string(p_full) +
                       " below 1e-12 of scale " + std::to_string(scale));

  const double p_left = P[static_cast<std::size_t>(xx - x1)];
  const real theta_r = theta + static_cast<real>(yy + 1) * alpha;
  const std::vector<double> Pr =
      det_P(lam, alpha, theta_r, E, static_cast<int>(x2 - yy));
  const double p_right = Pr[static_cast<std::size_t>(x2 - yy)];

  const TrigPoly cp = c_poly(lam, static_cast<double>(alpha));
  cplx hop(1, 0);
  for (long l = xx; l < yy; ++l) hop *= cp(phase_at(theta, alpha, l));

  const cplx g = hop * (p_left * p_right / p_full);
  if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
    throw Overflow("green_value: determinant ratio overflowed");
  return swapped ? std::conj(g) : g;
}

inline GreenEval green(const CouplingTriple& lam, real alpha, real theta, double E,
                       long x1, long x2, long x, long y,
                       GreenMethod method = GreenMethod::cramer) {
  GreenEval ev;
  ev.x1 = x1;
  ev.x2 = x2;
  ev.x = x;
  ev.y = y;
  ev.e = E;
  ev.method = method;
  ev.value = green_value(lam, alpha, theta, E, x1, x2, x, y, method);
  return ev;
}

// ---------------------------------------------------------------------------
// Regularity of a site at fixed energy.

struct RegularityResult {
  bool regular = false;
  long witness_x1 = 0, witness_x2 = 0;  // certifying interval when regular
  // Smallest over admissible intervals of max_i |G_I(y, x_i)| e^{m |y - x_i|};
  // regular iff this reaches <= 1.
  double best_margin = std::numeric_limits<double>::infinity();
};

// A site y is regular at scale k and rate m when some length-k interval
// containing it, with both endpoints at distance >= k/3, has Green's values
// to the endpoints below e^{-m |y - x_i|}.  All admissible intervals are
// scanned (they are independent; the loop stays sequential for determinism).
// Near-singular intervals are skipped unless they block the verdict.
inline RegularityResult regularity(const CouplingTriple& lam, real alpha, real theta,
                                   double E, long y, long k, double m) {
  if (k < 3) throw std::invalid_argument("regularity: k must be >= 3");
  if (!(m > 0)) throw std::invalid_argument("regularity: rate m must be positive");

  RegularityResult out;
  bool skipped = false;
  const double third = static_cast<double>(k) / 3.0;
  for (long x1 = y - k + 1; x1 <= y; ++x1) {
    const long x2 = x1 + k - 1;
    if (static_cast<double>(y - x1) < third) continue;
    if (static_cast<double>(x2 - y) < third) continue;
    try {
      const cplx g1 = green_value(lam, alpha, theta, E, x1, x2, y, x1);
      const cplx g2 = green_value(lam, alpha, theta, E, x1, x2, y, x2);
      const double r1 = std::abs(g1) * std::exp(m * static_cast<double>(y - x1));
      const double r2 = std::abs(g2) * std::exp(m * static_cast<double>(x2 - y));
      const double margin = std::max(r1, r2);
      if (margin < out.best_margin) {
        out.best_margin = margin;
        out.witness_x1 = x1;
        out.witness_x2 = x2;
      }
      if (margin <= 1.0) out.regular = true;
    } catch (const NearSingular&) {
      skipped = true;
    }
  }
  if (!out.regular && skipped)
    throw NearSingular("regularity: undecided, a candidate interval determinant vanished");
  return out;
}

// ---------------------------------------------------------------------------
// Node uniformity on [-1, 1].

struct UniformityResult {
  bool uniform = false;
  double max_product = 0;  // max over x and l0 of the node product
  double bound = 0;        // e^{k gamma}
  double x_argmax = 0;
  int l0_argmax = 0;
};

namespace detail {

// log of max_{l0} prod_{l != l0} |x - c_l| / |c_{l0} - c_l|, with the
// denominator sums precomputed per l0.
inline std::pair<double, int> node_product_log(const std::vector<double>& c,
                                               const std::vector<double>& denom,
                                               double x) {
  double total = 0;
  for (double cl : c) total += std::log(std::abs(x - cl));
  double best = -std::numeric_limits<double>::infinity();
  int bl = 0;
  for (std::size_t l0 = 0; l0 < c.size(); ++l0) {
    const double v = total - std::log(std::abs(x - c[l0])) - denom[l0];
    if (v > best) {
      best = v;
      bl = static_cast<int>(l0);
    }
  }
  return {best, bl};
}

}  // namespace detail

// Compares the largest Lagrange node product over x in [-1, 1] with e^{k gamma}
// for the nodes cos 2 pi theta_j.  The maximum is located on a dense grid and
// sharpened by three golden-section rounds inside the winning cell, so the
// reported value is a local-refinement estimate with cell-size accuracy
// ~ (2/x_grid_size) * 0.618^36.
inline UniformityResult uniformity(const std::vector<double>& thetas, double gamma,
                                   int x_grid_size = 4096) {
  const std::size_t kp1 = thetas.size();
  if (kp1 < 2) throw std::invalid_argument("uniformity: need at least two nodes");
  if (x_grid_size < 16) throw std::invalid_argument("uniformity: grid too small");

  std::vector<double> c(kp1);
  for (std::size_t j = 0; j < kp1; ++j)
    c[j] = std::cos(kTwoPi * thetas[j]);
  for (std::size_t i = 0; i < kp1; ++i)
    for (std::size_t j = i + 1; j < kp1; ++j)
      if (std::abs(c[i] - c[j]) < 1e-12)
        throw DegenerateNodes("uniformity: cos 2 pi theta coincide at nodes " +
                              std::to_string(i) + ", " + std::to_string(j));

  std::vector<double> denom(kp1, 0.0);
  for (std::size_t l0 = 0; l0 < kp1; ++l0)
    for (std::size_t l = 0; l < kp1; ++l)
      if (l != l0) denom[l0] += std::log(std::abs(c[l0] - c[l]));

  const int k = static_cast<int>(kp1) - 1;
  double best_log = -std::numeric_limits<double>::infinity();
  double best_x = -1;
  int best_l0 = 0;
  for (int i = 0; i <= x_grid_size; ++i) {
    const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(x_grid_size);
    const auto [v, l0] = detail::node_product_log(c, denom, x);
    if (v > best_log) {
      best_log = v;
      best_x = x;
      best_l0 = l0;
    }
  }

  // Golden-section sharpening inside the bracketing pair of grid cells.
  const double h = 2.0 / static_cast<double>(x_grid_size);
  double a = std::max(-1.0, best_x - h);
  double b = std::min(1.0, best_x + h);
  const double gr = 0.61803398874989484820;
  for (int round = 0; round < 3; ++round) {
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = detail::node_product_log(c, denom, x1).first;
    double f2 = detail::node_product_log(c, denom, x2).first;
    for (int it = 0; it < 12; ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = detail::node_product_log(c, denom, x2).first;
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = detail::node_product_log(c, denom, x1).first;
      }
    }
    const double xm = 0.5 * (a + b);
    const auto [vm, lm] = detail::node_product_log(c, denom, xm);
    if (vm > best_log) {
      best_log = vm;
      best_x = xm;
      best_l0 = lm;
    }
  }

  UniformityResult out;
  out.max_product = std::exp(best_log);
  out.bound = std::exp(static_cast<double>(k) * gamma);
  out.uniform = out.max_product <= out.bound;
  out.x_argmax = best_x;
  out.l0_argmax = best_l0;
  return out;
}

// ---------------------------------------------------------------------------
// Constant audits.

enum class AuditMode { log_sin, trig_poly };

struct AuditEntry {
  long long q = 0, q_next = 0;
  double implied = 0;       // max implied constant over the samples at this q
  double mean_implied = 0;  // average over the samples
};

struct ConstantAuditReport {
  AuditMode mode = AuditMode::log_sin;
  int r = 1;
  std::vector<AuditEntry> entries;
  double max_implied = 0;
  double trend_slope = 0;  // least-squares slope of implied vs ln q
};

struct AuditParams {
  std::vector<long long> qs;  // convergent denominators of the irrational
  int samples = 100;
  int r = 1;       // trig_poly degree multiplier: essential degree r q - 1
  int grid = 8192; // trig_poly sup-norm grid
};

namespace detail {

inline std::uint64_t lcg_next(std::uint64_t& s) {
  s = s * 6364136223846793005ull + 1442695040888963407ull;
  return s;
}

inline double lcg_uniform(std::uint64_t& s) {
  return static_cast<double>(lcg_next(s) >> 11) * 0x1.0p-53;
}

// Index of q among the convergent denominators, requiring a successor.
inline int convergent_index(const Irrational& a, long long q) {
  for (std::size_t i = 0; i + 1 < a.q.size(); ++i)
    if (static_cast<long long>(a.q[i]) == q) return static_cast<int>(i);
  throw std::invalid_argument("constant_audit: " + std::to_string(q) +
                              " is not a convergent denominator with a successor");
}

}  // namespace detail

// Smallest C with ||p||_infty <= C * q_next^{C r} * max_j |p(x0 + j alpha)|,
// the orbit running over r*q consecutive points.  The sup norm is taken on a
// uniform grid, adequate for the degrees audited here.
inline double implied_poly_constant(const TrigPoly& p, real alpha, double x0,
                                    long long q, long long q_next, int r,
                                    int grid = 8192) {
  if (q < 1 || q_next < 1 || r < 1 || grid < 4)
    throw std::invalid_argument("implied_poly_constant: bad parameters");
  double sup = 0;
  for (int i = 0; i < grid; ++i)
    sup = std::max(sup, std::abs(p(static_cast<double>(i) / grid)));
  double omax = 0;
  const long long orbit = static_cast<long long>(r) * q;
  for (long long j = 0; j < orbit; ++j)
    omax = std::max(omax, std::abs(p(phase_at(x0, alpha, static_cast<long>(j)))));
  if (!(sup > 0) || !(omax > 0))
    throw std::invalid_argument("implied_poly_constant: polynomial vanishes on the samples");

  const double log_ratio = std::log(sup / omax);
  const double lq = static_cast<double>(r) * std::log(static_cast<double>(q_next));
  // ln C + C r ln q_next = ln ratio is strictly increasing in C.
  double lo = 1e-12, hi = 128.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::log(mid) + mid * lq < log_ratio)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// log_sin mode: deviation of sum_{l != l0} ln|sin pi(x + l alpha)| from
// -(q-1) ln 2 over random x, reported as |deviation| / ln q (l0 minimizes
// |sin| along the orbit).  trig_poly mode: random polynomials with Fourier
// support on an integer interval of length r q (essential degree r q - 1),
// reported through implied_poly_constant.
inline ConstantAuditReport constant_audit(const Irrational& a, AuditMode mode,
                                          const AuditParams& params,
                                          std::uint64_t seed) {
  if (params.qs.empty())
    throw std::invalid_argument("constant_audit: need at least one denominator");
  if (params.samples < 1)
    throw std::invalid_argument("constant_audit: samples must be >= 1");
  if (params.r < 1) throw std::invalid_argument("constant_audit: r must be >= 1");

  ConstantAuditReport rep;
  rep.mode = mode;
  rep.r = params.r;
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;

  for (long long q : params.qs) {
    const int idx = detail::convergent_index(a, q);
    AuditEntry entry;
    entry.q = q;
    entry.q_next = static_cast<long long>(a.q[static_cast<std::size_t>(idx) + 1]);

    double mx = 0, mean = 0;
    for (int sample = 0; sample < params.samples; ++sample) {
      double implied = 0;
      if (mode == AuditMode::log_sin) {
        const double x = detail::lcg_uniform(state);
        double total = 0;
        double tmin = std::numeric_limits<double>::infinity();
        for (long long l = 0; l < q; ++l) {
          const double ph = phase_at(x, a.value, static_cast<long>(l));
          const double t = std::log(std::max(std::abs(std::sin(kPi * ph)), 1e-300));
          total += t;
          tmin = std::min(tmin, t);
        }
        const double dev = (total - tmin) +
                           static_cast<double>(q - 1) * std::log(2.0);
        implied = std::abs(dev) / std::log(static_cast<double>(q));
      } else {
        const long long support = static_cast<long long>(params.r) * q;
        TrigPoly p;
        p.k_min = -static_cast<int>((support - 1) / 2);
        p.c.resize(static_cast<std::size_t>(support));
        for (auto& ck : p.c)
          ck = cplx(2.0 * detail::lcg_uniform(state) - 1.0,
                    2.0 * detail::lcg_uniform(state) - 1.0);
        const double x0 = detail::lcg_uniform(state);
        implied = implied_poly_constant(p, a.value, x0, q, entry.q_next,
                                        params.r, params.grid);
      }
      mx = std::max(mx, implied);
      mean += implied;
    }
    entry.implied = mx;
    entry.mean_implied = mean / static_cast<double>(params.samples);
    rep.entries.push_back(entry);
    rep.max_implied = std::max(rep.max_implied, mx);
  }

  // Trend of the per-q maxima against ln q; flat or falling means the fitted
  // constant is honest across scales.
  if (rep.entries.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(rep.entries.size());
    for (const auto& e : rep.entries) {
      const double X = std::log(static_cast<double>(e.q));
      const double Y = e.implied;
      sx += X;
      sy += Y;
      sxx += X * X;
      sxy += X * Y;
    }
    rep.trend_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return rep;
}

// Floor for the theta-average of ln|P_k| / k of dual-side interval
// determinants, in closed form from the primal couplings.  Vanishes for
// (0, l2, 0): there the asymmetry rate and the mean log symbol cancel.
inline double det_mean_log_floor(const CouplingTriple& lam) {
  lam.validate();
  const double d = lam.l1 * lam.l3;
  const double disc = lam.l2 * lam.l2 - 4.0 * d;
  if (!(disc >= 0))
    throw std::invalid_argument("det_mean_log_floor: needs l2^2 >= 4 l1 l3");
  return std::log((lam.l2 + std::sqrt(disc)) / (2.0 * lam.l2));
}

}  // namespace ehm
