#pragma once
// Almost-reducibility pipeline for the subcritical primal cocycle, parabolic
// reduction at resonant phases, cohomological solvers, SL(2) completion, the
// gap-opening trace certificate, and theta/rho consistency reports.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ehm/cocycle.hpp"
#include "ehm/errors.hpp"
#include "ehm/fourier.hpp"
#include "ehm/localize.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"
#include "ehm/spectral.hpp"

namespace ehm {

// ---------------------------------------------------------------------------
// TrigVector: a pair of finite Fourier sums sharing one construction, plus
// the phase that produced them.  Houses u(x), U(x), and defect numerators.
struct TrigVector {
  TrigPoly v1, v2;
  double theta = 0;

  std::pair<cplx, cplx> eval(cplx z) const { return {v1.eval(z), v2.eval(z)}; }
};

// sup |p| over the strip |Im z| <= height, sampled on `grid`-point real grids
// at five equally spaced heights.  Grid surrogate for the analytic sup-norm.
// The polynomial is trimmed first: noise modes are free on the axis but grow
// like e^{2 pi |k| h} off it.
inline double strip_sup(const TrigPoly& p, double height, int grid = 2048) {
  if (!(height >= 0)) throw std::invalid_argument("strip_sup: height >= 0");
  if (grid < 8) throw std::invalid_argument("strip_sup: grid too small");
  const TrigPoly q = p.trimmed();
  double best = 0;
  for (int h = -2; h <= 2; ++h) {
    const double im = height * static_cast<double>(h) / 2.0;
    for (int j = 0; j < grid; ++j) {
      // Doubled fundamental domain so half-integer frequencies are covered.
      const double x = 2.0 * static_cast<double>(j) / grid;
      best = std::max(best, std::abs(q.eval(cplx(x, im))));
    }
  }
  return best;
}

namespace detail {

// Coefficient arithmetic on integer-frequency polynomials (half == 0).
inline void require_integer_freq(const TrigPoly& p, const char* who) {
  if (p.half != 0)
    throw std::invalid_argument(std::string(who) +
                                ": integer-frequency polynomial required");
}

inline TrigPoly poly_zero() {
  TrigPoly p;
  p.c = {cplx(0, 0)};
  return p;
}

inline TrigPoly poly_add(const TrigPoly& a, const TrigPoly& b) {
  require_integer_freq(a, "poly_add");
  require_integer_freq(b, "poly_add");
  TrigPoly r;
  r.k_min = std::min(a.k_min, b.k_min);
  const int k_hi = std::max(a.k_max(), b.k_max());
  r.c.assign(static_cast<size_t>(k_hi - r.k_min + 1), cplx(0, 0));
  for (int k = a.k_min; k <= a.k_max(); ++k)
    r.c[static_cast<size_t>(k - r.k_min)] += a.c[static_cast<size_t>(k - a.k_min)];
  for (int k = b.k_min; k <= b.k_max(); ++k)
    r.c[static_cast<size_t>(k - r.k_min)] += b.c[static_cast<size_t>(k - b.k_min)];
  return r;
}

inline TrigPoly poly_scale(TrigPoly a, cplx s) {
  for (auto& ck : a.c) ck *= s;
  return a;
}

// x -> x + alpha on coefficients: c_k *= e^{2 pi i k alpha}, phase reduced in
// extended precision so large k stays exact.
inline TrigPoly poly_shift_arg(TrigPoly a, real alpha) {
  require_integer_freq(a, "poly_shift_arg");
  for (int k = a.k_min; k <= a.k_max(); ++k) {
    const double ph = phase_at(0.0L, alpha, k);
    a.c[static_cast<size_t>(k - a.k_min)] *=
        std::exp(cplx(0, kTwoPi * ph));
  }
  return a;
}

inline TrigPoly poly_truncate(const TrigPoly& a, int K) {
  require_integer_freq(a, "poly_truncate");
  TrigPoly r;
  const int lo = std::max(a.k_min, -K), hi = std::min(a.k_max(), K);
  if (lo > hi) return poly_zero();
  r.k_min = lo;
  r.c.assign(a.c.begin() + (lo - a.k_min), a.c.begin() + (hi - a.k_min + 1));
  return r;
}

inline cplx poly_mean(const TrigPoly& a) {
  if (a.half != 0) return cplx(0, 0);
  if (a.k_min <= 0 && a.k_max() >= 0)
    return a.c[static_cast<size_t>(-a.k_min)];
  return cplx(0, 0);
}

// Exact real-axis evaluation of the SL(2,R)-normalized transfer matrix
// (1/sqrt(|c|(x)|c|(x-a))) [[E - v(x), -|c|(x-a)], [|c|(x), 0]].  On the axis
// |c|(x) = |c(x)|, so no square-root continuation is involved.
inline std::function<Mat2(double)> at_tilde_axis(const CouplingTriple& lam,
                                                 double alpha_d, double E) {
  auto cp = std::make_shared<TrigPoly>(c_poly(lam, alpha_d));
  return [cp, alpha_d, E](double x) -> Mat2 {
    const double cx = std::abs((*cp)(x));
    const double cxa = std::abs((*cp)(x - alpha_d));
    const double r = std::sqrt(cx * cxa);
    if (!(r > 1e-300)) throw SingularSymbol("symbol vanishes on the axis");
    const double v = 2.0 * std::cos(kTwoPi * x);
    return {cplx((E - v) / r, 0), cplx(-cxa / r, 0), cplx(cx / r, 0),
            cplx(0, 0)};
  };
}

inline double circle_dist(double a, double b) {
  double d = std::abs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

inline double frac01(real x) {
  real f = x - std::floor(static_cast<double>(x));
  while (f >= 1.0L) f -= 1.0L;
  while (f < 0.0L) f += 1.0L;
  return static_cast<double>(f);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// build_U: Bloch section of the primal transfer cocycle from a truncated dual
// eigenvector.

struct BuildUResult {
  TrigVector u_vec;   // U(x) = (e^{2 pi i theta} u(x), u(x - alpha))
  TrigVector defect;  // numerator c(x) G_1(x) in component 1, zero in 2
  long x1 = 0, x2 = 0;
  double interior_mass = 0;  // largest numerator mode strictly inside
  double boundary_mass = 0;  // largest of the four boundary modes
};

// u lives on the symmetric window [x1, x2] = [-m, m] with u_0 = 1.  U(x)
// built from it satisfies A(x) U(x) = e^{2 pi i theta} U(x + alpha) + G(x)
// for the energy-e_primal transfer cocycle, with second component exactly
// zero and c(x) G_1(x) a polynomial supported on {x1-1, x1, x2, x2+1}.
// The stored defect is that numerator; dividing by the zero-free symbol
// recovers G itself (see defect_strip_sup).  interior_tol bounds the mass
// allowed off the four boundary modes; scale it with the eigen-residual of
// the vector being truncated.
inline BuildUResult build_U(const SeqWindow& u, real theta,
                            const CouplingTriple& lam, const Irrational& alpha,
                            double e_primal, double interior_tol = 1e-10) {
  const long m = -u.n0;
  if (u.v.empty() || u.n_end() - 1 != m || m < 0)
    throw std::invalid_argument("build_U: window must be symmetric around 0");
  if (std::abs(u.at(0) - cplx(1, 0)) > 1e-9)
    throw std::invalid_argument("build_U: center entry must equal one");
  lam.validate();

  const CouplingTriple lam_hat = dual(lam);
  const double e_dual = e_primal / lam.l2;

  // Numerator modes: d_k = e_dual * u_k - (H_dual u)_k, scaled by l2 and the
  // phase so that c(x) G_1(x) = sum_k l2 e^{2 pi i theta} d_k e^{2 pi i k x}.
  const SeqWindow hu = apply_h(lam_hat, alpha.value, theta, u);
  BuildUResult out;
  out.x1 = -m;
  out.x2 = m;
  const double th = static_cast<double>(theta - std::floor(static_cast<double>(theta)));
  const cplx eith = std::exp(cplx(0, kTwoPi * th));

  out.defect.theta = th;
  out.defect.v1.k_min = static_cast<int>(-m - 1);
  out.defect.v1.c.assign(static_cast<size_t>(2 * m + 3), cplx(0, 0));
  for (long k = -m - 1; k <= m + 1; ++k) {
    const cplx dk = e_dual * u.at(k) - hu.at(k);
    out.defect.v1.c[static_cast<size_t>(k + m + 1)] = lam.l2 * eith * dk;
  }
  out.defect.v2 = detail::poly_zero();

  double interior = 0, boundary = 0;
  for (long k = -m - 1; k <= m + 1; ++k) {
    const double a = std::abs(out.defect.v1.c[static_cast<size_t>(k + m + 1)]);
    if (k == -m - 1 || k == -m || k == m || k == m + 1)
      boundary = std::max(boundary, a);
    else
      interior = std::max(interior, a);
  }
  out.interior_mass = interior;
  out.boundary_mass = boundary;
  if (interior > interior_tol)
    throw SupportLeak("build_U: defect mass off the boundary modes");

  out.u_vec.theta = th;
  out.u_vec.v1.k_min = static_cast<int>(-m);
  out.u_vec.v1.c.assign(static_cast<size_t>(2 * m + 1), cplx(0, 0));
  out.u_vec.v2 = out.u_vec.v1;
  for (long k = -m; k <= m; ++k) {
    const cplx uk = u.at(k);
    out.u_vec.v1.c[static_cast<size_t>(k + m)] = eith * uk;
    const double ph = phase_at(0.0L, alpha.value, k);
    out.u_vec.v2.c[static_cast<size_t>(k + m)] =
        uk * std::exp(cplx(0, -kTwoPi * ph));
  }
  return out;
}

// sup over the strip |Im z| <= height of |c(z) G_1(z)| / |c(z)|, i.e. the
// defect itself with the symbol divided back out.  Region II keeps c
// zero-free on the strip for the heights in use.
inline double defect_strip_sup(const BuildUResult& b, const CouplingTriple& lam,
                               const Irrational& alpha, double height,
                               int grid = 2048) {
  const TrigPoly num = b.defect.v1.trimmed();
  const TrigPoly cp = c_poly(lam, alpha.value_d());
  double best = 0;
  for (int h = -2; h <= 2; ++h) {
    const double im = height * static_cast<double>(h) / 2.0;
    for (int j = 0; j < grid; ++j) {
      const double x = static_cast<double>(j) / grid;
      const cplx cz = cp.eval(cplx(x, im));
      if (std::abs(cz) < 1e-14)
        throw SingularSymbol("defect_strip_sup: symbol vanishes on the strip");
      best = std::max(best, std::abs(num.eval(cplx(x, im)) / cz));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// build_W: real conjugation of the SL(2,R) cocycle toward a rotation.

struct ConjugacyResult {
  int grid = 0;
  long n_j = 0;
  double theta = 0;
  double theta_tilde = 0;     // theta - n_j alpha / 2
  double rotation_turns = 0;  // target rotation in turns: -theta_tilde, with
                              // the sign flipped when the T column is negated
  std::vector<RMat2> w2;      // W2 on x_i = 2 i / grid (one period-2 cell)
  std::function<RMat2(double)> w2_fn;  // recomputes W2 at arbitrary phase
  int measured_degree = 0;
  double defect = 0;    // sup-grid |W2(x+a)^{-1} At(x) W2(x) - R_target|
  double l_value = 0;   // 1 / ||2 theta - n_j alpha||
  double det_min = 0;   // min det W1 over the grid (after the sign choice)
  double det_max = 0;
  double det_spread = 0;
  double w_sup = 0;        // sup Frobenius norm of W2
  double det_w2_dev = 0;   // max |det W2 - 1|
};

// U from build_U; n_j a resonance of its phase.  Frames U by the symbol
// conjugation Q and the half-shift e^{pi i n_j x}, splits into real and
// imaginary columns, and normalizes the determinant pointwise.
inline ConjugacyResult build_W(const TrigVector& u_vec,
                               const CouplingTriple& lam,
                               const Irrational& alpha, double e_primal,
                               long n_j, int grid = 512) {
  if (grid < 16) throw std::invalid_argument("build_W: grid too small");
  QConj q = q_conjugation(lam, alpha);
  // Q is evaluated off the sample grid of its construction; drop noise modes.
  q.f = q.f.trimmed();
  q.g1 = q.g1.trimmed();
  q.g2 = q.g2.trimmed();
  const double ad = alpha.value_d();

  ConjugacyResult out;
  out.grid = grid;
  out.n_j = n_j;
  out.theta = u_vec.theta;
  out.theta_tilde =
      static_cast<double>(static_cast<real>(u_vec.theta) -
                          static_cast<real>(n_j) * alpha.value / 2.0L);
  out.l_value = 1.0 / std::max<double>(
      static_cast<double>(torus_norm(2.0L * static_cast<real>(u_vec.theta) -
                                     static_cast<real>(n_j) * alpha.value)),
      1e-300);

  struct Shared {
    QConj q;
    TrigVector u;
    long n_j;
    double sign = 1.0;
  };
  auto sh = std::make_shared<Shared>(Shared{q, u_vec, n_j, 1.0});

  auto u0_at = [sh](double x) -> std::pair<cplx, cplx> {
    const auto uv = sh->u.eval(cplx(x, 0));
    const Mat2 Q = sh->q.Q(cplx(x, 0));
    const cplx ph = std::exp(cplx(0, kPi * static_cast<double>(sh->n_j) * x));
    return {ph * (Q.m00 * uv.first + Q.m01 * uv.second),
            ph * (Q.m10 * uv.first + Q.m11 * uv.second)};
  };

  // Determinant sign of (S, T) over the doubled circle decides the T column.
  double dmin = 1e300, dmax = -1e300;
  for (int i = 0; i < grid; ++i) {
    const double x = 2.0 * static_cast<double>(i) / grid;
    const auto [t1, t2] = u0_at(x);
    const double det = t1.real() * t2.imag() - t2.real() * t1.imag();
    dmin = std::min(dmin, det);
    dmax = std::max(dmax, det);
  }
  if (dmin > 0)
    sh->sign = 1.0;
  else if (dmax < 0)
    sh->sign = -1.0;
  else
    throw DetVanishes("build_W: det(S, T) changes sign on the grid");
  out.det_min = std::min(std::abs(dmin), std::abs(dmax));
  out.det_max = std::max(std::abs(dmin), std::abs(dmax));
  out.det_spread = out.det_max - out.det_min;
  if (out.det_min < 1e-14)
    throw DetVanishes("build_W: det W1 below threshold");
  out.rotation_turns = -sh->sign * out.theta_tilde;

  auto w2_at = [sh, u0_at](double x) -> RMat2 {
    const auto [t1, t2] = u0_at(x);
    const double s1 = t1.real(), s2 = t2.real();
    const double q1 = sh->sign * t1.imag(), q2 = sh->sign * t2.imag();
    const double det = s1 * q2 - s2 * q1;
    if (!(det > 0)) throw DetVanishes("build_W: det W1 not positive");
    const double r = 1.0 / std::sqrt(det);
    return {s1 * r, q1 * r, s2 * r, q2 * r};
  };
  out.w2_fn = w2_at;

  auto at = detail::at_tilde_axis(lam, ad, e_primal);
  const RMat2 target = rotation_by_turns(out.rotation_turns);
  out.w2.reserve(static_cast<size_t>(grid));
  for (int i = 0; i < grid; ++i) {
    const double x = 2.0 * static_cast<double>(i) / grid;
    const RMat2 w = w2_at(x);
    out.w2.push_back(w);
    out.w_sup = std::max(out.w_sup,
                         std::sqrt(w.m00 * w.m00 + w.m01 * w.m01 +
                                   w.m10 * w.m10 + w.m11 * w.m11));
    out.det_w2_dev = std::max(out.det_w2_dev, std::abs(w.det() - 1.0));
    const RMat2 wa = w2_at(x + ad);
    const RMat2 a = real_part(at(x), 1e-9);
    // wa^{-1} (a w) against the target rotation.
    const RMat2 aw = a * w;
    const double inv_det = 1.0 / wa.det();
    const RMat2 conj = {
        (wa.m11 * aw.m00 - wa.m01 * aw.m10) * inv_det,
        (wa.m11 * aw.m01 - wa.m01 * aw.m11) * inv_det,
        (-wa.m10 * aw.m00 + wa.m00 * aw.m10) * inv_det,
        (-wa.m10 * aw.m01 + wa.m00 * aw.m11) * inv_det};
    const double dev = std::sqrt(
        (conj.m00 - target.m00) * (conj.m00 - target.m00) +
        (conj.m01 - target.m01) * (conj.m01 - target.m01) +
        (conj.m10 - target.m10) * (conj.m10 - target.m10) +
        (conj.m11 - target.m11) * (conj.m11 - target.m11));
    out.defect = std::max(out.defect, dev);
  }

  const int deg_grid =
      std::max(4096, 64 * static_cast<int>(std::min<long>(std::abs(n_j), 512) + 1));
  out.measured_degree = degree(w2_at, 2.0, deg_grid);
  return out;
}

// ---------------------------------------------------------------------------
// almost_reduce: the window-doubling conjugation trend at a resonant phase.

struct AlmostReduceConfig {
  std::vector<long> window_sizes{16, 32, 64};
  int grid = 512;
  double eps0 = 0.5;           // resonance threshold for locating n_j
  long k_max = 200;            // resonance search depth
  int n0_floor = 8;            // below this resonance scale results are flagged
  int section_size = 0;        // dual section; 0 picks 4 * max(window) + 1
  double max_distance = 0.05;  // eigenvalue selection radius
  int rot_iters = 20000;       // rotation-number consistency probe
};

struct AlmostReduceReport {
  double e_primal = 0, e_dual = 0;
  double eigen_residual = 0;
  long n_j = 0;
  double l_value = 0;
  bool small_window = false;  // |n_j| + 1 <= n0_floor; flagged, never fatal
  std::vector<ConjugacyResult> stages;
  bool trend_ok = true;  // defects strictly decreasing across windows
  double rotation_gap = -1;  // circle distance of rho(conjugated) to target
  double fitted_c_wl = 0;    // ln sup|W| / ln L at the largest window
  std::string note;
};

// The phase is an input: the energy-to-phase map is realized only through
// the finite-section eigenvalue selection, whose achieved residual is
// reported for downstream judgement.
inline AlmostReduceReport almost_reduce(const CouplingTriple& lam,
                                        const Irrational& alpha, real theta,
                                        double e_target, int resonance_index,
                                        const AlmostReduceConfig& cfg = {}) {
  if (cfg.window_sizes.empty())
    throw std::invalid_argument("almost_reduce: no window sizes");
  long maxw = 0;
  for (long w : cfg.window_sizes) {
    if (w < 1) throw std::invalid_argument("almost_reduce: window size >= 1");
    maxw = std::max(maxw, w);
  }
  const int section =
      cfg.section_size > 0 ? cfg.section_size : static_cast<int>(4 * maxw + 1);
  if (section < 2 * maxw + 1)
    throw std::invalid_argument("almost_reduce: section smaller than window");

  AlmostReduceReport rep;
  const DualEigenpair dep = dual_eigenpair(lam, alpha.value, theta, e_target,
                                           section, cfg.max_distance);
  rep.e_primal = dep.e_primal;
  rep.e_dual = dep.e_dual;
  rep.eigen_residual = dep.residual;

  const ResonanceList res = resonances(theta, alpha, cfg.eps0, cfg.k_max);
  if (resonance_index < 0 ||
      resonance_index >= static_cast<int>(res.entries.size()))
    throw std::invalid_argument("almost_reduce: resonance index out of range");
  rep.n_j = res.entries[static_cast<size_t>(resonance_index)].n;
  rep.small_window = std::abs(rep.n_j) + 1 <= cfg.n0_floor;

  const double interior_tol =
      std::max(1e-10, 20.0 * lam.l2 * dep.residual);
  for (long w : cfg.window_sizes) {
    SeqWindow slice;
    slice.n0 = -w;
    slice.v.resize(static_cast<size_t>(2 * w + 1));
    for (long k = -w; k <= w; ++k)
      slice.v[static_cast<size_t>(k + w)] = dep.u.at(k);
    const BuildUResult bu =
        build_U(slice, theta, lam, alpha, dep.e_primal, interior_tol);
    rep.stages.push_back(
        build_W(bu.u_vec, lam, alpha, dep.e_primal, rep.n_j, cfg.grid));
  }
  rep.l_value = rep.stages.back().l_value;

  for (size_t i = 1; i < rep.stages.size(); ++i) {
    if (!(rep.stages[i].defect < rep.stages[i - 1].defect)) {
      rep.trend_ok = false;
      rep.note = "defect trend violated at stage " + std::to_string(i);
    }
  }

  // Rotation number of the conjugated cocycle, driven on the halved
  // frequency so the doubled circle is traversed correctly.
  const ConjugacyResult& last = rep.stages.back();
  auto at = detail::at_tilde_axis(lam, alpha.value_d(), dep.e_primal);
  const double ad = alpha.value_d();
  CocycleMap conj_map;
  conj_map.alpha = alpha.value / 2.0L;
  conj_map.homotopic_to_identity = true;
  auto w2 = last.w2_fn;
  conj_map.eval = [w2, at, ad](cplx z) -> Mat2 {
    const double x = 2.0 * z.real();
    const RMat2 w = w2(x);
    const RMat2 wa = w2(x + ad);
    const RMat2 a = real_part(at(x), 1e-9);
    const RMat2 aw = a * w;
    const double inv_det = 1.0 / wa.det();
    return {cplx((wa.m11 * aw.m00 - wa.m01 * aw.m10) * inv_det, 0),
            cplx((wa.m11 * aw.m01 - wa.m01 * aw.m11) * inv_det, 0),
            cplx((-wa.m10 * aw.m00 + wa.m00 * aw.m10) * inv_det, 0),
            cplx((-wa.m10 * aw.m01 + wa.m00 * aw.m11) * inv_det, 0)};
  };
  const double rho = rotation_number(conj_map, cfg.rot_iters, 2);
  // Projective measurement leaves a half-turn ambiguity against the target.
  const double rt = detail::frac01(last.rotation_turns);
  rep.rotation_gap = std::min(detail::circle_dist(rho, rt),
                              detail::circle_dist(rho, rt + 0.5));

  if (rep.l_value > std::exp(1.0) && last.w_sup > 1.0)
    rep.fitted_c_wl = std::log(last.w_sup) / std::log(rep.l_value);
  return rep;
}

// ---------------------------------------------------------------------------
// complete_to_sl2: extend a nonvanishing column to a unimodular matrix map.

struct Sl2Completion {
  std::vector<Mat2> m;  // on x_j = period * j / grid
  double min_norm = 0, max_norm = 0;
  double m_sup = 0;       // largest operator norm over the grid
  double det_dev = 0;     // largest |det - 1|
  double norm_bound = 0;  // max(max_norm, 1/min_norm)
};

inline Sl2Completion complete_to_sl2(const TrigVector& v, int grid,
                                     double period = 1.0,
                                     double delta1 = 1e-12) {
  if (grid < 1) throw std::invalid_argument("complete_to_sl2: grid >= 1");
  if (!(delta1 > 0))
    throw std::invalid_argument("complete_to_sl2: delta1 > 0");
  Sl2Completion out;
  out.min_norm = 1e300;
  out.m.reserve(static_cast<size_t>(grid));
  for (int j = 0; j < grid; ++j) {
    const double x = period * static_cast<double>(j) / grid;
    const auto [a, b] = v.eval(cplx(x, 0));
    const double n2 = std::norm(a) + std::norm(b);
    const double n = std::sqrt(n2);
    out.min_norm = std::min(out.min_norm, n);
    out.max_norm = std::max(out.max_norm, n);
    if (n < delta1)
      throw VectorVanishes("complete_to_sl2: column norm below delta1");
    const Mat2 m{a, -std::conj(b) / n2, b, std::conj(a) / n2};
    out.det_dev = std::max(out.det_dev, std::abs(m.det() - cplx(1, 0)));
    out.m_sup = std::max(out.m_sup, m.op_norm());
    out.m.push_back(m);
  }
  out.norm_bound = std::max(out.max_norm, 1.0 / out.min_norm);
  return out;
}

// ---------------------------------------------------------------------------
// Cohomological equations.

struct ScalarCohomology {
  TrigPoly psi;
  cplx average{0, 0};
  double residual = 0;  // sup_x |psi(x) - psi(x+alpha) + tau(x) - average|
};

// Solves -psi(x+alpha) + psi(x) + tau(x) = [tau] mode by mode:
// psi_k = tau_k / (e^{2 pi i k alpha} - 1) for 0 < |k| <= K, psi_0 = 0.
// The residual is measured against the full tau, so truncation tails show up
// honestly.
inline ScalarCohomology scalar_cohomology(const TrigPoly& tau, real alpha,
                                          int K, int grid = 2048) {
  detail::require_integer_freq(tau, "scalar_cohomology");
  if (K < 0) throw std::invalid_argument("scalar_cohomology: K >= 0");
  if (grid < 8) throw std::invalid_argument("scalar_cohomology: grid too small");
  ScalarCohomology out;
  out.average = detail::poly_mean(tau);

  const int lo = std::max(tau.k_min, -K), hi = std::min(tau.k_max(), K);
  TrigPoly psi;
  psi.k_min = std::min(lo, 0);
  psi.c.assign(static_cast<size_t>(std::max(hi, 0) - psi.k_min + 1),
               cplx(0, 0));
  for (int k = lo; k <= hi; ++k) {
    if (k == 0) continue;
    const cplx tk = tau.c[static_cast<size_t>(k - tau.k_min)];
    if (std::abs(tk) < 1e-300) continue;
    const double ph = phase_at(0.0L, alpha, k);
    const cplx div = std::exp(cplx(0, kTwoPi * ph)) - cplx(1, 0);
    if (std::abs(div) < 1e-14)
      throw SmallDivisor("scalar_cohomology: divisor below 1e-14 at k = " +
                         std::to_string(k));
    psi.c[static_cast<size_t>(k - psi.k_min)] = tk / div;
  }
  out.psi = psi;

  const double ad = static_cast<double>(alpha);
  for (int j = 0; j < grid; ++j) {
    const double x = static_cast<double>(j) / grid;
    const cplx r =
        psi(x) - psi(x + ad) + tau(x) - out.average;
    out.residual = std::max(out.residual, std::abs(r));
  }
  return out;
}

struct TrigMat2 {
  TrigPoly m00, m01, m10, m11;

  Mat2 eval(cplx z) const {
    return {m00.eval(z), m01.eval(z), m10.eval(z), m11.eval(z)};
  }
  Mat2 operator()(double x) const { return eval(cplx(x, 0)); }
};

struct MatrixCohomology {
  TrigMat2 y;
  Mat2 average;  // [M1]
  double residual = 0;
};

// Solves Y(x+alpha) M0 - M0 Y(x) = M1(x) - [M1] for M0 = [[1, a], [0, 1]].
// The unipotent structure forces the order: the (2,1) entry decouples, the
// diagonal follows, and (1,2) closes.  Every scalar solve reuses
// scalar_cohomology, so the divisors and truncation behave identically.
inline MatrixCohomology matrix_cohomology(double a, const TrigMat2& m1,
                                          real alpha, int K, int grid = 2048) {
  using detail::poly_add;
  using detail::poly_scale;
  using detail::poly_shift_arg;
  MatrixCohomology out;
  out.average = {detail::poly_mean(m1.m00), detail::poly_mean(m1.m01),
                 detail::poly_mean(m1.m10), detail::poly_mean(m1.m11)};

  // Right-hand sides with averages removed, as polynomials.
  auto centered = [](const TrigPoly& p) {
    TrigPoly r = p;
    if (r.k_min <= 0 && r.k_max() >= 0)
      r.c[static_cast<size_t>(-r.k_min)] = cplx(0, 0);
    return r;
  };
  const TrigPoly r11 = centered(m1.m00), r12 = centered(m1.m01),
                 r21 = centered(m1.m10), r22 = centered(m1.m11);

  // y21' - y21 = r21
  out.y.m10 = scalar_cohomology(r21, alpha, K, grid).psi;
  // y11' - y11 = r11 + a y21
  out.y.m00 =
      scalar_cohomology(poly_add(r11, poly_scale(out.y.m10, a)), alpha, K, grid)
          .psi;
  // y22' - y22 = r22 - a y21(x + alpha)
  out.y.m11 = scalar_cohomology(
                  poly_add(r22, poly_scale(poly_shift_arg(out.y.m10, alpha), -a)),
                  alpha, K, grid)
                  .psi;
  // y12' - y12 = r12 - a y11(x + alpha) + a y22
  out.y.m01 = scalar_cohomology(
                  poly_add(r12, poly_add(poly_scale(poly_shift_arg(out.y.m00, alpha), -a),
                                         poly_scale(out.y.m11, a))),
                  alpha, K, grid)
                  .psi;

  const double ad = static_cast<double>(alpha);
  const Mat2 m0{cplx(1, 0), cplx(a, 0), cplx(0, 0), cplx(1, 0)};
  for (int j = 0; j < grid; ++j) {
    const double x = static_cast<double>(j) / grid;
    const Mat2 lhs = out.y(x + ad) * m0 - m0 * out.y(x);
    const Mat2 rhs = m1(x) - out.average;
    out.residual = std::max(out.residual, (lhs - rhs).frob());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parabolic reduction (resonant phase, degenerate rotation).

struct ParabolicForm {
  int grid = 0;   // points per unit circle; the stored grid doubles it
  double kappa = 1;  // sign of the reduced diagonal
  double a = 0;      // constant (1,2) entry after the cohomology step
  std::vector<RMat2> m;                // M on x_j = 2 j / (2 grid)
  std::function<RMat2(double)> m_fn;   // recompute M at arbitrary phase
  // Weighted grid averages entering the trace certificate; the weight is the
  // energy-derivative factor of the cocycle (1/|c|(x - alpha) for the model,
  // caller-supplied in general).
  double m11_sq = 0, m11_m12 = 0, m12_sq = 0;
  double residual = 0;   // sup |M(x+a)^{-1} At(x) M(x) - [[kappa, a],[0, kappa]]|
  double det_gap = 0;    // case-B detector: max |det(U~, conj U~)| / |U~|^2
  double eta_dev = 0;    // componentwise eta disagreement where both defined
  double real_dev = 0;   // max |Im W| relative to max |W|
  double tau_period_dev = 0;  // deviation of tau from unit periodicity
  double psi_residual = 0;
  long n_j = 0;      // resonance with 2 theta = n_j alpha mod 1 (wrapper)
  double theta = 0;
};

// Core reduction: at_fn is the SL(2,R) cocycle on the axis, u_fn its complex
// invariant section (period 1), weight_fn the density for the certificate
// averages.  grid must be a power of two; the working grid doubles it so phi
// unwraps on the doubled circle.
inline ParabolicForm parabolic_core(
    const std::function<Mat2(double)>& at_fn,
    const std::function<std::pair<cplx, cplx>(double)>& u_fn, real alpha,
    const std::function<double(double)>& weight_fn, int grid = 512,
    int K = 200, double case_b_tol = 1e-2) {
  if (grid < 8 || (grid & (grid - 1)) != 0)
    throw std::invalid_argument("parabolic_core: grid must be a power of two");
  const int n2 = 2 * grid;
  const double ad = static_cast<double>(alpha);

  ParabolicForm pf;
  pf.grid = grid;

  // Samples of the section on the doubled circle.
  std::vector<cplx> u1(static_cast<size_t>(n2)), u2(static_cast<size_t>(n2));
  double det_gap = 0;
  for (int j = 0; j < n2; ++j) {
    const double x = 2.0 * static_cast<double>(j) / n2;
    const auto [a, b] = u_fn(x);
    u1[static_cast<size_t>(j)] = a;
    u2[static_cast<size_t>(j)] = b;
    const double nrm2 = std::norm(a) + std::norm(b);
    if (nrm2 < 1e-24)
      throw VectorVanishes("parabolic_core: section vanishes on the grid");
    det_gap = std::max(det_gap,
                       2.0 * std::abs(std::imag(a * std::conj(b))) / nrm2);
  }
  pf.det_gap = det_gap;
  if (det_gap > case_b_tol)
    throw NotCaseB("parabolic_core: det(U, conj U) not negligible");

  // eta = u_i / conj(u_i) from the dominant component, cross-checked.
  std::vector<cplx> eta(static_cast<size_t>(n2));
  double eta_dev = 0;
  for (int j = 0; j < n2; ++j) {
    const cplx a = u1[static_cast<size_t>(j)], b = u2[static_cast<size_t>(j)];
    const double na = std::abs(a), nb = std::abs(b);
    const cplx ea = na > 0 ? a / std::conj(a) : cplx(0, 0);
    const cplx eb = nb > 0 ? b / std::conj(b) : cplx(0, 0);
    eta[static_cast<size_t>(j)] = na >= nb ? ea : eb;
    const double floor = 0.2 * std::max(na, nb);
    if (na > floor && nb > floor)
      eta_dev = std::max(eta_dev, std::abs(ea - eb));
  }
  pf.eta_dev = eta_dev;

  // Continuous square root on the doubled circle.  The lift must close up to
  // a multiple of 4 pi; odd windings have no continuous root.
  std::vector<double> lift(static_cast<size_t>(n2 + 1));
  lift[0] = std::arg(eta[0]);
  for (int j = 0; j < n2; ++j) {
    const cplx ratio = eta[static_cast<size_t>((j + 1) % n2)] *
                       std::conj(eta[static_cast<size_t>(j)]);
    const double step = std::arg(ratio);
    if (std::abs(step) > kPi / 2)
      throw SquareRootBranch("parabolic_core: phase step too large for the grid");
    lift[static_cast<size_t>(j + 1)] = lift[static_cast<size_t>(j)] + step;
  }
  const double winding = (lift[static_cast<size_t>(n2)] - lift[0]) / kTwoPi;
  const double wr = std::round(winding);
  if (std::abs(winding - wr) > 0.1)
    throw SquareRootBranch("parabolic_core: eta winding not an integer");
  if (std::lround(wr) % 2 != 0)
    throw SquareRootBranch("parabolic_core: odd eta winding on the doubled circle");

  std::vector<cplx> phi(static_cast<size_t>(n2));
  for (int j = 0; j < n2; ++j)
    phi[static_cast<size_t>(j)] =
        std::exp(cplx(0, lift[static_cast<size_t>(j)] / 2.0));
  // Branch: phi(0) in the closed upper half plane, positive real on the line.
  if (phi[0].imag() < -1e-12 ||
      (std::abs(phi[0].imag()) <= 1e-12 && phi[0].real() < 0)) {
    for (auto& p : phi) p = -p;
  }

  // W = conj(phi) U, real on the doubled circle.
  std::vector<cplx> w1s(static_cast<size_t>(n2)), w2s(static_cast<size_t>(n2));
  double wmax = 0, imax = 0;
  for (int j = 0; j < n2; ++j) {
    const cplx f = std::conj(phi[static_cast<size_t>(j)]);
    w1s[static_cast<size_t>(j)] = f * u1[static_cast<size_t>(j)];
    w2s[static_cast<size_t>(j)] = f * u2[static_cast<size_t>(j)];
    wmax = std::max({wmax, std::abs(w1s[static_cast<size_t>(j)]),
                     std::abs(w2s[static_cast<size_t>(j)])});
    imax = std::max({imax, std::abs(w1s[static_cast<size_t>(j)].imag()),
                     std::abs(w2s[static_cast<size_t>(j)].imag())});
  }
  pf.real_dev = wmax > 0 ? imax / wmax : 0.0;

  // Interpolants in the halved variable y = x/2 restore W at arbitrary phase.
  const TrigPoly w1p = trig_interp(w1s).trimmed(1e-13);
  const TrigPoly w2p = trig_interp(w2s).trimmed(1e-13);
  auto w_at = [w1p, w2p](double x) -> std::pair<double, double> {
    const double y = x / 2.0;
    return {w1p(y).real(), w2p(y).real()};
  };
  auto mt_at = [w_at](double x) -> RMat2 {
    const auto [a, b] = w_at(x);
    const double nn = a * a + b * b;
    if (nn < 1e-24) throw VectorVanishes("parabolic_core: W vanishes");
    return {a, -b / nn, b, a / nn};
  };

  // Conjugated form [[kappa, tau(x)], [0, kappa]] and its upper entry.
  std::vector<cplx> tau_full(static_cast<size_t>(n2));
  double diag_sum = 0;
  for (int j = 0; j < n2; ++j) {
    const double x = 2.0 * static_cast<double>(j) / n2;
    const RMat2 mt = mt_at(x);
    const RMat2 mta = mt_at(x + ad);
    const RMat2 a = real_part(at_fn(x), 1e-8);
    const RMat2 am = a * mt;
    const double inv_det = 1.0 / mta.det();
    const double c00 = (mta.m11 * am.m00 - mta.m01 * am.m10) * inv_det;
    const double c01 = (mta.m11 * am.m01 - mta.m01 * am.m11) * inv_det;
    const double c11 = (-mta.m10 * am.m01 + mta.m00 * am.m11) * inv_det;
    diag_sum += c00 + c11;
    tau_full[static_cast<size_t>(j)] = cplx(c01, 0);
  }
  pf.kappa = diag_sum >= 0 ? 1.0 : -1.0;

  // tau is a unit-periodic function of x; fold the doubled grid.
  double period_dev = 0;
  std::vector<cplx> tau_half(static_cast<size_t>(grid));
  for (int j = 0; j < grid; ++j) {
    const cplx t0 = tau_full[static_cast<size_t>(j)];
    const cplx t1 = tau_full[static_cast<size_t>(j + grid)];
    period_dev = std::max(period_dev, std::abs(t0 - t1));
    tau_half[static_cast<size_t>(j)] = (t0 + t1) / 2.0;
  }
  pf.tau_period_dev = period_dev;
  const TrigPoly tau_poly =
      detail::poly_truncate(trig_interp(tau_half).trimmed(1e-13), K);

  const ScalarCohomology sc =
      scalar_cohomology(detail::poly_scale(tau_poly, pf.kappa), alpha, K, 2048);
  pf.psi_residual = sc.residual;
  pf.a = detail::poly_mean(tau_poly).real();
  const TrigPoly psi = sc.psi;

  auto m_at = [mt_at, psi](double x) -> RMat2 {
    const RMat2 mt = mt_at(x);
    const double p = psi(x).real();
    return {mt.m00, mt.m00 * p + mt.m01, mt.m10, mt.m10 * p + mt.m11};
  };
  pf.m_fn = m_at;

  const RMat2 target{pf.kappa, pf.a, 0, pf.kappa};
  pf.m.reserve(static_cast<size_t>(n2));
  double m11_sq = 0, m11_m12 = 0, m12_sq = 0;
  for (int j = 0; j < n2; ++j) {
    const double x = 2.0 * static_cast<double>(j) / n2;
    const RMat2 m = m_at(x);
    pf.m.push_back(m);
    const RMat2 ma = m_at(x + ad);
    const RMat2 a = real_part(at_fn(x), 1e-8);
    const RMat2 am = a * m;
    const double inv_det = 1.0 / ma.det();
    const RMat2 conj = {(ma.m11 * am.m00 - ma.m01 * am.m10) * inv_det,
                        (ma.m11 * am.m01 - ma.m01 * am.m11) * inv_det,
                        (-ma.m10 * am.m00 + ma.m00 * am.m10) * inv_det,
                        (-ma.m10 * am.m01 + ma.m00 * am.m11) * inv_det};
    const double dev = std::sqrt((conj.m00 - target.m00) * (conj.m00 - target.m00) +
                                 (conj.m01 - target.m01) * (conj.m01 - target.m01) +
                                 (conj.m10 - target.m10) * (conj.m10 - target.m10) +
                                 (conj.m11 - target.m11) * (conj.m11 - target.m11));
    pf.residual = std::max(pf.residual, dev);
    const double w = weight_fn(x);
    m11_sq += m.m00 * m.m00 * w;
    m11_m12 += m.m00 * m.m01 * w;
    m12_sq += m.m01 * m.m01 * w;
  }
  pf.m11_sq = m11_sq / n2;
  pf.m11_m12 = m11_m12 / n2;
  pf.m12_sq = m12_sq / n2;
  return pf;
}

// Model wrapper: u is an exponentially decaying dual eigenvector on a
// symmetric window with u_0 = 1, at a phase with 2 theta in alpha Z + Z.
inline ParabolicForm parabolic_reduce(const CouplingTriple& lam,
                                      const Irrational& alpha, real theta,
                                      const SeqWindow& u, double e_primal,
                                      int grid = 512, int K = 200,
                                      double case_b_tol = 1e-2,
                                      long k_search = 100,
                                      double interior_tol = 1e-10) {
  if (classify_region(lam) != Region::II)
    throw WrongRegion("parabolic_reduce: couplings must lie in region II");
  const BuildUResult bu =
      build_U(u, theta, lam, alpha, e_primal, interior_tol);
  QConj q = q_conjugation(lam, alpha);
  q.f = q.f.trimmed();
  q.g1 = q.g1.trimmed();
  q.g2 = q.g2.trimmed();

  const TrigVector uv = bu.u_vec;
  auto u_fn = [q, uv](double x) -> std::pair<cplx, cplx> {
    const auto p = uv.eval(cplx(x, 0));
    const Mat2 Q = q.Q(cplx(x, 0));
    return {Q.m00 * p.first + Q.m01 * p.second,
            Q.m10 * p.first + Q.m11 * p.second};
  };
  const double ad = alpha.value_d();
  auto at_fn = detail::at_tilde_axis(lam, ad, e_primal);
  const TrigPoly cp = c_poly(lam, ad);
  auto weight_fn = [cp, ad](double x) {
    return 1.0 / std::abs(cp(x - ad));
  };

  ParabolicForm pf =
      parabolic_core(at_fn, u_fn, alpha.value, weight_fn, grid, K, case_b_tol);
  pf.theta = static_cast<double>(theta);
  long best_k = 0;
  real best = torus_norm(2.0L * theta);
  for (long k = -k_search; k <= k_search; ++k) {
    const real d = torus_norm(2.0L * theta - static_cast<real>(k) * alpha.value);
    if (d < best) {
      best = d;
      best_k = k;
    }
  }
  pf.n_j = best_k;
  return pf;
}

// ---------------------------------------------------------------------------
// Gap-opening trace certificate.

struct TraceProbe {
  double eps = 0;
  double trace_measured = 0;   // kappa-folded trace of the averaged cocycle
  double trace_predicted = 0;  // 2 - kappa a eps [M11^2 w]
  double residual = 0;         // |measured - predicted|
  double residual_centered = 0;  // measured linear part removed; this is the
                                 // certified quadratic remainder
};

struct GapCertificate {
  std::vector<TraceProbe> probes;
  double baseline = 0;      // measured trace at eps = 0
  double slope_measured = 0;   // kappa tr [M1], the measured linear response
  double slope_structural = 0; // -kappa a [M11^2 w], the rank-one prediction
  double fit_exponent = 0;  // slope of ln residual_centered against ln |eps|
  int predicted_side = 0;   // sign of eps predicted to push the trace past 2
  Mat2 m1_average;          // measured [M1]
  double m1_structure_dev = 0;  // deviation from the unipotent-derived form
};

// at_eps(x, eps) is the perturbed cocycle; its eps-derivative is taken by
// central differences.  One linear conjugation step Z = I + eps Y with Y
// from matrix_cohomology removes the oscillating first order; what remains
// beyond the constant part is the certified O(eps^2) defect.
inline GapCertificate gap_opening_certificate(
    const ParabolicForm& pf,
    const std::function<Mat2(double, double)>& at_eps,
    const std::vector<double>& epsilons, real alpha, int K = 200) {
  if (pf.m11_sq < 1e-10)
    throw DegenerateAverage("gap_opening_certificate: [M11^2] below 1e-10");
  if (!pf.m_fn)
    throw std::invalid_argument("gap_opening_certificate: parabolic form lacks m_fn");
  const int grid = pf.grid;
  const int n2 = 2 * grid;
  const double ad = static_cast<double>(alpha);
  const double h = 1e-3;

  GapCertificate out;
  const double ka = pf.kappa * pf.a;
  out.predicted_side = ka > 0 ? -1 : (ka < 0 ? 1 : 0);
  out.slope_structural = -ka * pf.m11_sq;

  // M1 on the unit circle (the PSL sign cancels between the two frames).
  std::vector<Mat2> m1(static_cast<size_t>(grid));
  auto minv_times = [](const RMat2& m, const Mat2& v) -> Mat2 {
    const double inv_det = 1.0 / m.det();
    return {(m.m11 * v.m00 - m.m01 * v.m10) * inv_det,
            (m.m11 * v.m01 - m.m01 * v.m11) * inv_det,
            (-m.m10 * v.m00 + m.m00 * v.m10) * inv_det,
            (-m.m10 * v.m01 + m.m00 * v.m11) * inv_det};
  };
  auto times_m = [](const Mat2& v, const RMat2& m) -> Mat2 {
    return {v.m00 * m.m00 + v.m01 * m.m10, v.m00 * m.m01 + v.m01 * m.m11,
            v.m10 * m.m00 + v.m11 * m.m10, v.m10 * m.m01 + v.m11 * m.m11};
  };
  Mat2 m1_avg;
  for (int j = 0; j < grid; ++j) {
    const double x = static_cast<double>(j) / grid;
    const Mat2 d = (at_eps(x, h) - at_eps(x, -h)) * cplx(1.0 / (2 * h), 0);
    const Mat2 v = minv_times(pf.m_fn(x + ad), times_m(d, pf.m_fn(x)));
    m1[static_cast<size_t>(j)] = v;
    m1_avg = m1_avg + v * cplx(1.0 / grid, 0);
  }
  out.m1_average = m1_avg;
  {
    // kappa w [[M11 M12 - kappa a M11^2, M12^2 - kappa a M11 M12],
    //          [-M11^2, -M11 M12]], averaged.
    const Mat2 structural{
        cplx(pf.kappa * pf.m11_m12 - pf.a * pf.m11_sq, 0),
        cplx(pf.kappa * pf.m12_sq - pf.a * pf.m11_m12, 0),
        cplx(-pf.kappa * pf.m11_sq, 0), cplx(-pf.kappa * pf.m11_m12, 0)};
    out.m1_structure_dev = (m1_avg - structural).frob();
  }

  // Y from the cohomological equation at the unipotent core.
  TrigMat2 m1_polys;
  {
    std::vector<cplx> s00(static_cast<size_t>(grid)), s01(static_cast<size_t>(grid)),
        s10(static_cast<size_t>(grid)), s11(static_cast<size_t>(grid));
    for (int j = 0; j < grid; ++j) {
      s00[static_cast<size_t>(j)] = m1[static_cast<size_t>(j)].m00 * pf.kappa;
      s01[static_cast<size_t>(j)] = m1[static_cast<size_t>(j)].m01 * pf.kappa;
      s10[static_cast<size_t>(j)] = m1[static_cast<size_t>(j)].m10 * pf.kappa;
      s11[static_cast<size_t>(j)] = m1[static_cast<size_t>(j)].m11 * pf.kappa;
    }
    m1_polys.m00 = detail::poly_truncate(trig_interp(s00).trimmed(1e-13), K);
    m1_polys.m01 = detail::poly_truncate(trig_interp(s01).trimmed(1e-13), K);
    m1_polys.m10 = detail::poly_truncate(trig_interp(s10).trimmed(1e-13), K);
    m1_polys.m11 = detail::poly_truncate(trig_interp(s11).trimmed(1e-13), K);
  }
  const MatrixCohomology mc =
      matrix_cohomology(pf.kappa * pf.a, m1_polys, alpha, K, 1024);

  auto z_at = [&mc](double x, double eps) -> Mat2 {
    const Mat2 y = mc.y(x);
    return {cplx(1, 0) + eps * y.m00, eps * y.m01, eps * y.m10,
            cplx(1, 0) + eps * y.m11};
  };

  auto trace_at = [&](double eps) -> double {
    cplx tr(0, 0);
    for (int j = 0; j < n2; ++j) {
      const double x = 2.0 * static_cast<double>(j) / n2;
      const Mat2 inner =
          minv_times(pf.m_fn(x + ad), times_m(at_eps(x, eps), pf.m_fn(x)));
      const Mat2 full = z_at(x + ad, eps).inverse() * inner * z_at(x, eps);
      tr += full.trace() * cplx(1.0 / n2, 0);
    }
    return pf.kappa * tr.real();
  };

  out.baseline = trace_at(0.0);
  out.slope_measured = pf.kappa * m1_avg.trace().real();
  std::vector<double> lx, ly;
  for (double eps : epsilons) {
    TraceProbe p;
    p.eps = eps;
    p.trace_measured = trace_at(eps);
    p.trace_predicted = 2.0 + out.slope_structural * eps;
    p.residual = std::abs(p.trace_measured - p.trace_predicted);
    p.residual_centered = std::abs(p.trace_measured - out.baseline -
                                   out.slope_measured * eps);
    out.probes.push_back(p);
    if (eps != 0.0) {
      lx.push_back(std::log(std::abs(eps)));
      ly.push_back(std::log(std::max(p.residual_centered, 1e-16)));
    }
  }
  if (lx.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double n = static_cast<double>(lx.size());
    out.fit_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return out;
}

// Model overload: perturbs the energy of the SL(2,R) transfer cocycle.
inline GapCertificate gap_opening_certificate(const ParabolicForm& pf,
                                              const CouplingTriple& lam,
                                              const Irrational& alpha,
                                              double e_center,
                                              const std::vector<double>& epsilons,
                                              int K = 200) {
  const double ad = alpha.value_d();
  const TrigPoly cp = c_poly(lam, ad);
  auto at_eps = [cp, ad, e_center](double x, double eps) -> Mat2 {
    const double cx = std::abs(cp(x));
    const double cxa = std::abs(cp(x - ad));
    const double r = std::sqrt(cx * cxa);
    const double v = 2.0 * std::cos(kTwoPi * x);
    return {cplx((e_center + eps - v) / r, 0), cplx(-cxa / r, 0),
            cplx(cx / r, 0), cplx(0, 0)};
  };
  return gap_opening_certificate(pf, at_eps, epsilons, alpha.value, K);
}

// ---------------------------------------------------------------------------
// theta/rho consistency.

struct ThetaRhoReport {
  double theta = 0;
  double rho = 0;
  double e_primal = 0;
  double eigen_residual = 0;
  GapLabel label_2theta;  // best (k, m) for 2 theta
  GapLabel label_2rho;    // best (k, m) for 2 rho
  bool consistent = false;  // labeled flags agree at the shared tolerance
  ResonanceList res_theta, res_rho;
  bool resonance_sets_match = false;  // same |n| sets beyond the zero entry
};

// The phase is an input (the energy-to-phase map is realized by the finite
// section); the fibered rotation number comes from the SL(2,R) cocycle at
// the selected eigenvalue.
inline ThetaRhoReport theta_rho_consistency(const CouplingTriple& lam,
                                            const Irrational& alpha, real theta,
                                            double e_target, int k_max = 40,
                                            double tol = 1e-3,
                                            int section = 601,
                                            int rot_iters = 30000,
                                            double eps0 = 0.5,
                                            double max_distance = 0.5) {
  ThetaRhoReport rep;
  rep.theta = static_cast<double>(theta);
  const DualEigenpair dep = dual_eigenpair(lam, alpha.value, theta, e_target,
                                           section, max_distance);
  rep.e_primal = dep.e_primal;
  rep.eigen_residual = dep.residual;

  const CocycleMap at =
      transfer(lam, alpha, dep.e_primal, TransferVariant::ATilde);
  rep.rho = rotation_number(at, rot_iters, 3);

  rep.label_2theta =
      gap_label(detail::frac01(2.0L * theta), alpha, k_max, tol);
  rep.label_2rho = gap_label(detail::frac01(2.0L * static_cast<real>(rep.rho)),
                             alpha, k_max, tol);
  rep.consistent = rep.label_2theta.labeled == rep.label_2rho.labeled;

  rep.res_theta = resonances(theta, alpha, eps0, k_max);
  rep.res_rho =
      resonances(static_cast<real>(rep.rho), alpha, eps0, k_max);
  auto abs_set = [](const ResonanceList& r) {
    std::vector<long> v;
    for (const auto& e : r.entries)
      if (e.n != 0) v.push_back(std::labs(e.n));
    std::sort(v.begin(), v.end());
    return v;
  };
  rep.resonance_sets_match = abs_set(rep.res_theta) == abs_set(rep.res_rho);
  return rep;
}

}  // namespace ehm
