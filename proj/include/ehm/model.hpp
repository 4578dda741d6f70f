#pragma once

// Coupling triples, region classification, duality, symbol functions,
// finite sections, determinant recurrence, Sturm counting, eigensolving.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ehm/errors.hpp"
#include "ehm/fourier.hpp"
#include "ehm/numth.hpp"

namespace ehm {

struct CouplingTriple {
  double l1 = 0, l2 = 1, l3 = 0;

  void validate() const {
    if (!(l1 >= 0 && l3 >= 0 && l2 > 0))
      throw domain_error("coupling triple needs l1,l3 >= 0 and l2 > 0");
  }
};

enum class Region { I, II, III, Boundary };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::I: return "I";
    case Region::II: return "II";
    case Region::III: return "III";
    default: return "boundary";
  }
}

inline Region classify_region(const CouplingTriple& lam) {
  lam.validate();
  const double s = lam.l1 + lam.l3;
  if (std::max(s, lam.l2) < 1.0) return Region::I;
  if (std::max(s, 1.0) < lam.l2) return Region::II;
  if (std::max(1.0, lam.l2) < s) return Region::III;
  return Region::Boundary;
}

inline CouplingTriple dual(const CouplingTriple& lam) {
  lam.validate();
  return {lam.l3 / lam.l2, 1.0 / lam.l2, lam.l1 / lam.l2};
}

// Largest coupling asymmetry rate: ln of the outer root ratio of
// l3 w^2 + l2 w + l1.  Both closed forms below share the numerator
// l2 + sqrt(l2^2 - 4 l1 l3).
inline double epsilon1(const CouplingTriple& lam) {
  if (classify_region(lam) != Region::II)
    throw WrongRegion("epsilon1 defined for region II triples");
  const double d = lam.l1 * lam.l3;
  const double num = lam.l2 + std::sqrt(lam.l2 * lam.l2 - 4.0 * d);
  const double m = std::max(lam.l1 + lam.l3, 1.0);
  const double den = m + std::sqrt(m * m - 4.0 * d);
  return std::log(num / den);
}

inline double epsilon2(const CouplingTriple& lam) {
  if (classify_region(lam) != Region::II)
    throw WrongRegion("epsilon2 defined for region II triples");
  const double s = lam.l1 + lam.l3;
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  const double d = lam.l1 * lam.l3;
  const double num = lam.l2 + std::sqrt(lam.l2 * lam.l2 - 4.0 * d);
  const double den = s + std::sqrt(s * s - 4.0 * d);
  return std::log(num / den);
}

// theta + n*alpha reduced mod 1 in extended precision; keeps resonant
// constructions (offsets ~1e-9) meaningful out to |n| in the thousands.
inline double phase_at(real theta, real alpha, long n) {
  return static_cast<double>(fracl(theta + static_cast<real>(n) * alpha));
}

inline double potential_at(real theta, real alpha, long n) {
  return 2.0 * std::cos(kTwoPi * phase_at(theta, alpha, n));
}

struct SymbolEval {
  cplx c, c_tilde, abs_c;
};

// Symbol as a trig polynomial: c(z) = l1 e^{-2 pi i(z+a/2)} + l2 + l3 e^{2 pi i(z+a/2)}.
inline TrigPoly c_poly(const CouplingTriple& lam, double alpha) {
  TrigPoly p;
  p.k_min = -1;
  const cplx ph = std::exp(cplx(0, kPi * alpha));
  p.c = {lam.l1 * std::conj(ph), cplx(lam.l2, 0), lam.l3 * ph};
  return p;
}

inline TrigPoly c_tilde_poly(const CouplingTriple& lam, double alpha) {
  return c_poly(lam, alpha).bar();
}

// c, c_tilde, and the analytic square root of their product at z = x + i eps.
// The branch is continued along the vertical segment from the real axis,
// anchored at the positive square root of c*c_tilde >= 0 on the axis.
inline SymbolEval eval_symbols(const CouplingTriple& lam, double alpha, cplx z,
                               int path_steps = 64) {
  lam.validate();
  const TrigPoly cp = c_poly(lam, alpha);
  const TrigPoly ctp = c_tilde_poly(lam, alpha);
  SymbolEval out;
  out.c = cp.eval(z);
  out.c_tilde = ctp.eval(z);
  const cplx prod = out.c * out.c_tilde;
  if (std::abs(prod) < 1e-24)
    throw SingularSymbol("c*c_tilde vanishes at the requested phase");
  if (z.imag() == 0.0) {
    out.abs_c = std::abs(out.c);
    return out;
  }
  cplx prev = std::sqrt(cp.eval(cplx(z.real(), 0)) * ctp.eval(cplx(z.real(), 0)));
  if (prev.real() < 0.0) prev = -prev;
  for (int s = 1; s <= path_steps; ++s) {
    cplx zs(z.real(), z.imag() * static_cast<double>(s) / path_steps);
    cplx ps = cp.eval(zs) * ctp.eval(zs);
    if (std::abs(ps) < 1e-24)
      throw SingularSymbol("c*c_tilde vanishes along the continuation path");
    cplx r = std::sqrt(ps);
    if (std::abs(r - prev) > std::abs(-r - prev)) r = -r;
    prev = r;
  }
  out.abs_c = prev;
  return out;
}

// Finitely supported sequence: value v[i] sits at site n0 + i.
struct SeqWindow {
  long n0 = 0;
  std::vector<cplx> v;

  long n_end() const { return n0 + static_cast<long>(v.size()); }
  cplx at(long n) const {
    return (n >= n0 && n < n_end()) ? v[static_cast<size_t>(n - n0)] : cplx(0, 0);
  }
};

// (H u)_n = c(theta+n a) u_{n+1} + c_tilde(theta+(n-1) a) u_{n-1} + 2cos2pi(theta+n a) u_n,
// returned on the support window widened by one site each side.
inline SeqWindow apply_h(const CouplingTriple& lam, real alpha, real theta,
                         const SeqWindow& u) {
  const TrigPoly cp = c_poly(lam, static_cast<double>(alpha));
  const TrigPoly ctp = c_tilde_poly(lam, static_cast<double>(alpha));
  SeqWindow out;
  out.n0 = u.n0 - 1;
  out.v.assign(u.v.size() + 2, cplx(0, 0));
  for (long n = out.n0; n < out.n_end(); ++n) {
    double xn = phase_at(theta, alpha, n);
    double xm = phase_at(theta, alpha, n - 1);
    cplx acc = cp(xn) * u.at(n + 1) + ctp(xm) * u.at(n - 1) +
               2.0 * std::cos(kTwoPi * xn) * u.at(n);
    out.v[static_cast<size_t>(n - out.n0)] = acc;
  }
  return out;
}

// P_0..P_k of det(E - H_[0,n-1]) via the three-term recurrence.
inline std::vector<double> det_P(const CouplingTriple& lam, real alpha, real theta,
                                 double E, int k) {
  if (k < 0) throw domain_error("det_P: k must be >= 0");
  const TrigPoly cp = c_poly(lam, static_cast<double>(alpha));
  std::vector<double> P(static_cast<size_t>(k) + 1);
  P[0] = 1.0;
  if (k == 0) return P;
  P[1] = E - potential_at(theta, alpha, 0);
  for (int n = 2; n <= k; ++n) {
    double x_prev = phase_at(theta, alpha, n - 2);
    double cc = std::norm(cp(x_prev));
    P[static_cast<size_t>(n)] = (E - potential_at(theta, alpha, n - 1)) *
                                    P[static_cast<size_t>(n) - 1] -
                                cc * P[static_cast<size_t>(n) - 2];
  }
  return P;
}

// Tridiagonal section H_[offset, offset+size-1] at base phase theta.
struct FiniteSection {
  real theta = 0;
  real alpha = 0;
  long offset = 0;
  int size = 0;
  std::vector<double> diag;       // 2cos2pi(theta + n a)
  std::vector<cplx> off;          // c(theta + n a), couples n and n+1
  std::vector<double> off_abs2;   // |off|^2

  double gersh_lo() const {
    double lo = 1e300;
    for (int i = 0; i < size; ++i) {
      double r = (i > 0 ? std::sqrt(off_abs2[static_cast<size_t>(i) - 1]) : 0.0) +
                 (i + 1 < size ? std::sqrt(off_abs2[static_cast<size_t>(i)]) : 0.0);
      lo = std::min(lo, diag[static_cast<size_t>(i)] - r);
    }
    return lo;
  }
  double gersh_hi() const {
    double hi = -1e300;
    for (int i = 0; i < size; ++i) {
      double r = (i > 0 ? std::sqrt(off_abs2[static_cast<size_t>(i) - 1]) : 0.0) +
                 (i + 1 < size ? std::sqrt(off_abs2[static_cast<size_t>(i)]) : 0.0);
      hi = std::max(hi, diag[static_cast<size_t>(i)] + r);
    }
    return hi;
  }
};

inline FiniteSection build_section(const CouplingTriple& lam, real alpha, real theta,
                                   int size, long offset = 0) {
  if (size < 1) throw domain_error("build_section: size must be >= 1");
  const TrigPoly cp = c_poly(lam, static_cast<double>(alpha));
  FiniteSection s;
  s.theta = theta;
  s.alpha = alpha;
  s.offset = offset;
  s.size = size;
  s.diag.resize(static_cast<size_t>(size));
  s.off.resize(static_cast<size_t>(size) - 1);
  s.off_abs2.resize(static_cast<size_t>(size) - 1);
  for (int i = 0; i < size; ++i) {
    long n = offset + i;
    s.diag[static_cast<size_t>(i)] = potential_at(theta, alpha, n);
    if (i + 1 < size) {
      cplx cv = cp(phase_at(theta, alpha, n));
      s.off[static_cast<size_t>(i)] = cv;
      s.off_abs2[static_cast<size_t>(i)] = std::norm(cv);
    }
  }
  return s;
}

// Number of eigenvalues strictly below E: sign agreements between
// consecutive members of the P-sequence, with exact zeros nudged positive
// and magnitude rescaling to dodge overflow.
inline int sturm_count_below(const FiniteSection& s, double E) {
  double p_prev = 1.0;
  double p_cur = E - s.diag[0];
  if (p_cur == 0.0) p_cur = 1e-300;
  int count = (p_cur > 0.0) == (p_prev > 0.0) ? 1 : 0;
  for (int n = 2; n <= s.size; ++n) {
    double p_next = (E - s.diag[static_cast<size_t>(n) - 1]) * p_cur -
                    s.off_abs2[static_cast<size_t>(n) - 2] * p_prev;
    if (p_next == 0.0) p_next = 1e-300;
    if ((p_next > 0.0) == (p_cur > 0.0)) ++count;
    p_prev = p_cur;
    p_cur = p_next;
    double m = std::abs(p_cur);
    if (m > 1e150) {
      p_cur *= 1e-150;
      p_prev *= 1e-150;
    } else if (m < 1e-150 && m > 0.0) {
      p_cur *= 1e150;
      p_prev *= 1e150;
    }
  }
  return count;
}

// j-th smallest eigenvalue (0-based) by bisection on the Sturm count.
inline double section_eigenvalue_bisect(const FiniteSection& s, int j,
                                        double tol = 1e-12) {
  if (j < 0 || j >= s.size) throw domain_error("eigenvalue index out of range");
  double lo = s.gersh_lo() - 1e-9, hi = s.gersh_hi() + 1e-9;
  int iter = 0;
  while (hi - lo > tol) {
    if (++iter > 200) throw ConvergenceFailure("eigenvalue bisection stalled");
    double mid = 0.5 * (lo + hi);
    if (sturm_count_below(s, mid) >= j + 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::vector<double> section_all_values(const FiniteSection& s,
                                              double tol = 1e-12) {
  std::vector<double> vals(static_cast<size_t>(s.size));
  for (int j = 0; j < s.size; ++j)
    vals[static_cast<size_t>(j)] = section_eigenvalue_bisect(s, j, tol);
  return vals;
}

// QL with implicit shifts on a real symmetric tridiagonal; fast path for
// full spectra of large sections (the bisection route stays the reference).
inline std::vector<double> tridiag_eigenvalues_ql(std::vector<double> d,
                                                  std::vector<double> e) {
  const int n = static_cast<int>(d.size());
  if (static_cast<int>(e.size()) != n - 1 && n > 0 &&
      static_cast<int>(e.size()) != n)
    throw domain_error("tqli: off-diagonal length mismatch");
  e.resize(static_cast<size_t>(n), 0.0);
  int total_iter = 0;
  for (int l = 0; l < n; ++l) {
    for (;;) {
      int m = l;
      for (; m < n - 1; ++m) {
        double dd = std::abs(d[static_cast<size_t>(m)]) +
                    std::abs(d[static_cast<size_t>(m) + 1]);
        if (std::abs(e[static_cast<size_t>(m)]) <= 1e-16 * dd) break;
      }
      if (m == l) break;
      if (++total_iter > 60 * n) throw ConvergenceFailure("tqli iteration cap");
      double g = (d[static_cast<size_t>(l) + 1] - d[static_cast<size_t>(l)]) /
                 (2.0 * e[static_cast<size_t>(l)]);
      double r = std::hypot(g, 1.0);
      g = d[static_cast<size_t>(m)] - d[static_cast<size_t>(l)] +
          e[static_cast<size_t>(l)] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (int i = m - 1; i >= l; --i) {
        double f = s * e[static_cast<size_t>(i)];
        double b = c * e[static_cast<size_t>(i)];
        r = std::hypot(f, g);
        e[static_cast<size_t>(i) + 1] = r;
        if (r == 0.0) {
          d[static_cast<size_t>(i) + 1] -= p;
          e[static_cast<size_t>(m)] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[static_cast<size_t>(i) + 1] - p;
        r = (d[static_cast<size_t>(i)] - g) * s + 2.0 * c * b;
        p = s * r;
        d[static_cast<size_t>(i) + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[static_cast<size_t>(l)] -= p;
      e[static_cast<size_t>(l)] = g;
      e[static_cast<size_t>(m)] = 0.0;
    }
  }
  d.resize(static_cast<size_t>(n));
  std::sort(d.begin(), d.end());
  return d;
}

inline std::vector<double> section_all_values_fast(const FiniteSection& s) {
  std::vector<double> e(static_cast<size_t>(std::max(s.size - 1, 0)));
  for (size_t i = 0; i < e.size(); ++i) e[i] = std::sqrt(s.off_abs2[i]);
  return tridiag_eigenvalues_ql(s.diag, e);
}

struct EigenPair {
  double value = 0;
  std::vector<cplx> vec;  // normalized
  double residual = 0;    // ||H v - value v||_2
};

// Complex tridiagonal solve (H - shift) x = b, Thomas with partial pivoting.
inline std::vector<cplx> tridiag_solve_shifted(const FiniteSection& s, double shift,
                                               std::vector<cplx> b) {
  const int n = s.size;
  std::vector<cplx> dl(static_cast<size_t>(n), 0), dm(static_cast<size_t>(n), 0),
      du(static_cast<size_t>(n), 0), du2(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    dm[static_cast<size_t>(i)] = cplx(s.diag[static_cast<size_t>(i)] - shift, 0);
    if (i + 1 < n) {
      du[static_cast<size_t>(i)] = s.off[static_cast<size_t>(i)];
      dl[static_cast<size_t>(i) + 1] = std::conj(s.off[static_cast<size_t>(i)]);
    }
  }
  // Forward elimination with row swaps.
  for (int i = 0; i < n - 1; ++i) {
    if (std::abs(dl[static_cast<size_t>(i) + 1]) > std::abs(dm[static_cast<size_t>(i)])) {
      std::swap(dm[static_cast<size_t>(i)], dl[static_cast<size_t>(i) + 1]);
      std::swap(du[static_cast<size_t>(i)], dm[static_cast<size_t>(i) + 1]);
      std::swap(du2[static_cast<size_t>(i)], du[static_cast<size_t>(i) + 1]);
      std::swap(b[static_cast<size_t>(i)], b[static_cast<size_t>(i) + 1]);
    }
    if (std::abs(dm[static_cast<size_t>(i)]) < 1e-300)
      dm[static_cast<size_t>(i)] = cplx(1e-300, 0);
    cplx f = dl[static_cast<size_t>(i) + 1] / dm[static_cast<size_t>(i)];
    dm[static_cast<size_t>(i) + 1] -= f * du[static_cast<size_t>(i)];
    du[static_cast<size_t>(i) + 1] -= f * du2[static_cast<size_t>(i)];
    b[static_cast<size_t>(i) + 1] -= f * b[static_cast<size_t>(i)];
  }
  if (std::abs(dm[static_cast<size_t>(n) - 1]) < 1e-300)
    dm[static_cast<size_t>(n) - 1] = cplx(1e-300, 0);
  // Back substitution (bandwidth 2 after pivoting).
  std::vector<cplx> x(static_cast<size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    cplx acc = b[static_cast<size_t>(i)];
    if (i + 1 < n) acc -= du[static_cast<size_t>(i)] * x[static_cast<size_t>(i) + 1];
    if (i + 2 < n) acc -= du2[static_cast<size_t>(i)] * x[static_cast<size_t>(i) + 2];
    x[static_cast<size_t>(i)] = acc / dm[static_cast<size_t>(i)];
  }
  return x;
}

inline double section_residual(const FiniteSection& s, double value,
                               const std::vector<cplx>& v) {
  double acc = 0;
  const int n = s.size;
  for (int i = 0; i < n; ++i) {
    cplx r = (s.diag[static_cast<size_t>(i)] - value) * v[static_cast<size_t>(i)];
    if (i + 1 < n) r += s.off[static_cast<size_t>(i)] * v[static_cast<size_t>(i) + 1];
    if (i > 0)
      r += std::conj(s.off[static_cast<size_t>(i) - 1]) * v[static_cast<size_t>(i) - 1];
    acc += std::norm(r);
  }
  return std::sqrt(acc);
}

// Eigenpair near a bisection-refined value by inverse iteration.
inline EigenPair section_eigenpair(const FiniteSection& s, double value,
                                   int max_iter = 8) {
  EigenPair ep;
  ep.value = value;
  std::vector<cplx> v(static_cast<size_t>(s.size));
  // Deterministic pseudo-random start keeps runs reproducible.
  unsigned long long seed = 0x9e3779b97f4a7c15ull;
  for (auto& x : v) {
    seed = seed * 6364136223846793005ull + 1442695040888963407ull;
    x = cplx(static_cast<double>((seed >> 16) & 0xffff) / 65536.0 - 0.5,
             static_cast<double>((seed >> 32) & 0xffff) / 65536.0 - 0.5);
  }
  double nv = 0;
  for (const auto& x : v) nv += std::norm(x);
  nv = std::sqrt(nv);
  for (auto& x : v) x /= nv;
  for (int it = 0; it < max_iter; ++it) {
    v = tridiag_solve_shifted(s, ep.value + 1e-13, v);
    nv = 0;
    for (const auto& x : v) nv += std::norm(x);
    nv = std::sqrt(nv);
    for (auto& x : v) x /= nv;
    // One Rayleigh refinement of the value.
    double rq = 0;
    for (int i = 0; i < s.size; ++i) {
      cplx hv = s.diag[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
      if (i + 1 < s.size)
        hv += s.off[static_cast<size_t>(i)] * v[static_cast<size_t>(i) + 1];
      if (i > 0)
        hv += std::conj(s.off[static_cast<size_t>(i) - 1]) * v[static_cast<size_t>(i) - 1];
      rq += (std::conj(v[static_cast<size_t>(i)]) * hv).real();
    }
    ep.value = rq;
    ep.residual = section_residual(s, ep.value, v);
    if (ep.residual <= 1e-10) break;
  }
  ep.vec = std::move(v);
  if (ep.residual > 1e-8)
    throw ConvergenceFailure("inverse iteration residual " +
                             std::to_string(ep.residual));
  return ep;
}

}  // namespace ehm
