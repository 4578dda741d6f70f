#pragma once

// Transfer-matrix cocycles over irrational rotations: evaluation on a strip,
// the symmetrizing conjugation, iteration, Lyapunov exponent, fibered
// rotation number, degree, and a finite uniform-hyperbolicity probe.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "ehm/errors.hpp"
#include "ehm/fourier.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"

namespace ehm {

struct Mat2 {
  cplx m00{0, 0}, m01{0, 0}, m10{0, 0}, m11{0, 0};

  static Mat2 identity() { return {1, 0, 0, 1}; }

  Mat2 operator*(const Mat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
  Mat2 operator*(cplx s) const { return {m00 * s, m01 * s, m10 * s, m11 * s}; }
  Mat2 operator+(const Mat2& o) const {
    return {m00 + o.m00, m01 + o.m01, m10 + o.m10, m11 + o.m11};
  }
  Mat2 operator-(const Mat2& o) const {
    return {m00 - o.m00, m01 - o.m01, m10 - o.m10, m11 - o.m11};
  }
  cplx det() const { return m00 * m11 - m01 * m10; }
  cplx trace() const { return m00 + m11; }
  Mat2 inverse() const {
    cplx d = det();
    if (std::abs(d) < 1e-300) throw NearSingular("Mat2::inverse");
    return {m11 / d, -m01 / d, -m10 / d, m00 / d};
  }
  double frob() const {
    return std::sqrt(std::norm(m00) + std::norm(m01) + std::norm(m10) +
                     std::norm(m11));
  }
  // Largest singular value.
  double op_norm() const {
    double f2 = std::norm(m00) + std::norm(m01) + std::norm(m10) + std::norm(m11);
    double d2 = std::norm(det());
    double disc = f2 * f2 - 4.0 * d2;
    if (disc < 0) disc = 0;
    return std::sqrt(0.5 * (f2 + std::sqrt(disc)));
  }
  double max_imag() const {
    return std::max(std::max(std::abs(m00.imag()), std::abs(m01.imag())),
                    std::max(std::abs(m10.imag()), std::abs(m11.imag())));
  }
};

// Real 2x2, used by the projective-angle machinery.
struct RMat2 {
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0;

  double det() const { return m00 * m11 - m01 * m10; }
  RMat2 operator*(const RMat2& o) const {
    return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11,
            m10 * o.m00 + m11 * o.m10, m10 * o.m01 + m11 * o.m11};
  }
};

inline RMat2 rotation_by_turns(double t) {
  double a = kTwoPi * t;
  return {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
}

inline RMat2 real_part(const Mat2& m, double tol = 1e-9) {
  if (m.max_imag() > tol)
    throw domain_error("matrix not real on the real axis");
  return {m.m00.real(), m.m01.real(), m.m10.real(), m.m11.real()};
}

struct CocycleMap {
  real alpha = 0;
  double strip_radius = 0;             // guaranteed |Im z| range; 0 = axis only
  bool homotopic_to_identity = false;
  std::function<Mat2(cplx)> eval;

  Mat2 operator()(cplx z) const { return eval(z); }
};

enum class TransferVariant { A, ATilde, D };

namespace detail {

// Real-axis interpolants of |c| and sqrt(|c|(x)|c|(x-a)); their analytic
// continuations evaluate the strip versions cheaply.  Valid in region II,
// where |c| is analytic and zero-free well past the radius in use.
struct TildeTable {
  TrigPoly abs_c;     // |c|(x)
  TrigPoly sqrt_ab;   // sqrt(|c|(x) |c|(x-a))
};

inline TildeTable build_tilde_table(const CouplingTriple& lam, double alpha,
                                    int n_grid = 512) {
  const TrigPoly cp = c_poly(lam, alpha);
  TildeTable t;
  t.abs_c =
      trig_interp(n_grid, [&](double x) { return cplx(std::abs(cp(x)), 0); })
          .trimmed();
  t.sqrt_ab = trig_interp(n_grid, [&](double x) {
                return cplx(std::sqrt(std::abs(cp(x)) * std::abs(cp(x - alpha))), 0);
              }).trimmed();
  return t;
}

}  // namespace detail

// Transfer cocycle for the energy equation H u = E u.
//   A       : (1/c(x)) [[E - v(x), -c_tilde(x-a)], [c(x), 0]]
//   A_tilde : (1/sqrt(|c|(x)|c|(x-a))) [[E - v(x), -|c|(x-a)], [|c|(x), 0]]
//   D       : c(x) A(x), polynomial in e^{2 pi i x}, entire
inline CocycleMap transfer(const CouplingTriple& lam, const Irrational& alpha,
                           double E, TransferVariant variant) {
  lam.validate();
  const double ad = alpha.value_d();
  const Region reg = classify_region(lam);
  CocycleMap map;
  map.alpha = alpha.value;

  auto cp = std::make_shared<TrigPoly>(c_poly(lam, ad));
  auto ctp = std::make_shared<TrigPoly>(c_tilde_poly(lam, ad));

  switch (variant) {
    case TransferVariant::A: {
      map.strip_radius =
          reg == Region::II ? epsilon2(lam) / kTwoPi : 0.0;
      map.homotopic_to_identity = false;
      map.eval = [cp, ctp, E, ad](cplx z) {
        cplx c = cp->eval(z);
        if (std::abs(c) < 1e-12)
          throw SingularSymbol("transfer A: c vanishes at the phase");
        cplx v = 2.0 * std::cos(kTwoPi * z);
        return Mat2{(E - v) / c, -ctp->eval(z - ad) / c, cplx(1, 0), cplx(0, 0)};
      };
      break;
    }
    case TransferVariant::ATilde: {
      if (reg != Region::I && reg != Region::II)
        throw WrongRegion("transfer A_tilde needs region I or II");
      map.homotopic_to_identity = true;
      if (reg == Region::II) {
        map.strip_radius = epsilon1(lam) / kTwoPi;
        auto table =
            std::make_shared<detail::TildeTable>(detail::build_tilde_table(lam, ad));
        double radius = map.strip_radius;
        map.eval = [table, E, ad, radius](cplx z) {
          if (std::abs(z.imag()) > radius + 1e-12)
            throw domain_error("transfer A_tilde: outside declared strip");
          cplx a = table->abs_c.eval(z);
          cplx b = table->abs_c.eval(z - ad);
          cplx s = table->sqrt_ab.eval(z);
          if (std::abs(s) < 1e-12)
            throw SingularSymbol("transfer A_tilde: |c| vanishes");
          cplx v = 2.0 * std::cos(kTwoPi * z);
          return Mat2{(E - v) / s, -b / s, a / s, cplx(0, 0)};
        };
      } else {
        map.strip_radius = 0.0;
        map.eval = [cp, E, ad](cplx z) {
          if (std::abs(z.imag()) > 1e-12)
            throw domain_error("transfer A_tilde: region I is axis-only");
          double x = z.real();
          double a = std::abs((*cp)(x));
          double b = std::abs((*cp)(x - ad));
          double s = std::sqrt(a * b);
          if (s < 1e-12)
            throw SingularSymbol("transfer A_tilde: |c| vanishes");
          double v = 2.0 * std::cos(kTwoPi * x);
          return Mat2{cplx((E - v) / s, 0), cplx(-b / s, 0), cplx(a / s, 0),
                      cplx(0, 0)};
        };
      }
      break;
    }
    case TransferVariant::D: {
      map.strip_radius = std::numeric_limits<double>::infinity();
      map.homotopic_to_identity = false;
      map.eval = [cp, ctp, E, ad](cplx z) {
        cplx v = 2.0 * std::cos(kTwoPi * z);
        return Mat2{E - v, -ctp->eval(z - ad), cp->eval(z), cplx(0, 0)};
      };
      break;
    }
  }
  return map;
}

// The conjugation carrying A to A_tilde, assembled from analytic logs of the
// symbols.  Q(x) = e^{f(x)} e^{(g1+g2)(x-a)/4} diag(1, e^{(g2-g1)(x-a)/2}).
struct QConj {
  TrigPoly f, g1, g2;
  double alpha = 0;

  Mat2 Q(cplx z) const {
    cplx za = z - alpha;
    cplx g1a = g1.eval(za), g2a = g2.eval(za);
    cplx scale = std::exp(f.eval(z) + (g1a + g2a) / 4.0);
    return {scale, 0, 0, scale * std::exp((g2a - g1a) / 2.0)};
  }
  Mat2 Qinv(cplx z) const { return Q(z).inverse(); }
};

inline QConj q_conjugation(const CouplingTriple& lam, const Irrational& alpha,
                           int n_fourier = 256) {
  if (classify_region(lam) != Region::II)
    throw WrongRegion("q_conjugation needs region II");
  const double ad = alpha.value_d();
  const TrigPoly cp = c_poly(lam, ad);
  const TrigPoly ctp = c_tilde_poly(lam, ad);

  std::vector<cplx> sc(static_cast<size_t>(n_fourier)),
      sct(static_cast<size_t>(n_fourier));
  for (int j = 0; j < n_fourier; ++j) {
    double x = static_cast<double>(j) / n_fourier;
    sc[static_cast<size_t>(j)] = cp(x);
    sct[static_cast<size_t>(j)] = ctp(x);
  }
  QConj q;
  q.alpha = ad;
  q.g1 = analytic_log(sc).log_poly;      // throws WindingNonzero if wound
  q.g2 = analytic_log(sct).log_poly;

  // f from termwise division of (g1 - g2)/2 by the coboundary divisor.
  TrigPoly f;
  f.k_min = q.g1.k_min;
  f.c.assign(q.g1.c.size(), cplx(0, 0));
  for (int k = f.k_min; k <= f.k_max(); ++k) {
    if (k == 0) continue;
    cplx num = q.g1.c[static_cast<size_t>(k - q.g1.k_min)] -
               q.g2.c[static_cast<size_t>(k - q.g2.k_min)];
    cplx div = std::exp(cplx(0, kTwoPi) * (static_cast<double>(k) * ad)) - 1.0;
    if (std::abs(div) < 1e-14)
      throw SmallDivisor("q_conjugation: k = " + std::to_string(k));
    f.c[static_cast<size_t>(k - f.k_min)] = num / (2.0 * div);
  }
  q.f = f;
  return q;
}

// A_n(x) = A(x+(n-1)a) ... A(x); A_0 = I; A_{-n}(x) = A_n(x - n a)^{-1}.
inline Mat2 iterate(const CocycleMap& map, cplx z, long n) {
  if (n == 0) return Mat2::identity();
  if (n < 0)
    return iterate(map, z + cplx(phase_at(0.0L, map.alpha, n), 0), -n).inverse();
  Mat2 acc = Mat2::identity();
  for (long j = 0; j < n; ++j) {
    double x = phase_at(0.0L, map.alpha, j);  // j * alpha mod 1
    Mat2 a = map.eval(z + cplx(x, 0));
    acc = a * acc;
    if (!std::isfinite(acc.frob())) throw Overflow("iterate: entries exploded");
  }
  return acc;
}

struct LyapunovResult {
  double estimate = 0;
  double stderr_est = 0;
  int n_iter = 0;
  int n_phases = 0;
};

// Birkhoff-averaged top Lyapunov exponent with periodic renormalization.
// Phases start golden-spaced from a seed-derived offset; im_height evaluates
// the complexified cocycle at z = x + i eps.
inline LyapunovResult lyapunov(const CocycleMap& map, int n_iter, int n_phases,
                               unsigned long long seed, double im_height = 0.0) {
  if (n_iter < 1000) throw domain_error("lyapunov: n_iter must be >= 1000");
  if (n_phases < 1) throw domain_error("lyapunov: n_phases must be >= 1");
  const real a = map.alpha;
  // Seed-derived phase offset in [0,1).
  unsigned long long s = seed * 6364136223846793005ull + 1442695040888963407ull;
  double offset = static_cast<double>((s >> 11) & ((1ull << 53) - 1)) /
                  static_cast<double>(1ull << 53);
  const double golden = 0.6180339887498949;

  std::vector<double> per_phase(static_cast<size_t>(n_phases));
  for (int p = 0; p < n_phases; ++p) {
    real x0 = fracl(static_cast<real>(offset) + static_cast<real>(p) *
                                                    static_cast<real>(golden));
    long double log_acc = 0.0L;
    Mat2 m = Mat2::identity();
    for (int j = 0; j < n_iter; ++j) {
      double x = phase_at(x0, a, j);
      m = map.eval(cplx(x, im_height)) * m;
      if ((j & 31) == 31) {
        double nm = m.op_norm();
        if (!(nm > 0) || !std::isfinite(nm)) throw Overflow("lyapunov renorm");
        log_acc += std::log(static_cast<long double>(nm));
        m = m * cplx(1.0 / nm, 0);
      }
    }
    double nm = m.op_norm();
    if (!(nm > 0) || !std::isfinite(nm)) throw Overflow("lyapunov renorm");
    log_acc += std::log(static_cast<long double>(nm));
    per_phase[static_cast<size_t>(p)] =
        static_cast<double>(log_acc) / static_cast<double>(n_iter);
  }
  LyapunovResult r;
  r.n_iter = n_iter;
  r.n_phases = n_phases;
  double mean = 0;
  for (double v : per_phase) mean += v;
  mean /= n_phases;
  double var = 0;
  for (double v : per_phase) var += (v - mean) * (v - mean);
  r.estimate = mean;
  r.stderr_est = n_phases > 1
                     ? std::sqrt(var / (n_phases - 1) / n_phases)
                     : 0.0;
  return r;
}

namespace detail {

// Angle increment, in turns, of the projective action of a det-1 real
// matrix on direction v: split M = R_phi P with P symmetric positive
// definite of det 1; the P part turns v by less than a quarter turn since
// v.Pv > 0, so the sum is an unambiguous lift increment.
inline double projective_increment(const RMat2& m, double& vx, double& vy) {
  double s00 = m.m00 * m.m00 + m.m10 * m.m10;
  double s01 = m.m00 * m.m01 + m.m10 * m.m11;
  double s11 = m.m01 * m.m01 + m.m11 * m.m11;
  double tr2 = std::sqrt(s00 + s11 + 2.0);
  // P = (S + I)/sqrt(tr S + 2), P^{-1} = (S^{-1} + I)/sqrt(tr S + 2) with
  // S^{-1} = [[s11, -s01], [-s01, s00]] (det S = 1).
  double pinv00 = (s11 + 1.0) / tr2;
  double pinv01 = -s01 / tr2;
  double r00 = m.m00 * pinv00 + m.m01 * pinv01;
  double r10 = m.m10 * pinv00 + m.m11 * pinv01;
  double phi = std::atan2(r10, r00);

  double p00 = (s00 + 1.0) / tr2, p01 = s01 / tr2, p11 = (s11 + 1.0) / tr2;
  double px = p00 * vx + p01 * vy;
  double py = p01 * vx + p11 * vy;
  double delta = std::atan2(vx * py - vy * px, vx * px + vy * py);

  double nx = m.m00 * vx + m.m01 * vy;
  double ny = m.m10 * vx + m.m11 * vy;
  double nn = std::hypot(nx, ny);
  vx = nx / nn;
  vy = ny / nn;
  return (phi + delta) / kTwoPi;
}

}  // namespace detail

// Fibered rotation number in [0,1): mean projective angle increment along
// the orbit, averaged over initial directions.
inline double rotation_number(const CocycleMap& map, int n_iter, int n_samples,
                              double x0 = 0.0) {
  if (!map.homotopic_to_identity)
    throw NotHomotopicToIdentity("rotation_number needs the identity class");
  if (n_iter < 1) throw domain_error("rotation_number: n_iter >= 1");
  double mean = 0;
  for (int sample = 0; sample < n_samples; ++sample) {
    double ang = kPi * static_cast<double>(sample) / n_samples;
    double vx = std::cos(ang), vy = std::sin(ang);
    long double acc = 0;
    for (int j = 0; j < n_iter; ++j) {
      double x = phase_at(static_cast<real>(x0), map.alpha, j);
      RMat2 m = real_part(map.eval(cplx(x, 0)));
      double d = m.det();
      if (!(d > 0)) throw domain_error("rotation_number: det must be positive");
      double rs = d != 1.0 ? 1.0 / std::sqrt(d) : 1.0;
      RMat2 mn{m.m00 * rs, m.m01 * rs, m.m10 * rs, m.m11 * rs};
      acc += static_cast<long double>(detail::projective_increment(mn, vx, vy));
    }
    double rho = static_cast<double>(acc) / n_iter;
    mean += rho;
  }
  mean /= n_samples;
  double frac = mean - std::floor(mean);
  if (frac >= 1.0) frac -= 1.0;
  return frac;
}

// Degree of a torus (or period-2) loop of invertible real matrices: winding
// of the first column, doubled-angle convention so that x -> R_{k x / 2}
// has degree k.
inline int degree(const std::function<RMat2(double)>& m, double period = 1.0,
                  int grid_n = 2048) {
  double prev_x = 0, prev_vx, prev_vy;
  {
    RMat2 m0 = m(0.0);
    prev_vx = m0.m00;
    prev_vy = m0.m10;
    if (std::hypot(prev_vx, prev_vy) < 1e-12)
      throw GridTooCoarse("degree: first column vanishes");
  }
  (void)prev_x;
  long double total = 0;
  for (int j = 1; j <= grid_n; ++j) {
    double x = period * static_cast<double>(j) / grid_n;
    RMat2 mj = m(x);
    double vx = mj.m00, vy = mj.m10;
    if (std::hypot(vx, vy) < 1e-12)
      throw GridTooCoarse("degree: first column vanishes");
    double d = std::atan2(prev_vx * vy - prev_vy * vx,
                          prev_vx * vx + prev_vy * vy) /
               kTwoPi;
    if (std::abs(d) >= 0.25)
      throw GridTooCoarse("degree: angle step >= quarter turn");
    total += static_cast<long double>(d);
    prev_vx = vx;
    prev_vy = vy;
  }
  double turns = static_cast<double>(total);
  double k = 2.0 * turns / period;
  double kr = std::round(k);
  if (std::abs(k - kr) > 0.1)
    throw GridTooCoarse("degree: winding not a half-integer multiple");
  return static_cast<int>(kr);
}

enum class UhVerdict { uh_likely, not_uh, inconclusive };

inline const char* uh_verdict_name(UhVerdict v) {
  switch (v) {
    case UhVerdict::uh_likely: return "uh_likely";
    case UhVerdict::not_uh: return "not_uh";
    default: return "inconclusive";
  }
}

struct UhProbeResult {
  UhVerdict verdict = UhVerdict::inconclusive;
  double min_rate = 0;     // min over grid of (1/n) ln ||A_n(x)||
  double max_cone_angle = 0;  // worst forward-invariance defect, radians
};

// Finite uniform-hyperbolicity probe: exponential growth at every phase,
// plus collapse of transverse directions onto a common image direction
// (the finite-size signature of a dominated splitting).
inline UhProbeResult uh_probe(const CocycleMap& map, int n, int grid_n,
                              double eta_min = 0.01, double tol = 0.02) {
  const real a = map.alpha;
  UhProbeResult r;
  r.min_rate = 1e300;
  r.max_cone_angle = 0;
  for (int g = 0; g < grid_n; ++g) {
    real x0 = static_cast<real>(g) / grid_n;
    Mat2 m = Mat2::identity();
    long double log_acc = 0;
    for (int j = 0; j < n; ++j) {
      m = map.eval(cplx(phase_at(x0, a, j), 0)) * m;
      if ((j & 31) == 31) {
        double nm = m.op_norm();
        if (!(nm > 0) || !std::isfinite(nm)) throw Overflow("uh_probe renorm");
        log_acc += std::log(static_cast<long double>(nm));
        m = m * cplx(1.0 / nm, 0);
      }
    }
    double nm = m.op_norm();
    log_acc += std::log(static_cast<long double>(nm));
    double rate = static_cast<double>(log_acc) / n;
    r.min_rate = std::min(r.min_rate, rate);
    // Images of the two coordinate directions; under hyperbolicity they
    // collapse onto the expanding direction.
    double n1 = std::sqrt(std::norm(m.m00) + std::norm(m.m10));
    double n2 = std::sqrt(std::norm(m.m01) + std::norm(m.m11));
    if (n1 > 0 && n2 > 0) {
      cplx ip = std::conj(m.m00) * m.m01 + std::conj(m.m10) * m.m11;
      double cosang = std::min(1.0, std::abs(ip) / (n1 * n2));
      double angle = std::acos(cosang);
      r.max_cone_angle = std::max(r.max_cone_angle, angle);
    }
  }
  if (r.min_rate <= std::log1p(tol)) {
    r.verdict = UhVerdict::not_uh;
  } else if (r.min_rate >= eta_min && r.max_cone_angle < 0.05) {
    r.verdict = UhVerdict::uh_likely;
  } else {
    r.verdict = UhVerdict::inconclusive;
  }
  return r;
}

}  // namespace ehm
