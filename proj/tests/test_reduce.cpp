#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ehm/cocycle.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"
#include "ehm/reduce.hpp"

using namespace ehm;

namespace {

const CouplingTriple kAmo2{0.0, 2.0, 0.0};
const CouplingTriple kEhm{0.1, 2.0, 0.3};

const Irrational& golden() {
  static const Irrational g = golden_mean();
  return g;
}

SeqWindow take_window(const DualEigenpair& d, long m) {
  SeqWindow s;
  s.n0 = -m;
  s.v.resize(static_cast<size_t>(2 * m + 1));
  for (long k = -m; k <= m; ++k) s.v[static_cast<size_t>(k + m)] = d.u.at(k);
  return s;
}

RMat2 planar_rotation(double t) {
  return RMat2{std::cos(t), -std::sin(t), std::sin(t), std::cos(t)};
}

RMat2 rmat_inverse(const RMat2& m) {
  const double d = m.det();
  return RMat2{m.m11 / d, -m.m01 / d, -m.m10 / d, m.m00 / d};
}

Mat2 to_complex(const RMat2& m) {
  Mat2 out;
  out.m00 = m.m00;
  out.m01 = m.m01;
  out.m10 = m.m10;
  out.m11 = m.m11;
  return out;
}

// exp(eps G) for traceless G, closed form through the Cayley-Hamilton square.
RMat2 traceless_exp(const RMat2& g, double eps) {
  const double mu2 = g.m00 * g.m00 + g.m01 * g.m10;
  double c, s;
  if (mu2 > 0) {
    const double m = std::sqrt(mu2);
    c = std::cosh(eps * m);
    s = std::sinh(eps * m) / m;
  } else if (mu2 < 0) {
    const double m = std::sqrt(-mu2);
    c = std::cos(eps * m);
    s = std::sin(eps * m) / m;
  } else {
    c = 1.0;
    s = eps;
  }
  return RMat2{c + s * g.m00, s * g.m01, s * g.m10, c + s * g.m11};
}

// Shared engineered frame: W0 = R(2 pi g) diag(e^s, e^-s), unit determinant.
RMat2 engineered_frame(double x) {
  const double g = 0.1 * std::sin(kTwoPi * x);
  const double s = 0.2 * std::cos(kTwoPi * x);
  RMat2 d;
  d.m00 = std::exp(s);
  d.m11 = std::exp(-s);
  return planar_rotation(kTwoPi * g) * d;
}

double engineered_tau(double x) { return 0.3 + 0.1 * std::cos(kTwoPi * x); }

// Section of the engineered cocycle, dressed with a unimodular phase of
// winding one so the square-root lift is exercised.
std::pair<cplx, cplx> engineered_section(double x) {
  const RMat2 w = engineered_frame(x);
  const cplx ph = std::exp(cplx(0, 0.4 * std::sin(kTwoPi * x) + kTwoPi * x));
  return {ph * w.m00, ph * w.m10};
}

}  // namespace

TEST_CASE("build_U reproduces the transfer defect and mode layout") {
  const real theta = 0.12L;
  const DualEigenpair dep =
      dual_eigenpair(kEhm, golden().value, theta, 0.2287972008, 261, 1e-3);
  REQUIRE(dep.residual < 1e-9);

  const long m = 24;
  const BuildUResult bu =
      build_U(take_window(dep, m), theta, kEhm, golden(), dep.e_primal);

  SECTION("stored modes carry the phase factors of the two components") {
    const cplx eith = std::exp(cplx(0, kTwoPi * static_cast<double>(theta)));
    const TrigPoly rec = trig_interp(128, [&](double x) {
      return bu.u_vec.v1.eval(cplx(x, 0));
    });
    for (long k = -m; k <= m; ++k) {
      const cplx want = eith * dep.u.at(k);
      const int idx = static_cast<int>(k) - rec.k_min;
      REQUIRE(idx >= 0);
      REQUIRE(idx < static_cast<int>(rec.c.size()));
      REQUIRE(std::abs(rec.c[static_cast<size_t>(idx)] - want) < 1e-10);
    }
  }

  SECTION("the framed section solves the cocycle equation up to the defect") {
    const CocycleMap map = transfer(kEhm, golden(), dep.e_primal, TransferVariant::A);
    const TrigPoly cp = c_poly(kEhm, golden().value_d());
    const cplx eith = std::exp(cplx(0, kTwoPi * static_cast<double>(theta)));
    const double ad = golden().value_d();
    double worst1 = 0, worst2 = 0;
    for (int j = 0; j < 512; ++j) {
      const double x = static_cast<double>(j) / 512;
      const Mat2 a = map.eval(cplx(x, 0));
      const auto [u1, u2] = bu.u_vec.eval(cplx(x, 0));
      const auto [s1, s2] = bu.u_vec.eval(cplx(x + ad, 0));
      const cplx g1 = a.m00 * u1 + a.m01 * u2 - eith * s1;
      const cplx g2 = a.m10 * u1 + a.m11 * u2 - eith * s2;
      worst1 = std::max(worst1,
                        std::abs(cp(x) * g1 - bu.defect.v1.eval(cplx(x, 0))));
      worst2 = std::max(worst2, std::abs(g2));
    }
    REQUIRE(worst1 < 1e-10);
    REQUIRE(worst2 < 1e-11);
  }

  SECTION("defect mass sits on the window boundary") {
    REQUIRE(bu.x1 == -m);
    REQUIRE(bu.x2 == m);
    REQUIRE(bu.interior_mass < 1e-10);
    REQUIRE(bu.boundary_mass > 0);
  }
}

TEST_CASE("build_U delta window matches the closed three-mode form") {
  const real theta = 0.37L;
  const double e = 0.3;
  SeqWindow delta;
  delta.n0 = 0;
  delta.v = {cplx(1, 0)};
  const BuildUResult bu = build_U(delta, theta, kEhm, golden(), e);

  const CouplingTriple lam_hat = dual(kEhm);
  const TrigPoly cphat = c_poly(lam_hat, golden().value_d());
  const double thd = static_cast<double>(theta);
  const double ad = golden().value_d();
  const cplx eith = std::exp(cplx(0, kTwoPi * thd));

  // (H - e/l2) delta_0 has exactly three modes; the numerator scales by l2.
  const cplx want_m1 = -kEhm.l2 * eith * cphat(thd - ad);
  const cplx want_0 = eith * (e - 2.0 * kEhm.l2 * std::cos(kTwoPi * thd));
  const cplx want_p1 = -kEhm.l2 * eith * std::conj(cphat(thd));

  const TrigPoly rec = trig_interp(16, [&](double x) {
    return bu.defect.v1.eval(cplx(x, 0));
  });
  auto coef = [&rec](int k) {
    const int idx = k - rec.k_min;
    REQUIRE(idx >= 0);
    REQUIRE(idx < static_cast<int>(rec.c.size()));
    return rec.c[static_cast<size_t>(idx)];
  };
  REQUIRE(std::abs(coef(-1) - want_m1) < 1e-12);
  REQUIRE(std::abs(coef(0) - want_0) < 1e-12);
  REQUIRE(std::abs(coef(1) - want_p1) < 1e-12);
}

TEST_CASE("build_U rejects malformed windows") {
  const real theta = 0.12L;
  const DualEigenpair dep =
      dual_eigenpair(kEhm, golden().value, theta, 0.2287972008, 261, 1e-3);

  SECTION("asymmetric window") {
    SeqWindow s;
    s.n0 = -3;
    s.v.assign(6, cplx(0, 0));
    s.v[3] = cplx(1, 0);
    REQUIRE_THROWS_AS(build_U(s, theta, kEhm, golden(), dep.e_primal),
                      std::invalid_argument);
  }

  SECTION("center entry must be one") {
    SeqWindow s = take_window(dep, 8);
    s.v[8] = cplx(1.001, 0);
    REQUIRE_THROWS_AS(build_U(s, theta, kEhm, golden(), dep.e_primal),
                      std::invalid_argument);
  }

  SECTION("interior corruption leaks off the boundary") {
    SeqWindow s = take_window(dep, 24);
    s.v[27] += cplx(1e-5, 0);
    REQUIRE_THROWS_AS(build_U(s, theta, kEhm, golden(), dep.e_primal),
                      SupportLeak);
  }
}

TEST_CASE("defect strip norm decays across doubling windows") {
  const real theta = 0.12L;
  const DualEigenpair dep =
      dual_eigenpair(kEhm, golden().value, theta, 0.2287972008, 261, 1e-3);
  REQUIRE(dep.residual < 1e-9);

  const double eps1 = epsilon1(kEhm);
  const double h = eps1 / (20.0 * kPi);
  std::vector<double> sups;
  for (long m : {8L, 16L, 32L}) {
    const BuildUResult bu =
        build_U(take_window(dep, m), theta, kEhm, golden(), dep.e_primal);
    REQUIRE(bu.interior_mass < 1e-10);
    sups.push_back(defect_strip_sup(bu, kEhm, golden(), h, 512));
  }
  REQUIRE(sups[0] > sups[1]);
  REQUIRE(sups[1] > sups[2]);
  REQUIRE(sups[2] < 1e-7);
  // Log-slope across the 8 -> 32 span; the analytic rate is eps1 itself.
  const double rate = std::log(sups[0] / sups[2]) / 24.0;
  REQUIRE(rate > eps1 / 2.0);
}

TEST_CASE("build_W frames a localized state with constant determinant") {
  const real theta = 0.025L;
  const DualEigenpair dep =
      dual_eigenpair(kEhm, golden().value, theta, 0.241710062982, 121, 1e-3);
  REQUIRE(dep.residual < 1e-9);

  const BuildUResult bu =
      build_U(take_window(dep, 24), theta, kEhm, golden(), dep.e_primal);
  const ConjugacyResult w = build_W(bu.u_vec, kEhm, golden(), dep.e_primal, 0, 512);

  REQUIRE(w.n_j == 0);
  REQUIRE(w.defect < 1e-5);
  REQUIRE(std::abs(w.measured_degree) <= 36);
  REQUIRE(w.det_min > 0);
  REQUIRE(w.det_spread < 1e-3 * w.det_max);
  REQUIRE(w.det_w2_dev < 1e-8);
  REQUIRE(w.w_sup < 10.0);
  REQUIRE(std::abs(w.l_value - 20.0) < 1e-6);
  REQUIRE(std::abs(std::abs(w.rotation_turns) - 0.025) < 1e-12);

  SECTION("the stored grid and the functional view agree") {
    const RMat2 g = w.w2[17];
    const RMat2 f = w.w2_fn(2.0 * 17.0 / 512.0);
    REQUIRE(std::abs(g.m00 - f.m00) < 1e-12);
    REQUIRE(std::abs(g.m01 - f.m01) < 1e-12);
    REQUIRE(std::abs(g.m10 - f.m10) < 1e-12);
    REQUIRE(std::abs(g.m11 - f.m11) < 1e-12);
  }
}

TEST_CASE("almost_reduce certifies the resonant phase") {
  const real theta = (13.0L * golden().value + 1e-7L) / 2.0L;

  const ResonanceList res = resonances(theta, golden(), 0.5, 200);
  REQUIRE(res.entries.size() == 2);
  REQUIRE(res.entries[0].n == 0);
  REQUIRE(std::abs(static_cast<double>(res.entries[0].dist) - 0.0344419) < 1e-4);
  REQUIRE(res.entries[1].n == 13);
  REQUIRE(std::abs(static_cast<double>(res.entries[1].dist) - 1e-7) < 1e-8);

  AlmostReduceConfig cfg;
  cfg.window_sizes = {24, 32, 64};
  cfg.max_distance = 1e-3;
  const AlmostReduceReport rep =
      almost_reduce(kAmo2, golden(), theta, 3.954054806942, 1, cfg);

  REQUIRE(rep.n_j == 13);
  REQUIRE(rep.l_value > 0.9e7);
  REQUIRE(rep.l_value < 1.1e7);
  REQUIRE(rep.eigen_residual < 1e-8);
  REQUIRE_FALSE(rep.small_window);
  REQUIRE(rep.stages.size() == 3);
  REQUIRE(rep.trend_ok);
  REQUIRE(rep.stages[0].defect > rep.stages[1].defect);
  REQUIRE(rep.stages[1].defect > rep.stages[2].defect);
  REQUIRE(rep.stages[2].defect < 1e-3);
  for (const ConjugacyResult& st : rep.stages) {
    REQUIRE(st.det_min > 0);
    REQUIRE(st.det_w2_dev < 1e-8);
    REQUIRE(std::abs(st.measured_degree) <= 36 * 13);
  }
  REQUIRE(rep.rotation_gap >= 0);
  REQUIRE(rep.rotation_gap < 1e-6);
  REQUIRE(rep.fitted_c_wl < 1.0);
}

TEST_CASE("almost_reduce refuses a window that truncates the partner cluster") {
  const real theta = (13.0L * golden().value + 1e-7L) / 2.0L;
  AlmostReduceConfig cfg;
  cfg.window_sizes = {16};
  cfg.section_size = 257;
  cfg.max_distance = 1e-3;
  REQUIRE_THROWS_AS(almost_reduce(kAmo2, golden(), theta, 3.954054806942, 1, cfg),
                    DetVanishes);
}

TEST_CASE("complete_to_sl2 returns unit determinant frames") {
  SECTION("constant section completes to the identity") {
    TrigVector v;
    v.v1.k_min = 0;
    v.v1.c = {cplx(1, 0)};
    v.v2.k_min = 0;
    v.v2.c = {cplx(0, 0)};
    const Sl2Completion c = complete_to_sl2(v, 64);
    REQUIRE(c.det_dev < 1e-15);
    REQUIRE(std::abs(c.m[5].m00 - cplx(1, 0)) < 1e-15);
    REQUIRE(std::abs(c.m[5].m11 - cplx(1, 0)) < 1e-15);
    REQUIRE(c.norm_bound == Catch::Approx(1.0));
  }

  SECTION("oscillating section stays unimodular on a fine grid") {
    TrigVector v;
    v.v1.k_min = -1;
    v.v1.c = {cplx(0.2, 0.1), cplx(1.0, 0), cplx(0.3, -0.2)};
    v.v2.k_min = 0;
    v.v2.c = {cplx(0.4, 0), cplx(0.0, 0.3)};
    const Sl2Completion c = complete_to_sl2(v, 10000);
    REQUIRE(c.det_dev < 1e-12);
    REQUIRE(c.m_sup >= c.max_norm);
    REQUIRE(c.norm_bound >= c.max_norm);
    REQUIRE(c.norm_bound >= 1.0 / c.min_norm);
  }

  SECTION("a vanishing column is refused") {
    TrigVector v;
    v.v1.k_min = -1;
    v.v1.c = {cplx(-0.5, 0), cplx(1.0, 0), cplx(-0.5, 0)};  // 1 - cos, zero at 0
    v.v2 = v.v1;
    REQUIRE_THROWS_AS(complete_to_sl2(v, 64), VectorVanishes);
  }
}

TEST_CASE("scalar_cohomology closed form and truncation residual") {
  const real alpha = golden().value;
  const double ad = golden().value_d();

  SECTION("single harmonic matches the explicit divisor") {
    TrigPoly tau;
    tau.k_min = -1;
    tau.c = {cplx(0.5, 0), cplx(0, 0), cplx(0.5, 0)};  // cos 2 pi x
    const ScalarCohomology sc = scalar_cohomology(tau, alpha, 8);
    REQUIRE(std::abs(sc.average) < 1e-14);
    REQUIRE(sc.residual < 1e-12);
    const cplx dplus = std::exp(cplx(0, kTwoPi * ad)) - cplx(1, 0);
    const cplx dminus = std::exp(cplx(0, -kTwoPi * ad)) - cplx(1, 0);
    for (double x : {0.0, 0.21, 0.5, 0.77}) {
      const cplx want = 0.5 * std::exp(cplx(0, kTwoPi * x)) / dplus +
                        0.5 * std::exp(cplx(0, -kTwoPi * x)) / dminus;
      REQUIRE(std::abs(sc.psi.eval(cplx(x, 0)) - want) < 1e-13);
    }
  }

  SECTION("constants pass through the average") {
    TrigPoly tau;
    tau.k_min = 0;
    tau.c = {cplx(0.7, 0)};
    const ScalarCohomology sc = scalar_cohomology(tau, alpha, 8);
    REQUIRE(std::abs(sc.average - cplx(0.7, 0)) < 1e-15);
    REQUIRE(std::abs(sc.psi.eval(cplx(0.3, 0))) < 1e-14);
    REQUIRE(sc.residual < 1e-14);
  }

  SECTION("smooth decay solves to truncation accuracy") {
    TrigPoly tau;
    const int kw = 150;
    tau.k_min = -kw;
    tau.c.resize(static_cast<size_t>(2 * kw + 1));
    for (int k = -kw; k <= kw; ++k)
      tau.c[static_cast<size_t>(k + kw)] =
          std::exp(-0.3 * std::abs(k)) *
          cplx(std::cos(3.0 * k), std::sin(2.0 * k));
    const ScalarCohomology sc = scalar_cohomology(tau, alpha, 200);
    REQUIRE(sc.residual < 1e-10);
  }

  SECTION("a rational frequency hits the zero divisor") {
    TrigPoly tau;
    tau.k_min = -3;
    tau.c.assign(7, cplx(0, 0));
    tau.c[0] = cplx(0.5, 0);
    tau.c[6] = cplx(0.5, 0);  // cos 6 pi x
    REQUIRE_THROWS_AS(scalar_cohomology(tau, 1.0L / 3.0L, 8), SmallDivisor);
  }
}

TEST_CASE("matrix_cohomology solves the unipotent twist equation") {
  const real alpha = golden().value;
  const double a = 0.5;

  SECTION("constant right sides center to zero") {
    TrigMat2 m1;
    for (TrigPoly* p : {&m1.m00, &m1.m01, &m1.m10, &m1.m11}) {
      p->k_min = 0;
      p->c = {cplx(0.3, 0)};
    }
    const MatrixCohomology mc = matrix_cohomology(a, m1, alpha, 8);
    REQUIRE(mc.residual < 1e-13);
    REQUIRE(std::abs(mc.average.m00 - cplx(0.3, 0)) < 1e-14);
    REQUIRE(std::abs(mc.y.eval(cplx(0.37, 0)).frob()) < 1e-12);
  }

  SECTION("oscillating right sides close the conjugation identity") {
    TrigMat2 m1;
    auto fill = [](TrigPoly& p, double c1, double s1, double c2) {
      p.k_min = -2;
      p.c = {cplx(c2 / 2, 0), cplx(c1 / 2, s1 / 2), cplx(0.1, 0),
             cplx(c1 / 2, -s1 / 2), cplx(c2 / 2, 0)};
    };
    fill(m1.m00, 0.4, 0.1, 0.05);
    fill(m1.m01, -0.2, 0.3, 0.02);
    fill(m1.m10, 0.15, -0.25, 0.0);
    fill(m1.m11, -0.1, 0.05, 0.07);
    const MatrixCohomology mc = matrix_cohomology(a, m1, alpha, 200);
    REQUIRE(mc.residual < 1e-8);

    const double ad = golden().value_d();
    Mat2 m0;
    m0.m00 = 1;
    m0.m01 = a;
    m0.m10 = 0;
    m0.m11 = 1;
    for (double x : {0.0, 0.37, 0.61}) {
      const Mat2 lhs = mc.y.eval(cplx(x + ad, 0)) * m0 - m0 * mc.y.eval(cplx(x, 0));
      const Mat2 rhs = m1.eval(cplx(x, 0)) - mc.average;
      REQUIRE((lhs - rhs).frob() < 1e-8);
    }
  }
}

TEST_CASE("parabolic_core recovers an engineered parabolic form") {
  auto weight = [](double) { return 1.0; };
  const double ad = golden().value_d();

  for (double kappa0 : {1.0, -1.0}) {
    auto at_fn = [kappa0, ad](double x) {
      RMat2 c0{kappa0, engineered_tau(x), 0, kappa0};
      const RMat2 m = engineered_frame(x + ad) * c0 * rmat_inverse(engineered_frame(x));
      return to_complex(m);
    };
    const ParabolicForm pf =
        parabolic_core(at_fn, engineered_section, golden().value, weight, 512, 200);
    INFO("kappa0 = " << kappa0);
    REQUIRE(pf.kappa == Catch::Approx(kappa0));
    REQUIRE(std::abs(pf.a - 0.3) < 1e-6);
    REQUIRE(pf.residual < 1e-9);
    REQUIRE(pf.det_gap < 1e-12);
    REQUIRE(pf.real_dev < 1e-12);
    REQUIRE(pf.tau_period_dev < 1e-12);
    REQUIRE(pf.psi_residual < 1e-12);
  }
}

TEST_CASE("parabolic_core rejects sections outside case B") {
  const real theta = 0.137L;
  const DualEigenpair dep =
      dual_eigenpair(kAmo2, golden().value, theta, 3.07237601, 145, 1e-3);
  REQUIRE(dep.residual < 1e-9);
  REQUIRE_THROWS_AS(parabolic_reduce(kAmo2, golden(), theta, take_window(dep, 48),
                                     dep.e_primal, 512, 200),
                    NotCaseB);
}

TEST_CASE("parabolic_reduce requires the zero-free symbol region") {
  SeqWindow delta;
  delta.n0 = 0;
  delta.v = {cplx(1, 0)};
  const CouplingTriple outside{0.5, 0.8, 0.3};
  REQUIRE_THROWS_AS(parabolic_reduce(outside, golden(), 0.1L, delta, 0.0),
                    WrongRegion);
}

TEST_CASE("parabolic_core demands a resolvable square root") {
  auto weight = [](double) { return 1.0; };
  auto at_id = [](double) {
    Mat2 m;
    m.m00 = 1;
    m.m11 = 1;
    return m;
  };

  SECTION("fast winding on a coarse grid trips the step guard") {
    auto u = [](double x) {
      const cplx ph = std::exp(cplx(0, kTwoPi * 3.0 * x));
      return std::pair<cplx, cplx>(ph * std::cos(kTwoPi * x), ph * 0.5);
    };
    REQUIRE_THROWS_AS(parabolic_core(at_id, u, golden().value, weight, 16, 8),
                      SquareRootBranch);
  }

  SECTION("quarter winding has no continuous root on the doubled circle") {
    auto u = [](double x) {
      const cplx ph = std::exp(cplx(0, kPi * x / 2.0));
      return std::pair<cplx, cplx>(ph * std::cos(kTwoPi * x), ph * 0.5);
    };
    REQUIRE_THROWS_AS(parabolic_core(at_id, u, golden().value, weight, 64, 8),
                      SquareRootBranch);
  }
}

TEST_CASE("gap_opening_certificate fits a quadratic remainder") {
  auto weight = [](double) { return 1.0; };
  const double ad = golden().value_d();
  auto gpoly = [](double x) {
    RMat2 g;
    g.m00 = 0.2 * std::cos(kTwoPi * x);
    g.m01 = 0.15;
    g.m10 = 0.1 + 0.05 * std::sin(kTwoPi * x);
    g.m11 = -g.m00;
    return g;
  };
  auto at_eps = [ad, gpoly](double x, double eps) {
    RMat2 c0{1.0, engineered_tau(x), 0, 1.0};
    const RMat2 m = engineered_frame(x + ad) * (c0 * traceless_exp(gpoly(x), eps)) *
                    rmat_inverse(engineered_frame(x));
    return to_complex(m);
  };
  auto at0 = [at_eps](double x) { return at_eps(x, 0.0); };

  const ParabolicForm pf =
      parabolic_core(at0, engineered_section, golden().value, weight, 512, 200);
  REQUIRE(pf.residual < 1e-9);

  const GapCertificate gc = gap_opening_certificate(
      pf, at_eps, {5e-4, 1e-3, 2e-3, 4e-3}, golden().value, 200);
  REQUIRE(std::abs(gc.baseline - 2.0) < 1e-12);
  // kappa tr [C0 G] = [tau0 g21] = 0.3 * 0.1 for this family.
  REQUIRE(std::abs(gc.slope_measured - 0.03) < 1e-6);
  REQUIRE(gc.fit_exponent > 1.9);
  REQUIRE(gc.fit_exponent < 2.1);
  REQUIRE(gc.probes.back().residual_centered < 1e-5);
  // The family is not a rank-one energy perturbation; the structural
  // comparison is reported large rather than silently wrong.
  REQUIRE(gc.m1_structure_dev > 1e-2);
}

TEST_CASE("gap_opening_certificate refuses a degenerate average") {
  auto weight = [](double) { return 1.0; };
  const double ad = golden().value_d();
  const RMat2 quarter = planar_rotation(kPi / 2.0);
  auto at_fn = [ad, quarter](double x) {
    RMat2 c0{1.0, engineered_tau(x), 0, 1.0};
    const RMat2 m = quarter * c0 * rmat_inverse(quarter);
    return to_complex(m);
  };
  auto u_fn = [quarter](double x) {
    const cplx ph = std::exp(cplx(0, 0.4 * std::sin(kTwoPi * x) + kTwoPi * x));
    return std::pair<cplx, cplx>(ph * quarter.m00, ph * quarter.m10);
  };
  const ParabolicForm pf =
      parabolic_core(at_fn, u_fn, golden().value, weight, 64, 16);
  REQUIRE(pf.m11_sq < 1e-10);
  auto at_eps = [at_fn](double x, double) { return at_fn(x); };
  REQUIRE_THROWS_AS(
      gap_opening_certificate(pf, at_eps, {1e-3}, golden().value, 16),
      DegenerateAverage);
}

TEST_CASE("parabolic_reduce flattens the gap edge cocycles") {
  const real theta = detail::frac01(golden().value) / 2.0L + 0.5L;

  struct EdgeCase {
    double e_target;
    double a_lo, a_hi;
    int side;
  };
  const EdgeCase cases[] = {
      {0.67010364, 0.02, 0.15, +1},    // lower edge; the gap sits above
      {2.59521250, -0.15, -0.02, -1},  // upper edge; the gap sits below
  };

  for (const EdgeCase& ec : cases) {
    INFO("edge at " << ec.e_target);
    const DualEigenpair dep =
        dual_eigenpair(kAmo2, golden().value, theta, ec.e_target, 145, 1e-3);
    REQUIRE(dep.residual < 1e-9);

    const ParabolicForm pf = parabolic_reduce(kAmo2, golden(), theta,
                                              take_window(dep, 48),
                                              dep.e_primal, 512, 200);
    REQUIRE(pf.n_j == 1);
    REQUIRE(std::abs(pf.kappa) == Catch::Approx(1.0));
    REQUIRE(pf.a > ec.a_lo);
    REQUIRE(pf.a < ec.a_hi);
    REQUIRE(pf.residual < 1e-8);
    REQUIRE(pf.det_gap < 1e-8);
    REQUIRE(pf.eta_dev < 1e-8);
    REQUIRE(pf.real_dev < 1e-8);
    REQUIRE(pf.tau_period_dev < 1e-10);
    REQUIRE(pf.psi_residual < 1e-10);

    const GapCertificate gc = gap_opening_certificate(
        pf, kAmo2, golden(), dep.e_primal, {5e-4, 1e-3, 2e-3, 4e-3}, 200);
    REQUIRE(std::abs(gc.baseline - 2.0) < 1e-10);
    REQUIRE(std::abs(gc.slope_measured - gc.slope_structural) < 1e-4);
    REQUIRE(gc.m1_structure_dev < 1e-8);
    REQUIRE(gc.fit_exponent > 1.9);
    REQUIRE(gc.fit_exponent < 2.1);
    REQUIRE(gc.predicted_side == ec.side);
    REQUIRE(gc.probes.back().residual_centered < 1e-4);
    // The trace leaves [-2, 2] on the predicted side at the probe scale.
    const TraceProbe& last = gc.probes.back();
    if (ec.side > 0) REQUIRE(last.trace_measured > 2.0);
    if (ec.side < 0) REQUIRE(last.trace_measured < 2.0);
  }
}

TEST_CASE("theta_rho_consistency labels a resonant phase and its rotation") {
  const real theta = detail::frac01(4.0L * golden().value) / 2.0L + 0.5L;
  const ThetaRhoReport rep =
      theta_rho_consistency(kAmo2, golden(), theta, -0.24788604);
  REQUIRE(rep.eigen_residual < 1e-8);
  REQUIRE(rep.label_2theta.labeled);
  REQUIRE(rep.label_2rho.labeled);
  REQUIRE(std::labs(rep.label_2theta.k) == 4);
  REQUIRE(std::labs(rep.label_2rho.k) == 4);
  REQUIRE(rep.consistent);
  REQUIRE(rep.resonance_sets_match);
}

TEST_CASE("theta_rho_consistency agrees on a generic phase") {
  const real theta = 0.137L;
  const ThetaRhoReport rep =
      theta_rho_consistency(kAmo2, golden(), theta, 3.07237601);
  REQUIRE(rep.eigen_residual < 1e-9);
  REQUIRE_FALSE(rep.label_2theta.labeled);
  REQUIRE_FALSE(rep.label_2rho.labeled);
  REQUIRE(rep.consistent);
  REQUIRE(rep.resonance_sets_match);
  // The fibered rotation number reproduces the phase of the localized state.
  REQUIRE(detail::circle_dist(rep.rho, 0.137) < 1e-3);
}
