#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "ehm/model.hpp"
#include "oracles.hpp"

using namespace ehm;

namespace {

oracles::CMat dense_section(const FiniteSection& s) {
  auto h = oracles::zeros(s.size);
  for (int i = 0; i < s.size; ++i) {
    h[static_cast<size_t>(i)][static_cast<size_t>(i)] = s.diag[static_cast<size_t>(i)];
    if (i + 1 < s.size) {
      h[static_cast<size_t>(i)][static_cast<size_t>(i) + 1] = s.off[static_cast<size_t>(i)];
      h[static_cast<size_t>(i) + 1][static_cast<size_t>(i)] =
          std::conj(s.off[static_cast<size_t>(i)]);
    }
  }
  return h;
}

const Irrational kGolden = golden_mean();

}  // namespace

TEST_CASE("region classification", "[model]") {
  REQUIRE(classify_region({0, 2, 0}) == Region::II);
  REQUIRE(classify_region({0.2, 0.5, 0.1}) == Region::I);
  // (1,1,1): the couplings sum to 2, strictly dominating max(1, l2) = 1.
  REQUIRE(classify_region({1, 1, 1}) == Region::III);
  REQUIRE(classify_region({0.8, 1.5, 0.4}) == Region::II);
  REQUIRE(classify_region({0.8, 0.5, 0.4}) == Region::III);
  REQUIRE(classify_region({0, 1, 0}) == Region::Boundary);
  REQUIRE(classify_region({0.5, 1, 0.2}) == Region::Boundary);
  REQUIRE(classify_region({0.5, 0.5, 0.5}) == Region::Boundary);
  REQUIRE(classify_region({0.1, 2, 0.3}) == Region::II);
}

TEST_CASE("dual arithmetic and involution", "[model]") {
  CouplingTriple lam{0.1, 2, 0.3};
  auto d = dual(lam);
  REQUIRE_THAT(d.l1, Catch::Matchers::WithinAbs(0.15, 1e-15));
  REQUIRE_THAT(d.l2, Catch::Matchers::WithinAbs(0.5, 1e-15));
  REQUIRE_THAT(d.l3, Catch::Matchers::WithinAbs(0.05, 1e-15));
  REQUIRE(classify_region(d) == Region::I);

  auto dd = dual(dual(CouplingTriple{0.37, 1.91, 0.22}));
  REQUIRE_THAT(dd.l1, Catch::Matchers::WithinAbs(0.37, 1e-14));
  REQUIRE_THAT(dd.l2, Catch::Matchers::WithinAbs(1.91, 1e-14));
  REQUIRE_THAT(dd.l3, Catch::Matchers::WithinAbs(0.22, 1e-14));

  auto amo = dual({0, 2, 0});
  REQUIRE(amo.l1 == 0.0);
  REQUIRE(amo.l2 == 0.5);
  REQUIRE(amo.l3 == 0.0);
  REQUIRE(classify_region(amo) == Region::I);
}

TEST_CASE("epsilon1 closed forms", "[model]") {
  REQUIRE_THAT(epsilon1({0, 2, 0}), Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
  double want = std::log((2.0 + std::sqrt(3.88)) / (1.0 + std::sqrt(0.88)));
  REQUIRE_THAT(epsilon1({0.1, 2, 0.3}), Catch::Matchers::WithinAbs(want, 1e-15));
  REQUIRE_THAT(want, Catch::Matchers::WithinAbs(0.7170, 2e-4));
  REQUIRE_THROWS_AS(epsilon1({0.2, 0.5, 0.1}), WrongRegion);
  // lambda2 approaching max(l1+l3, 1) from above drives the value to 0.
  REQUIRE(epsilon1({0.1, 1.0 + 1e-9, 0.3}) < 1e-8);
}

TEST_CASE("epsilon2 closed forms and ordering", "[model]") {
  REQUIRE(std::isinf(epsilon2({0, 2, 0})));
  double want = std::log((2.0 + std::sqrt(3.88)) / 0.6);
  REQUIRE_THAT(epsilon2({0.1, 2, 0.3}), Catch::Matchers::WithinAbs(want, 1e-15));
  REQUIRE_THAT(want, Catch::Matchers::WithinAbs(1.8895, 1e-3));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 50; ++t) {
    CouplingTriple lam{0.7 * u(rng), 1.2 + 2.0 * u(rng), 0.7 * u(rng)};
    if (classify_region(lam) != Region::II) continue;
    REQUIRE(epsilon2(lam) >= epsilon1(lam) - 1e-14);
  }
}

TEST_CASE("eval_symbols basics", "[model]") {
  const double a = kGolden.value_d();
  // AMO: c and abs_c are the constant lambda2 at every z.
  for (cplx z : {cplx(0.3, 0), cplx(0.1, 0.4), cplx(0.9, -1.3)}) {
    auto se = eval_symbols({0, 2, 0}, a, z);
    REQUIRE(std::abs(se.c - cplx(2, 0)) < 1e-14);
    REQUIRE(std::abs(se.c_tilde - cplx(2, 0)) < 1e-14);
    REQUIRE(std::abs(se.abs_c - cplx(2, 0)) < 1e-14);
  }
  // Real phase: c_tilde is the conjugate, abs_c the modulus.
  CouplingTriple lam{0.1, 2, 0.3};
  for (double x : {0.0, 0.21, 0.65, 0.93}) {
    auto se = eval_symbols(lam, a, cplx(x, 0));
    REQUIRE(std::abs(se.c_tilde - std::conj(se.c)) < 1e-14);
    REQUIRE(std::abs(se.abs_c - cplx(std::abs(se.c), 0)) < 1e-14);
    // Independent re-derivation from the three exponential terms.
    cplx w = std::exp(cplx(0, kTwoPi) * cplx(x + a / 2, 0));
    cplx want = lam.l1 * std::conj(w) + lam.l2 + lam.l3 * w;
    REQUIRE(std::abs(se.c - want) < 1e-14);
  }
}

TEST_CASE("abs_c branch: square and quadratic-in-cosine identity", "[model]") {
  const double a = kGolden.value_d();
  CouplingTriple lam{0.1, 2, 0.3};
  for (cplx z : {cplx(0.13, 0.1), cplx(0.4, -0.22), cplx(0.77, 0.05)}) {
    auto se = eval_symbols(lam, a, z);
    REQUIRE(std::abs(se.abs_c * se.abs_c - se.c * se.c_tilde) < 1e-12);
    // c*c_tilde as a quadratic in C = cos 2 pi (z + a/2).
    cplx C = std::cos(kTwoPi * (z + a / 2.0));
    cplx want = (lam.l1 * lam.l1 + lam.l2 * lam.l2 + lam.l3 * lam.l3 -
                 2 * lam.l1 * lam.l3) +
                2 * lam.l2 * (lam.l1 + lam.l3) * C + 4.0 * lam.l1 * lam.l3 * C * C;
    REQUIRE(std::abs(se.c * se.c_tilde - want) < 1e-12);
  }
  // Continuity in the imaginary direction (no branch jump).
  // Branch flips would jump by ~2|prev|; smooth growth stays well under that.
  cplx prev = eval_symbols(lam, a, cplx(0.3, 0.0)).abs_c;
  for (int s = 1; s <= 40; ++s) {
    cplx cur = eval_symbols(lam, a, cplx(0.3, 0.01 * s)).abs_c;
    REQUIRE(std::abs(cur - prev) < 0.25 * std::abs(prev));
    prev = cur;
  }
}

TEST_CASE("eval_symbols rejects symbol zeros", "[model]") {
  // l1 = l3, l2 small: c vanishes on the real axis at some phase.
  // c = l2 + 2 l1 cos 2 pi (x + a/2) = 0 at cos = -l2/(2 l1).
  CouplingTriple lam{0.4, 0.1, 0.4};
  const double a = kGolden.value_d();
  double xa = std::acos(-lam.l2 / (2 * lam.l1)) / kTwoPi - a / 2;
  REQUIRE_THROWS_AS(eval_symbols(lam, a, cplx(xa, 0)), SingularSymbol);
}

TEST_CASE("apply_h reduces to almost Mathieu at (0,1,0)", "[model]") {
  const real a = kGolden.value;
  const real th = 0.2345L;
  SeqWindow u;
  u.n0 = -2;
  u.v = {cplx(0.3, 0.1), cplx(-1, 0.5), cplx(2, 0), cplx(0.1, -0.7), cplx(0.9, 0.2)};
  auto hu = apply_h({0, 1, 0}, a, th, u);
  REQUIRE(hu.n0 == -3);
  for (long n = hu.n0; n < hu.n_end(); ++n) {
    cplx want = u.at(n + 1) + u.at(n - 1) +
                2.0 * std::cos(kTwoPi * phase_at(th, a, n)) * u.at(n);
    REQUIRE(std::abs(hu.at(n) - want) < 1e-14);
  }
}

TEST_CASE("apply_h delta support and Hermitian symmetry", "[model]") {
  const real a = kGolden.value;
  const real th = 0.11L;
  CouplingTriple lam{0.1, 2, 0.3};
  SeqWindow delta;
  delta.n0 = 0;
  delta.v = {cplx(1, 0)};
  auto hd = apply_h(lam, a, th, delta);
  REQUIRE(hd.n0 == -1);
  REQUIRE(hd.v.size() == 3);
  for (long n = -1; n <= 1; ++n) REQUIRE(std::abs(hd.at(n)) > 0);

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ur(-1, 1);
  for (int t = 0; t < 20; ++t) {
    SeqWindow u, w;
    u.n0 = -3;
    w.n0 = -5;
    u.v.resize(9);
    w.v.resize(13);
    for (auto& x : u.v) x = cplx(ur(rng), ur(rng));
    for (auto& x : w.v) x = cplx(ur(rng), ur(rng));
    auto hu = apply_h(lam, a, th, u);
    auto hw = apply_h(lam, a, th, w);
    cplx lhs(0, 0), rhs(0, 0);
    for (long n = -10; n <= 10; ++n) {
      lhs += hu.at(n) * std::conj(w.at(n));
      rhs += u.at(n) * std::conj(hw.at(n));
    }
    REQUIRE(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("det_P small cases against dense determinants", "[model]") {
  const real a = kGolden.value;
  CouplingTriple lam{0.1, 2, 0.3};
  const double E = 0.73;
  const real th = 0.29L;

  auto P = det_P(lam, a, th, E, 2);
  REQUIRE(P[0] == 1.0);
  REQUIRE_THAT(P[1], Catch::Matchers::WithinAbs(E - potential_at(th, a, 0), 1e-14));
  auto sec2 = build_section(lam, a, th, 2);
  double want2 = (E - sec2.diag[0]) * (E - sec2.diag[1]) - sec2.off_abs2[0];
  REQUIRE_THAT(P[2], Catch::Matchers::WithinAbs(want2, 1e-13));

  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    CouplingTriple l{0.5 * std::abs(u(rng)), 0.3 + 2 * std::abs(u(rng)),
                     0.5 * std::abs(u(rng))};
    real th_t = static_cast<real>(0.5 * (u(rng) + 1));
    double E_t = 4 * u(rng);
    int k = 1 + static_cast<int>(4.5 * std::abs(u(rng)) + 4.5 * std::abs(u(rng)));
    if (k > 10) k = 10;
    auto Pk = det_P(l, a, th_t, E_t, k);
    auto sec = build_section(l, a, th_t, k);
    auto em = dense_section(sec);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j)
        em[static_cast<size_t>(i)][static_cast<size_t>(j)] =
            (i == j ? cplx(E_t, 0) : cplx(0, 0)) -
            em[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    cplx dd = oracles::det_lu(em);
    REQUIRE(std::abs(dd.imag()) < 1e-9 * std::max(1.0, std::abs(dd)));
    double denom = std::max(1.0, std::abs(dd));
    REQUIRE(std::abs(Pk[static_cast<size_t>(k)] - dd.real()) / denom < 1e-8);
  }
}

TEST_CASE("P sequence reproduces the transfer product identity", "[model]") {
  // D(theta) = [[E - v(theta), -c_tilde(theta-a)], [c(theta), 0]];
  // the ordered product D(theta+(k-1)a)...D(theta) has entries made of P's.
  const real a = kGolden.value;
  const double ad = kGolden.value_d();
  CouplingTriple lam{0.1, 2, 0.3};
  const double E = -0.42;
  const real th = 0.37L;
  const TrigPoly cp = c_poly(lam, ad);
  const TrigPoly ctp = c_tilde_poly(lam, ad);

  auto D_at = [&](long n) {
    double x = phase_at(th, a, n);
    double xm = phase_at(th, a, n - 1);
    std::array<cplx, 4> m = {cplx(E - 2 * std::cos(kTwoPi * x), 0), -ctp(xm),
                             cp(x), cplx(0, 0)};
    return m;
  };
  auto mul = [](const std::array<cplx, 4>& A, const std::array<cplx, 4>& B) {
    return std::array<cplx, 4>{A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3],
                               A[2] * B[0] + A[3] * B[2], A[2] * B[1] + A[3] * B[3]};
  };

  for (int k = 1; k <= 10; ++k) {
    std::array<cplx, 4> prod = D_at(0);
    for (long n = 1; n < k; ++n) prod = mul(D_at(n), prod);
    auto P0 = det_P(lam, a, th, E, k);
    auto P1 = det_P(lam, a, th + a, E, k);  // base point shifted by alpha
    cplx e00 = cplx(P0[static_cast<size_t>(k)], 0);
    cplx e01 = -ctp(phase_at(th, a, -1)) * P1[static_cast<size_t>(k) - 1];
    cplx e10 = cp(phase_at(th, a, k - 1)) * P0[static_cast<size_t>(k) - 1];
    cplx e11 = k >= 2 ? -cp(phase_at(th, a, k - 1)) * ctp(phase_at(th, a, -1)) *
                            P1[static_cast<size_t>(k) - 2]
                      : cplx(0, 0);
    double scale = std::max({std::abs(prod[0]), std::abs(prod[1]),
                             std::abs(prod[2]), std::abs(prod[3]), 1.0});
    REQUIRE(std::abs(prod[0] - e00) / scale < 1e-8);
    REQUIRE(std::abs(prod[1] - e01) / scale < 1e-8);
    REQUIRE(std::abs(prod[2] - e10) / scale < 1e-8);
    REQUIRE(std::abs(prod[3] - e11) / scale < 1e-8);
  }
}

TEST_CASE("P_k is even about its window midpoint", "[model]") {
  const real a = kGolden.value;
  CouplingTriple lam{0.3, 1.7, 0.2};
  const double E = 1.13;
  for (int k : {3, 6, 9}) {
    for (double t0 : {0.05, 0.31, 0.62}) {
      real th = static_cast<real>(t0);
      real th_ref = -th - static_cast<real>(k - 1) * a;
      auto P = det_P(lam, a, th, E, k);
      auto Pr = det_P(lam, a, th_ref, E, k);
      REQUIRE_THAT(P[static_cast<size_t>(k)],
                   Catch::Matchers::WithinAbs(Pr[static_cast<size_t>(k)], 1e-9));
    }
  }
}

TEST_CASE("Sturm counting: bounds, monotonicity, dense agreement", "[model]") {
  const real a = kGolden.value;
  CouplingTriple lam{0.1, 2, 0.3};
  auto sec = build_section(lam, a, 0.4L, 12);
  double lo = sec.gersh_lo(), hi = sec.gersh_hi();
  REQUIRE(sturm_count_below(sec, lo - 0.5) == 0);
  REQUIRE(sturm_count_below(sec, hi + 0.5) == 12);
  int prev = 0;
  for (double E = lo; E <= hi; E += 0.05) {
    int c = sturm_count_below(sec, E);
    REQUIRE(c >= prev);
    prev = c;
  }
  auto dense_vals = oracles::eig_hermitian(dense_section(sec));
  for (double E : {-3.0, -1.0, 0.0, 0.7, 2.2, 4.0}) {
    int want = 0;
    for (double v : dense_vals)
      if (v < E) ++want;
    REQUIRE(sturm_count_below(sec, E) == want);
  }
}

TEST_CASE("all eigenvalue routes agree with the dense oracle", "[model]") {
  const real a = kGolden.value;
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 8; ++t) {
    CouplingTriple lam{0.6 * u(rng), 0.4 + 2 * u(rng), 0.6 * u(rng)};
    real th = static_cast<real>(u(rng));
    auto sec = build_section(lam, a, th, 8);
    auto bis = section_all_values(sec);
    auto fast = section_all_values_fast(sec);
    auto dense_vals = oracles::eig_hermitian(dense_section(sec));
    for (int j = 0; j < 8; ++j) {
      REQUIRE_THAT(bis[static_cast<size_t>(j)],
                   Catch::Matchers::WithinAbs(dense_vals[static_cast<size_t>(j)], 1e-8));
      REQUIRE_THAT(fast[static_cast<size_t>(j)],
                   Catch::Matchers::WithinAbs(dense_vals[static_cast<size_t>(j)], 1e-8));
    }
  }
}

TEST_CASE("fast eigenvalues match bisection on larger sections", "[model]") {
  const real a = kGolden.value;
  CouplingTriple lam{0.15, 0.5, 0.05};
  auto sec = build_section(lam, a, 0.123L, 200);
  auto fast = section_all_values_fast(sec);
  REQUIRE(fast.size() == 200);
  // Spot-check a handful of indices against the bisection reference.
  for (int j : {0, 1, 57, 100, 150, 198, 199}) {
    double ref = section_eigenvalue_bisect(sec, j);
    REQUIRE_THAT(fast[static_cast<size_t>(j)], Catch::Matchers::WithinAbs(ref, 1e-9));
  }
  // Counting consistency at random energies.
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(sec.gersh_lo(), sec.gersh_hi());
  for (int t = 0; t < 25; ++t) {
    double E = u(rng);
    int want = 0;
    for (double v : fast)
      if (v < E) ++want;
    REQUIRE(sturm_count_below(sec, E) == want);
  }
}

TEST_CASE("eigenpairs reach the residual contract", "[model]") {
  const real a = kGolden.value;
  CouplingTriple lam{0.1, 2, 0.3};
  auto sec = build_section(lam, a, 0.377L, 64);
  for (int j : {0, 10, 31, 63}) {
    double v = section_eigenvalue_bisect(sec, j);
    auto ep = section_eigenpair(sec, v);
    REQUIRE(ep.residual <= 1e-8);
    REQUIRE_THAT(ep.value, Catch::Matchers::WithinAbs(v, 1e-7));
    double nrm = 0;
    for (auto& x : ep.vec) nrm += std::norm(x);
    REQUIRE_THAT(nrm, Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
}
