#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "ehm/cocycle.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"
#include "ehm/spectral.hpp"

using namespace ehm;

namespace {

const CouplingTriple kAmo2{0.0, 2.0, 0.0};
const CouplingTriple kEhm{0.1, 2.0, 0.3};

}  // namespace

TEST_CASE("spectrum_rational rejects non-reduced fractions") {
  CHECK_THROWS_AS(spectrum_rational(kAmo2, 2, 4), RationalInput);
  CHECK_THROWS_AS(spectrum_rational(kAmo2, 0, 2), RationalInput);
  CHECK_THROWS_AS(spectrum_rational(kAmo2, 1, 0), RationalInput);
  CHECK_NOTHROW(spectrum_rational(kAmo2, 0, 1, 32, 1e-4));
}

TEST_CASE("spectrum_rational q=1 reproduces the constant-frequency envelope") {
  const CouplingTriple lam{0.3, 1.1, 0.2};
  const auto S = spectrum_rational(lam, 0, 1, 512, 1e-9);
  REQUIRE(S.bands.size() == 1);

  // at q = 1 the band is the closure of [v(th) - 2|c(th)|, v(th) + 2|c(th)|]
  const TrigPoly cp = c_poly(lam, 0.0);
  double lo = 1e300, hi = -1e300;
  for (int j = 0; j < 20000; ++j) {
    const double th = j / 20000.0;
    const double v = 2.0 * std::cos(kTwoPi * th);
    const double w = std::abs(cp(th));
    lo = std::min(lo, v - 2.0 * w);
    hi = std::max(hi, v + 2.0 * w);
  }
  CHECK(std::abs(S.bands[0].lo - lo) < 1e-3);
  CHECK(std::abs(S.bands[0].hi - hi) < 1e-3);
}

TEST_CASE("spectrum_rational at alpha = 1/2 gives two symmetric bands") {
  const auto S = spectrum_rational(kAmo2, 1, 2, 256, 1e-8);
  REQUIRE(S.bands.size() == 2);

  // closed form: |trace| <= 2 iff v0^2 <= E^2 <= v0^2 + 16 with
  // v0 = 2 cos 2 pi theta, so the outer edges sit at +-sqrt(20)
  CHECK(std::abs(S.bands[1].hi - std::sqrt(20.0)) < 1e-3);
  CHECK(std::abs(S.bands[0].lo + std::sqrt(20.0)) < 1e-3);
  // symmetric about zero, separated by a small sampling-limited gap
  CHECK(std::abs(S.bands[0].lo + S.bands[1].hi) < 1e-6);
  CHECK(std::abs(S.bands[0].hi + S.bands[1].lo) < 1e-6);
  CHECK(S.bands[0].hi < 0.0);
  CHECK(S.bands[1].lo > 0.0);
  CHECK(S.bands[0].hi > -0.06);

  // dense finite sections at sampled phases fill the bands
  double top = -1e300, bot = 1e300;
  for (int j = 0; j < 16; ++j) {
    const double th = (j * 16 + 0.5) / (256.0 * 2.0);
    const auto ev = section_all_values_fast(build_section(kAmo2, 0.5, th, 400, -200));
    top = std::max(top, ev.back());
    bot = std::min(bot, ev.front());
  }
  CHECK(std::abs(top - S.bands[1].hi) < 2.0 * S.e_grid_step + 1e-3);
  CHECK(std::abs(bot - S.bands[0].lo) < 2.0 * S.e_grid_step + 1e-3);
}

TEST_CASE("spectrum_rational band count stays within q and edges match sections") {
  const long pq[][2] = {{0, 1}, {1, 2}, {1, 3}, {2, 5}, {3, 8}, {5, 13}};
  for (auto [p, q] : pq) {
    const auto S = spectrum_rational(kEhm, p, q, 96, 1e-8);
    INFO("p/q = " << p << "/" << q);
    REQUIRE(!S.bands.empty());
    CHECK((long)S.bands.size() <= q);
    for (std::size_t i = 1; i < S.bands.size(); ++i)
      CHECK(S.bands[i].lo > S.bands[i - 1].hi);

    // extreme finite-section eigenvalues vs the outer band edges
    const double alpha = double(p) / double(q);
    double top = -1e300, bot = 1e300;
    for (int j = 0; j < 12; ++j) {
      const double th = (j * 8 + 0.5) / (96.0 * q);
      const auto ev = section_all_values_fast(build_section(kEhm, alpha, th, 600, -300));
      top = std::max(top, ev.back());
      bot = std::min(bot, ev.front());
    }
    CHECK(std::abs(top - S.bands.back().hi) < 2.0 * S.e_grid_step + 2e-3);
    CHECK(std::abs(bot - S.bands.front().lo) < 2.0 * S.e_grid_step + 2e-3);
  }
}

TEST_CASE("ids_counting endpoints, monotonicity, determinism") {
  const auto grid = linspace(-7.0, 7.0, 281);
  const Irrational g = golden_mean();
  const auto c1 = ids_counting(kAmo2, g.value, grid, 300, 8, 1);
  REQUIRE(c1.e.size() == grid.size());

  CHECK(c1.n.front() == 0.0);  // below the hull
  CHECK(c1.n.back() == 1.0);   // above the hull
  for (std::size_t i = 1; i < c1.n.size(); ++i) CHECK(c1.n[i] >= c1.n[i - 1]);
  for (double x : c1.n) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
  }

  const auto c2 = ids_counting(kAmo2, g.value, grid, 300, 8, 1);
  for (std::size_t i = 0; i < c1.n.size(); ++i) CHECK(c1.n[i] == c2.n[i]);

  CHECK_THROWS_AS(ids_counting(kAmo2, g.value, grid, 90, 8, 1), std::invalid_argument);
}

TEST_CASE("ids_counting matches the rotation-number identity") {
  const Irrational g = golden_mean();
  const double energies[] = {-3.5, -2.0, -1.0, 0.5, 1.5, 3.0};
  const auto curve = ids_counting(
      kAmo2, g.value, std::vector<double>(std::begin(energies), std::end(energies)),
      600, 24, 0);
  for (std::size_t i = 0; i < curve.e.size(); ++i) {
    const auto map = transfer(kAmo2, g, curve.e[i], TransferVariant::ATilde);
    const double rho = rotation_number(map, 60000, 3);
    INFO("E = " << curve.e[i]);
    CHECK(std::abs(curve.n[i] - (1.0 - 2.0 * rho)) < 0.02);
  }
}

TEST_CASE("detect_gaps on a synthetic staircase") {
  // one flat step of width 0.3 at level 0.4
  const int n = 1001;
  IDSCurve c;
  c.e = linspace(0.0, 1.0, n);
  c.n.resize(n);
  c.section_size = 1000;
  for (int i = 0; i < n; ++i) {
    const double e = c.e[i];
    if (e < 0.3)
      c.n[i] = 0.4 * e / 0.3;
    else if (e < 0.6)
      c.n[i] = 0.4;
    else
      c.n[i] = 0.4 + 0.6 * (e - 0.6) / 0.4;
  }
  const auto t = detect_gaps(c, -1.0, 0.05);
  REQUIRE(t.entries.size() == 1);
  const auto& ge = t.entries[0];
  CHECK(std::abs(ge.width() - 0.3) < 0.005);
  CHECK(std::abs(ge.e_lo - 0.3) < 0.004);
  CHECK(std::abs(ge.e_hi - 0.6) < 0.004);
  CHECK(std::abs(ge.n_value - 0.4) < 0.003);
}

TEST_CASE("detect_gaps reports nothing on a strictly increasing curve") {
  IDSCurve c;
  c.e = linspace(-1.0, 1.0, 2001);
  c.n.resize(c.e.size());
  c.section_size = 1000;
  for (std::size_t i = 0; i < c.e.size(); ++i) c.n[i] = 0.5 * (c.e[i] + 1.0);
  CHECK(detect_gaps(c, -1.0, 0.01).entries.empty());
}

TEST_CASE("gap_label closed cases and the unlabeled midpoint") {
  const Irrational g = golden_mean();
  const double a = double(g.value - floorl((long double)g.value));

  const auto l1 = gap_label(a, g, 5);
  CHECK(l1.k == 1);
  CHECK(l1.m == 0);
  CHECK(l1.residual < 1e-12);
  CHECK(l1.labeled);

  const auto l2 = gap_label(1.0, g, 5);
  CHECK(l2.k == 0);
  CHECK(l2.m == 1);
  CHECK(l2.residual < 1e-12);
  CHECK(l2.labeled);

  const auto l3 = gap_label(0.5, g, 5);
  CHECK(l3.residual > 0.01);
  CHECK(!l3.labeled);
}

TEST_CASE("detected plateaus label within the frequency module") {
  const Irrational g = golden_mean();
  const auto grid = linspace(-6.5, 6.5, 2001);
  const auto curve = ids_counting(kAmo2, g.value, grid, 1000, 12, 0);
  auto table = detect_gaps(curve, -1.0, 0.02);
  REQUIRE(!table.entries.empty());
  label_gaps(table, g, 10);
  bool saw_k1 = false;
  for (const auto& ge : table.entries) {
    INFO("plateau at N = " << ge.n_value);
    CHECK(ge.labeled);
    CHECK(ge.label_residual <= 5e-3);
    if (std::labs(ge.k) == 1) saw_k1 = true;
  }
  CHECK(saw_k1);
}

TEST_CASE("martini_probe reports the principal gaps open") {
  const Irrational g = golden_mean();
  const auto rep = martini_probe(kAmo2, g, 2, {400, 800}, 1e-3, 16);
  REQUIRE(rep.entries.size() == 4);
  CHECK(!rep.beta_warning);
  for (const auto& e : rep.entries) {
    INFO("k = " << e.k << " n_target = " << e.n_target);
    CHECK(e.status == GapStatus::open);
    REQUIRE(e.widths.size() == 2);
    CHECK(e.widths.back() > 1e-3);
    CHECK(e.e_hi > e.e_lo);
  }

  const auto rep2 = martini_probe(kEhm, g, 1, {400, 800}, 1e-3, 16);
  for (const auto& e : rep2.entries) {
    INFO("k = " << e.k);
    CHECK(e.status == GapStatus::open);
  }
}

TEST_CASE("martini_probe gates the region and reports unresolved honestly") {
  const Irrational g = golden_mean();
  CHECK_THROWS_AS(martini_probe({0.8, 0.5, 0.4}, g, 1, {400, 800}, 1e-3, 8),
                  WrongRegion);
  // a tolerance larger than any gap can never certify openness, and the
  // measured widths are well above the floor, so nothing is closed either
  const auto rep = martini_probe(kAmo2, g, 1, {400, 800}, 10.0, 8);
  for (const auto& e : rep.entries) CHECK(e.status == GapStatus::unresolved);
}

TEST_CASE("duality_check distances are small and shrink with the section") {
  const Irrational g = golden_mean();
  const auto r1 = duality_check(kAmo2, g.value, 600, 12, 0.05);
  CHECK(r1.hausdorff == std::max(r1.dist_forward, r1.dist_backward));
  CHECK(r1.primal_points > 100);
  CHECK(r1.dual_points > 100);
  CHECK(r1.hausdorff < 0.10);

  const auto r2 = duality_check(kAmo2, g.value, 1200, 12, 0.05);
  CHECK(r2.hausdorff < r1.hausdorff + 5e-4);

  CHECK_THROWS_AS(duality_check({0.15, 0.5, 0.05}, g.value, 600, 8), WrongRegion);
}
