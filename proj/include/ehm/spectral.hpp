#pragma once

// Spectral estimation. Rational-frequency band spectra via the periodic
// discriminant, integrated density of states by averaged Sturm counts on
// finite sections, plateau (gap) detection and labeling, a gap-openness
// probe, and the comparison between a model's spectrum and its scaled dual.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ehm/errors.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"

namespace ehm {

// |E| <= 2 + 2(l1+l2+l3) contains every finite-section eigenvalue
// (Gershgorin) and hence the whole spectrum.
inline double spectral_hull_radius(const CouplingTriple& lam) {
  return 2.0 + 2.0 * (lam.l1 + lam.l2 + lam.l3);
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return v;
}

// Deterministic equidistributed phase samples (golden-ratio Kronecker
// sequence). The set is seed-independent; callers needing tie-breaking
// perturb their own probe quantities instead.
inline std::vector<double> kronecker_thetas(int n) {
  const double g = 0.61803398874989484820;
  std::vector<double> t(n);
  double x = 0.5 * g;
  for (int j = 0; j < n; ++j) {
    t[j] = x;
    x += g;
    if (x >= 1.0) x -= 1.0;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Rational-frequency spectrum via the period-q transfer-matrix trace.

struct Band {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
};

struct SpectrumApprox {
  long p = 0, q = 1;
  std::vector<Band> bands;  // ascending, disjoint
  double e_lo = 0.0, e_hi = 0.0;
  double e_grid_step = 0.0;    // coarse scan step used to bracket edges
  double e_resolution = 0.0;   // bisection tolerance on each edge
  int theta_grid = 0;
};

namespace detail {

// Per-theta orbit data for the trace of the normalized q-step transfer
// product: potential values, |c| along the orbit, and log of the product
// of |c| (the normalizing denominator; each |c| enters two square roots
// around the cycle).
struct RationalOrbit {
  std::vector<double> v, w;
  double log_denom = 0.0;
};

// |trace| of the normalized q-step product at energy E, with mid-product
// rescaling so large q and far E cannot overflow.
inline double abs_trace_normalized(const RationalOrbit& o, double E) {
  const long q = (long)o.v.size();
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
  double log_scale = 0.0;
  for (long i = 0; i < q; ++i) {
    const double a = E - o.v[i];
    const double b = o.w[(i + q - 1) % q];
    const double wi = o.w[i];
    const double n00 = a * m00 - b * m10;
    const double n01 = a * m01 - b * m11;
    const double n10 = wi * m00;
    const double n11 = wi * m01;
    m00 = n00; m01 = n01; m10 = n10; m11 = n11;
    double mx = std::max(std::max(std::abs(m00), std::abs(m01)),
                         std::max(std::abs(m10), std::abs(m11)));
    if (mx > 1e150) {
      m00 /= mx; m01 /= mx; m10 /= mx; m11 /= mx;
      log_scale += std::log(mx);
    }
  }
  const double tr = m00 + m11;
  if (tr == 0.0) return 0.0;
  double lg = std::log(std::abs(tr)) + log_scale - o.log_denom;
  if (lg > 690.0) return 1e300;
  return std::exp(lg);
}

}  // namespace detail

inline SpectrumApprox spectrum_rational(const CouplingTriple& lam, long p, long q,
                                        int theta_grid = 128,
                                        double e_resolution = 1e-6) {
  lam.validate();
  if (q < 1) throw RationalInput("spectrum_rational: q must be >= 1");
  if (std::gcd(std::abs(p), q) != 1)
    throw RationalInput("spectrum_rational: p/q must be in lowest terms");
  if (theta_grid < 1) throw std::invalid_argument("spectrum_rational: theta_grid >= 1");
  if (e_resolution <= 0) throw std::invalid_argument("spectrum_rational: e_resolution > 0");

  const double alpha = double(p) / double(q);
  const TrigPoly cp = c_poly(lam, alpha);

  // The trace is invariant under theta -> theta + 1/q (cyclic shift of the
  // orbit), so sampling one fundamental cell suffices. The half-step offset
  // keeps symmetry points, where neighboring bands can touch to machine
  // precision, strictly between samples.
  std::vector<detail::RationalOrbit> orbits(theta_grid);
  for (int j = 0; j < theta_grid; ++j) {
    const double th = (j + 0.5) / (double(theta_grid) * double(q));
    auto& o = orbits[j];
    o.v.resize(q);
    o.w.resize(q);
    o.log_denom = 0.0;
    for (long i = 0; i < q; ++i) {
      const double x = phase_at(th, alpha, i);
      o.v[i] = 2.0 * std::cos(kTwoPi * x);
      const double w = std::abs(cp(x));
      if (w < 1e-12)
        throw SingularSymbol("spectrum_rational: off-diagonal symbol vanishes at a sampled phase");
      o.w[i] = w;
      o.log_denom += std::log(w);
    }
  }

  // E is kept iff |trace| <= 2 for some sampled theta.
  auto g = [&](double E) {
    double best = 1e300;
    for (const auto& o : orbits) best = std::min(best, detail::abs_trace_normalized(o, E));
    return best - 2.0;
  };

  const double R = spectral_hull_radius(lam) + 1.0;
  const int n_e = std::max(4096, 1024 * int(std::min<long>(q, 64)));
  const double step = 2.0 * R / double(n_e - 1);

  auto bisect_edge = [&](double a, double b, bool lower) {
    // lower edge: g(a) > 0, g(b) <= 0; upper edge: g(a) <= 0, g(b) > 0
    for (int it = 0; it < 200 && (b - a) > e_resolution; ++it) {
      const double mid = 0.5 * (a + b);
      const bool in = g(mid) <= 0.0;
      if (lower) { (in ? b : a) = mid; } else { (in ? a : b) = mid; }
    }
    return 0.5 * (a + b);
  };

  SpectrumApprox out;
  out.p = p; out.q = q;
  out.e_lo = -R; out.e_hi = R;
  out.e_grid_step = step;
  out.e_resolution = e_resolution;
  out.theta_grid = theta_grid;

  double prev_e = -R;
  bool prev_in = g(prev_e) <= 0.0;
  double open_lo = prev_in ? -R : 0.0;
  bool inside = prev_in;
  for (int k = 1; k < n_e; ++k) {
    const double e = -R + step * k;
    const bool in = g(e) <= 0.0;
    if (in && !inside) {
      open_lo = bisect_edge(prev_e, e, true);
      inside = true;
    } else if (!in && inside) {
      const double hi = bisect_edge(prev_e, e, false);
      out.bands.push_back({open_lo, hi});
      inside = false;
    }
    prev_e = e;
  }
  if (inside) out.bands.push_back({open_lo, R});
  return out;
}

// ---------------------------------------------------------------------------
// Integrated density of states by theta-averaged Sturm counting.

struct IDSCurve {
  std::vector<double> e;  // ascending energies
  std::vector<double> n;  // N(e), nondecreasing, in [0,1]
  int section_size = 0;
  int theta_samples = 0;
  std::uint64_t seed = 0;
};

inline IDSCurve ids_counting(const CouplingTriple& lam, real alpha,
                             std::vector<double> e_grid, int section_size,
                             int theta_samples, std::uint64_t seed = 0) {
  lam.validate();
  if (section_size < 100)
    throw std::invalid_argument("ids_counting: section_size must be >= 100");
  if (theta_samples < 1)
    throw std::invalid_argument("ids_counting: theta_samples must be >= 1");
  if (e_grid.empty()) throw std::invalid_argument("ids_counting: empty energy grid");
  std::sort(e_grid.begin(), e_grid.end());

  // Sturm counts are ambiguous when a probe energy collides with a section
  // eigenvalue; the seed shifts every probe by a sub-resolution offset to
  // break such ties deterministically. The theta set is seed-independent.
  const double tie = 1e-13 * double(seed % 997);

  IDSCurve out;
  out.e = e_grid;
  out.n.assign(e_grid.size(), 0.0);
  out.section_size = section_size;
  out.theta_samples = theta_samples;
  out.seed = seed;

  const long off = -(long)(section_size / 2);
  for (double th : kronecker_thetas(theta_samples)) {
    const FiniteSection s = build_section(lam, alpha, th, section_size, off);
    for (std::size_t i = 0; i < e_grid.size(); ++i)
      out.n[i] += double(sturm_count_below(s, e_grid[i] + tie));
  }
  const double scale = 1.0 / (double(theta_samples) * double(section_size));
  for (auto& x : out.n) x *= scale;
  // counts are monotone per section; this only guards float summation order
  for (std::size_t i = 1; i < out.n.size(); ++i)
    out.n[i] = std::max(out.n[i], out.n[i - 1]);
  return out;
}

// ---------------------------------------------------------------------------
// Plateau (gap) detection and labeling.

struct GapEntry {
  double e_lo = 0.0, e_hi = 0.0;
  double n_value = 0.0;  // staircase level on the plateau
  long k = 0, m = 0;
  double label_residual = -1.0;  // negative until labeled
  bool labeled = false;
  double width() const { return e_hi - e_lo; }
};

struct GapTable {
  std::vector<GapEntry> entries;
  double plateau_tol = 0.0;
  double min_width = 0.0;
};

namespace detail {

// Maximal index windows [i, j], j > i, on a nondecreasing sequence with
// n[j] - n[i] <= tol.
inline std::vector<std::pair<std::size_t, std::size_t>> plateau_windows(
    const std::vector<double>& n, double tol) {
  std::vector<std::pair<std::size_t, std::size_t>> w;
  const std::size_t N = n.size();
  std::size_t j = 1;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (j < i + 1) j = i + 1;
    while (j + 1 < N && n[j + 1] - n[i] <= tol) ++j;
    if (n[j] - n[i] > tol) continue;               // not even two points fit
    if (i > 0 && n[j] - n[i - 1] <= tol) continue;  // not left-maximal
    if (!w.empty() && w.back().second == j) continue;
    w.emplace_back(i, j);
  }
  return w;
}

}  // namespace detail

inline GapTable detect_gaps(const IDSCurve& curve, double plateau_tol = -1.0,
                            double min_width = 0.01) {
  if (curve.e.size() < 4 || curve.e.size() != curve.n.size())
    throw std::invalid_argument("detect_gaps: curve needs >= 4 aligned points");
  for (std::size_t i = 1; i < curve.n.size(); ++i)
    if (curve.n[i] + 1e-12 < curve.n[i - 1])
      throw std::invalid_argument("detect_gaps: curve must be nondecreasing");

  const double tol =
      plateau_tol > 0 ? plateau_tol : 2.0 / std::max(1, curve.section_size);

  const auto full = detail::plateau_windows(curve.n, tol);

  // A reported plateau must already be visible on the half-resolution
  // subsample, i.e. it persists when the energy resolution doubles.
  std::vector<double> nh, eh;
  nh.reserve(curve.n.size() / 2 + 1);
  for (std::size_t i = 0; i < curve.n.size(); i += 2) {
    nh.push_back(curve.n[i]);
    eh.push_back(curve.e[i]);
  }
  const auto half = detail::plateau_windows(nh, tol);

  // One plateau produces several maximal windows staggered by a grid step on
  // the flanking ramps; windows overlapping by more than half the shorter one
  // describe the same plateau, and the widest member represents the cluster.
  // Distinct gaps are separated by bands rising by >> tol, which breaks the
  // chain of overlaps.
  std::vector<std::pair<std::size_t, std::size_t>> reps;
  {
    std::pair<std::size_t, std::size_t> prev{0, 0};
    bool have = false;
    for (auto wn : full) {
      if (have) {
        const double ov = std::min(curve.e[wn.second], curve.e[prev.second]) -
                          std::max(curve.e[wn.first], curve.e[prev.first]);
        const double shorter =
            std::min(curve.e[wn.second] - curve.e[wn.first],
                     curve.e[prev.second] - curve.e[prev.first]);
        if (ov > 0.5 * shorter) {
          auto& rep = reps.back();
          if (curve.e[wn.second] - curve.e[wn.first] >
              curve.e[rep.second] - curve.e[rep.first])
            rep = wn;
          prev = wn;
          continue;
        }
      }
      reps.push_back(wn);
      prev = wn;
      have = true;
    }
  }

  GapTable t;
  t.plateau_tol = tol;
  t.min_width = min_width;
  for (auto [i, j] : reps) {
    const double lo = curve.e[i], hi = curve.e[j];
    if (hi - lo < min_width) continue;
    bool persistent = false;
    for (auto [a, b] : half) {
      const double ov = std::min(hi, eh[b]) - std::max(lo, eh[a]);
      if (ov > 0.5 * std::min(hi - lo, eh[b] - eh[a])) {
        persistent = true;
        break;
      }
    }
    if (!persistent) continue;
    GapEntry ge;
    ge.e_lo = lo;
    ge.e_hi = hi;
    ge.n_value = 0.5 * (curve.n[i] + curve.n[j]);
    t.entries.push_back(ge);
  }
  return t;
}

struct GapLabel {
  long k = 0, m = 0;
  double residual = 0.0;
  bool labeled = false;
};

// Best integer pair (k, m), |k| <= k_max, minimizing |n_value - k*alpha - m|.
// Ties prefer smaller |k|, then positive k. The residual is always reported;
// `labeled` only reflects the acceptance threshold.
inline GapLabel gap_label(double n_value, const Irrational& a, int k_max,
                          double accept_tol = 5e-3) {
  if (n_value < -1e-9 || n_value > 1.0 + 1e-9)
    throw std::invalid_argument("gap_label: n_value must lie in [0,1]");
  if (k_max < 0) throw std::invalid_argument("gap_label: k_max must be >= 0");
  GapLabel best;
  best.residual = 1e300;
  for (int ak = 0; ak <= k_max; ++ak) {
    for (int sgn : {+1, -1}) {
      if (ak == 0 && sgn < 0) continue;
      const long k = sgn * (long)ak;
      const real t = (real)n_value - (real)k * a.value;
      const long m = (long)llroundl((long double)t);
      const double r = std::abs(double(t - (real)m));
      if (r < best.residual - 1e-12) {
        best.k = k;
        best.m = m;
        best.residual = r;
      }
    }
  }
  best.labeled = best.residual <= accept_tol;
  return best;
}

inline void label_gaps(GapTable& t, const Irrational& a, int k_max,
                       double accept_tol = 5e-3) {
  for (auto& ge : t.entries) {
    const GapLabel l = gap_label(ge.n_value, a, k_max, accept_tol);
    ge.k = l.k;
    ge.m = l.m;
    ge.label_residual = l.residual;
    ge.labeled = l.labeled;
  }
}

// ---------------------------------------------------------------------------
// Gap-openness probe.

namespace detail {

// Eigenvalue tables over a theta sample set, exposing the averaged counting
// function and its monotone level inverse.
struct IdsSampler {
  int section_size = 0;
  double e_lo = 0.0, e_hi = 0.0;
  std::vector<std::vector<double>> eigs;

  static IdsSampler build(const CouplingTriple& lam, real alpha, int size,
                          int theta_samples, double energy_scale = 1.0) {
    IdsSampler s;
    s.section_size = size;
    const long off = -(long)(size / 2);
    for (double th : kronecker_thetas(theta_samples)) {
      const FiniteSection sec = build_section(lam, alpha, th, size, off);
      std::vector<double> ev = section_all_values_fast(sec);
      if (energy_scale != 1.0)
        for (double& x : ev) x *= energy_scale;
      s.eigs.push_back(std::move(ev));
    }
    double lo = 1e300, hi = -1e300;
    for (const auto& v : s.eigs) {
      lo = std::min(lo, v.front());
      hi = std::max(hi, v.back());
    }
    s.e_lo = lo - 1.0;
    s.e_hi = hi + 1.0;
    return s;
  }

  double nbar(double E) const {
    double acc = 0.0;
    for (const auto& v : eigs)
      acc += double(std::upper_bound(v.begin(), v.end(), E) - v.begin());
    return acc / (double(eigs.size()) * double(section_size));
  }

  // smallest E (to bisection resolution) with nbar(E) >= nu
  double e_at_level(double nu) const {
    double lo = e_lo, hi = e_hi;
    for (int it = 0; it < 80 && hi - lo > 1e-12 * (e_hi - e_lo); ++it) {
      const double mid = 0.5 * (lo + hi);
      (nbar(mid) >= nu ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace detail

enum class GapStatus { open, closed_at_resolution, unresolved };

inline const char* gap_status_name(GapStatus s) {
  switch (s) {
    case GapStatus::open: return "open";
    case GapStatus::closed_at_resolution: return "closed_at_resolution";
    default: return "unresolved";
  }
}

struct MartiniEntry {
  long k = 0;
  double n_target = 0.0;  // frac(k * alpha)
  GapStatus status = GapStatus::unresolved;
  std::vector<double> widths;  // smear-corrected width per probed size
  double smear_fine = 0.0;     // first-order smear at the largest size
  double e_lo = 0.0, e_hi = 0.0;  // gap edge estimates at the largest size
};

struct MartiniReport {
  std::vector<MartiniEntry> entries;
  std::vector<int> sizes;
  double tol = 0.0;
  int theta_samples = 0;
  double beta = 0.0;
  bool beta_warning = false;
  std::string note;
};

// Probes, for each label k with 0 < |k| <= k_max, whether the gap at IDS
// level frac(k*alpha) is open at the probed resolutions. The verdict is a
// resolution-limited measurement, never a proof: `open` needs the corrected
// width to clear both the tolerance and the measurement floor at the finest
// size and to be stable across the size doubling.
inline MartiniReport martini_probe(const CouplingTriple& lam, const Irrational& alpha,
                                   int k_max, std::vector<int> sizes = {1000, 2000},
                                   double tol = 1e-3, int theta_samples = 24) {
  lam.validate();
  const Region r = classify_region(lam);
  if (r != Region::I && r != Region::II)
    throw WrongRegion("martini_probe: couplings must lie in region I or II");
  if (k_max < 1) throw std::invalid_argument("martini_probe: k_max must be >= 1");
  if (sizes.size() < 2)
    throw std::invalid_argument("martini_probe: need at least two section sizes");
  std::sort(sizes.begin(), sizes.end());
  if (sizes.front() < 100)
    throw std::invalid_argument("martini_probe: section sizes must be >= 100");

  MartiniReport rep;
  rep.sizes = sizes;
  rep.tol = tol;
  rep.theta_samples = theta_samples;
  // the Liouville proxy only means something on the asymptotic half of the
  // expansion; the small-denominator head is large even at the golden mean
  rep.beta = beta_estimate(alpha, std::max(3, alpha.depth() / 2));
  rep.beta_warning = rep.beta > 0.1;
  rep.note = "openness certified only at the probed resolutions";

  std::vector<detail::IdsSampler> samplers;
  samplers.reserve(sizes.size());
  for (int sz : sizes)
    samplers.push_back(detail::IdsSampler::build(lam, alpha.value, sz, theta_samples));

  const double hull_range = 2.0 * spectral_hull_radius(lam);

  for (int ak = 1; ak <= k_max; ++ak) {
    for (int sgn : {+1, -1}) {
      const long k = sgn * (long)ak;
      const real t = (real)k * alpha.value;
      const double nt = double(t - floorl((long double)t));

      MartiniEntry e;
      e.k = k;
      e.n_target = nt;

      std::vector<double> widths, floors;
      bool probe_ok = true;
      for (std::size_t si = 0; si < samplers.size(); ++si) {
        const auto& S = samplers[si];
        const double eta = 2.0 / double(S.section_size);
        if (nt - 2.0 * eta <= 0.0 || nt + 2.0 * eta >= 1.0) {
          probe_ok = false;  // level too close to the spectral edges
          break;
        }
        const double a1 = S.e_at_level(nt - eta);
        const double b1 = S.e_at_level(nt + eta);
        const double a2 = S.e_at_level(nt - 2.0 * eta);
        const double b2 = S.e_at_level(nt + 2.0 * eta);
        const double w1 = b1 - a1;
        const double smear = (b2 - a2) - w1;  // first-order level-width bias
        widths.push_back(std::max(0.0, w1 - smear));
        floors.push_back(std::max(0.25 * std::abs(smear), 1e-9 * hull_range));
        if (si + 1 == samplers.size()) {
          e.e_lo = a1;
          e.e_hi = b1;
          e.smear_fine = std::abs(smear);
        }
      }

      if (!probe_ok || widths.size() < 2) {
        e.status = GapStatus::unresolved;
        rep.entries.push_back(e);
        continue;
      }

      e.widths = widths;
      const double wf = widths.back();
      const double wc = widths[widths.size() - 2];
      const double floor_f = floors.back();
      const double floor_c = floors[floors.size() - 2];
      const bool stable = wf > 0 && wc > 0 && wf / wc > 0.5 && wf / wc < 2.0;

      if (wf > std::max(tol, 3.0 * floor_f) && wc > 0.5 * tol && stable)
        e.status = GapStatus::open;
      else if (floor_f > tol)
        e.status = GapStatus::unresolved;  // floor swamps the requested tolerance
      else if (wf <= floor_f && wc <= floor_c)
        e.status = GapStatus::closed_at_resolution;
      else
        e.status = GapStatus::unresolved;
      rep.entries.push_back(e);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Duality comparison: spectrum of the model vs l2 times the dual spectrum.

struct DualityReport {
  double dist_forward = 0.0;   // sup over primal cloud of distance to scaled dual cloud
  double dist_backward = 0.0;  // sup over scaled dual cloud of distance to primal cloud
  double hausdorff = 0.0;
  int section_size = 0;
  int theta_samples = 0;
  double grid_step = 0.0;
  double resolution = 0.0;  // structure below this scale is deliberately merged
  int primal_points = 0;
  int dual_points = 0;
};

namespace detail {

// Spectrum point cloud on a fixed energy grid: the grid points where the
// theta-averaged counting function actually increases. Hard-wall sections
// shed at most a couple of isolated boundary eigenvalues per theta into
// each gap; averaging caps their weight at 2/size, below the 3/size
// increase threshold, so they are filtered out.
inline std::vector<double> spectrum_cloud(const CouplingTriple& lam, real alpha,
                                          double energy_scale, int size,
                                          int theta_samples, double grid_lo,
                                          double grid_hi, int grid_n,
                                          double resolution) {
  const long off = -(long)(size / 2);
  std::vector<double> counts(grid_n, 0.0);
  const double h = (grid_hi - grid_lo) / double(grid_n - 1);
  for (double th : kronecker_thetas(theta_samples)) {
    const FiniteSection sec = build_section(lam, alpha, th, size, off);
    std::vector<double> ev = section_all_values_fast(sec);
    if (energy_scale != 1.0)
      for (double& x : ev) x *= energy_scale;
    std::size_t j = 0;
    for (int i = 0; i < grid_n; ++i) {
      const double E = grid_lo + i * h;
      while (j < ev.size() && ev[j] <= E) ++j;
      counts[i] += double(j);
    }
  }
  const double scale = 1.0 / (double(theta_samples) * double(size));
  for (auto& x : counts) x *= scale;

  // Window wide enough that in-band counts clear the threshold with margin
  // even where the density of states is low; boundary-state pollution stays
  // at <= 2 eigenvalues per theta regardless of the window.
  const double delta = std::max(25.0 / double(size), resolution);
  const int w = std::max(1, int(std::lround(delta / h)));
  const double thresh = 3.0 / double(size);
  std::vector<double> cloud;
  for (int i = 0; i < grid_n; ++i) {
    const int a = std::max(0, i - w), b = std::min(grid_n - 1, i + w);
    if (counts[b] - counts[a] >= thresh) cloud.push_back(grid_lo + i * h);
  }
  return cloud;
}

// sup over a of min over b of |a-b|, both ascending
inline double one_sided_dist(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty())
    throw domain_error("one_sided_dist: empty spectrum cloud");
  double worst = 0.0;
  std::size_t j = 0;
  for (double x : a) {
    while (j + 1 < b.size() && b[j + 1] < x) ++j;
    double d = std::abs(b[j] - x);
    if (j + 1 < b.size()) d = std::min(d, std::abs(b[j + 1] - x));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace detail

// Comparing clouds at a fixed `resolution` keeps the comparison meaningful
// across section sizes: micro-gaps below that scale are merged on both sides,
// so doubling the section refines the shared structure instead of revealing
// new structure on one side only.
inline DualityReport duality_check(const CouplingTriple& lam, real alpha,
                                   int section_size, int theta_samples,
                                   double resolution = 0.0125) {
  lam.validate();
  if (classify_region(lam) != Region::II)
    throw WrongRegion("duality_check: couplings must lie in region II");
  if (section_size < 100)
    throw std::invalid_argument("duality_check: section_size must be >= 100");
  if (theta_samples < 2)
    throw std::invalid_argument("duality_check: theta_samples must be >= 2");

  const CouplingTriple lh = dual(lam);
  const double R =
      std::max(spectral_hull_radius(lam), lam.l2 * spectral_hull_radius(lh)) + 0.5;
  const int grid_n = std::max(8192, 4 * section_size);

  const auto primal = detail::spectrum_cloud(lam, alpha, 1.0, section_size,
                                             theta_samples, -R, R, grid_n, resolution);
  const auto scaled_dual = detail::spectrum_cloud(lh, alpha, lam.l2, section_size,
                                                  theta_samples, -R, R, grid_n,
                                                  resolution);

  DualityReport rep;
  rep.section_size = section_size;
  rep.theta_samples = theta_samples;
  rep.grid_step = 2.0 * R / double(grid_n - 1);
  rep.resolution = resolution;
  rep.primal_points = (int)primal.size();
  rep.dual_points = (int)scaled_dual.size();
  rep.dist_forward = detail::one_sided_dist(primal, scaled_dual);
  rep.dist_backward = detail::one_sided_dist(scaled_dual, primal);
  rep.hausdorff = std::max(rep.dist_forward, rep.dist_backward);
  return rep;
}

}  // namespace ehm
