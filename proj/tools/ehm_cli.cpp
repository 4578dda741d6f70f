// Command-line front end: one command per process, each mapped to a single
// module operation.  Every run assembles a Report (resolved config embedded);
// JSON goes to --out always, CSV/SVG views on request.  No numerics happen
// here beyond formatting.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ehm/cocycle.hpp"
#include "ehm/localize.hpp"
#include "ehm/model.hpp"
#include "ehm/numth.hpp"
#include "ehm/reduce.hpp"
#include "ehm/report.hpp"
#include "ehm/spectral.hpp"

namespace {

using namespace ehm;

// Raw option storage.  Zero sentinels mean "not given"; each command applies
// its own defaults afterwards so the embedded config carries resolved values.
struct CliValues {
  std::string lambda_str;
  std::string alpha = "golden";
  bool dual_model = false;
  double theta = 0;
  double e_value = 0;
  std::string e_grid;
  int size = 0;
  int iters = 0;
  std::uint64_t seed = 0;
  int k_max = 0;
  double eps0 = 0;
  std::vector<long> windows;
  double tol = 0;
  std::string out_dir;
  bool emit_json = false, emit_csv = false, emit_svg = false;
};

struct Outputs {
  std::string line;
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::pair<std::string, std::string>> svgs;
};

bool parse_triple(const std::string& s, double out[3]) {
  int used = -1;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf%n", &out[0], &out[1], &out[2], &used) != 3)
    return false;
  return used >= 0 && s[static_cast<std::size_t>(used)] == '\0';
}

bool parse_grid(const std::string& s, double& lo, double& hi, int& n) {
  int used = -1;
  if (std::sscanf(s.c_str(), "%lf:%lf:%d%n", &lo, &hi, &n, &used) != 3) return false;
  return used >= 0 && s[static_cast<std::size_t>(used)] == '\0' && hi > lo && n >= 2;
}

std::string check_lambda(const std::string& s) {
  double t[3];
  return parse_triple(s, t) ? "" : "expected three comma-separated numbers a,b,c";
}

std::string check_grid(const std::string& s) {
  double lo, hi;
  int n;
  return parse_grid(s, lo, hi, n) ? "" : "expected lo:hi:n with hi > lo and n >= 2";
}

std::string check_alpha(const std::string& s) {
  if (s == "golden" || s == "silver") return "";
  char* end = nullptr;
  const long double v = std::strtold(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !(v > 0.0L && v < 1.0L))
    return "expected 'golden', 'silver', or a decimal in (0,1)";
  return "";
}

Irrational resolve_alpha(const std::string& spec) {
  if (spec == "golden") return golden_mean();
  if (spec == "silver") return silver_mean();
  return cf_expand(std::strtold(spec.c_str(), nullptr), 64);
}

CouplingTriple resolve_lambda(const CliValues& v) {
  double t[3];
  parse_triple(v.lambda_str, t);
  return CouplingTriple{t[0], t[1], t[2]};
}

RunConfig make_config(const std::string& command, const CliValues& v) {
  RunConfig c;
  c.command = command;
  if (!v.lambda_str.empty()) {
    double t[3];
    parse_triple(v.lambda_str, t);
    c.l1 = t[0]; c.l2 = t[1]; c.l3 = t[2];
  }
  c.dual_model = v.dual_model;
  c.alpha_spec = v.alpha;
  c.theta = v.theta;
  c.e_value = v.e_value;
  if (!v.e_grid.empty()) {
    c.has_e_grid = parse_grid(v.e_grid, c.e_lo, c.e_hi, c.e_n);
  }
  c.size = v.size;
  c.iters = v.iters;
  c.seed = v.seed;
  c.k_max = v.k_max;
  c.eps0 = v.eps0;
  c.windows = v.windows;
  c.tol = v.tol;
  c.out_dir = v.out_dir;
  c.emit_json = v.emit_json;
  c.emit_csv = v.emit_csv;
  c.emit_svg = v.emit_svg;
  return c;
}

std::string fmt_line(const char* f, ...) {
  char b[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(b, sizeof b, f, ap);
  va_end(ap);
  return b;
}

ojson triple_json(const CouplingTriple& l) {
  return ojson::array({l.l1, l.l2, l.l3});
}

// ---------------------------------------------------------------------------
// Command handlers.  Each fills report.payload / report.fitted and the
// side outputs; config fields are already resolved by the caller.

void cmd_regions(const RunConfig& cfg, const Irrational&, Report& rep, Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const Region r = classify_region(lam);
  const CouplingTriple d = dual(lam);
  rep.payload["lambda"] = triple_json(lam);
  rep.payload["region"] = region_name(r);
  rep.payload["dual_lambda"] = triple_json(d);
  rep.payload["dual_region"] = region_name(classify_region(d));
  if (r == Region::II) {
    rep.payload["epsilon1"] = epsilon1(lam);
    rep.payload["epsilon2"] = epsilon2(lam);
  }
  out.line = region_name(r);
}

void cmd_dual(const RunConfig& cfg, const Irrational&, Report& rep, Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const CouplingTriple d = dual(lam);
  const CouplingTriple dd = dual(d);
  const double inv_dev = std::max({std::abs(dd.l1 - lam.l1), std::abs(dd.l2 - lam.l2),
                                   std::abs(dd.l3 - lam.l3)});
  rep.payload["lambda"] = triple_json(lam);
  rep.payload["dual_lambda"] = triple_json(d);
  rep.payload["region"] = region_name(classify_region(lam));
  rep.payload["dual_region"] = region_name(classify_region(d));
  rep.payload["involution_dev"] = inv_dev;
  out.line = fmt17(d.l1) + "," + fmt17(d.l2) + "," + fmt17(d.l3);
}

void cmd_resonances(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                    Outputs& out) {
  const ResonanceList rl =
      resonances(static_cast<real>(cfg.theta), alpha, cfg.eps0, cfg.k_max);
  ojson entries = ojson::array();
  CsvTable t;
  t.header = {"n_j", "dist", "bound"};
  for (const auto& e : rl.entries) {
    const double bound = std::exp(-cfg.eps0 * static_cast<double>(std::llabs(e.n)));
    entries.push_back(ojson{{"n", e.n}, {"dist", static_cast<double>(e.dist)},
                            {"bound", bound}});
    t.add_row({std::to_string(e.n), fmt17(static_cast<double>(e.dist)), fmt17(bound)});
  }
  rep.payload["theta"] = cfg.theta;
  rep.payload["eps0"] = cfg.eps0;
  rep.payload["k_max"] = cfg.k_max;
  rep.payload["entries"] = entries;
  rep.payload["growth_250"] = rl.growth_250;
  out.tables.emplace_back("resonances", std::move(t));
  out.line = fmt_line("%zu resonances with |n| <= %d", rl.entries.size(), cfg.k_max);
}

void cmd_spectrum(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                  Outputs& out) {
  long long p = 0, q = 0;
  for (std::size_t i = 1; i + 0 < alpha.q.size(); ++i) {
    const long long qi = static_cast<long long>(alpha.q[i]);
    if (qi > cfg.size) break;
    p = static_cast<long long>(alpha.p[i]);
    q = qi;
  }
  if (q < 1)
    throw std::invalid_argument("spectrum: no convergent denominator <= --size");
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const SpectrumApprox sp = spectrum_rational(lam, static_cast<long>(p),
                                              static_cast<long>(q), cfg.iters, cfg.tol);
  ojson bands = ojson::array();
  CsvTable t;
  t.header = {"band", "lo", "hi", "width"};
  for (std::size_t i = 0; i < sp.bands.size(); ++i) {
    const Band& b = sp.bands[i];
    bands.push_back(ojson{{"lo", b.lo}, {"hi", b.hi}, {"width", b.width()}});
    t.add_row({std::to_string(i), fmt17(b.lo), fmt17(b.hi), fmt17(b.width())});
  }
  rep.payload["p"] = p;
  rep.payload["q"] = q;
  rep.payload["theta_grid"] = sp.theta_grid;
  rep.payload["e_resolution"] = sp.e_resolution;
  rep.payload["e_lo"] = sp.e_lo;
  rep.payload["e_hi"] = sp.e_hi;
  rep.payload["bands"] = bands;
  out.tables.emplace_back("bands", std::move(t));
  out.line = fmt_line("%zu bands for alpha ~ %lld/%lld", sp.bands.size(), p, q);
}

struct IdsBundle {
  IDSCurve curve;
  GapTable gaps;
};

IdsBundle run_ids(const RunConfig& cfg, const Irrational& alpha) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  IdsBundle b;
  b.curve = ids_counting(lam, alpha.value, linspace(cfg.e_lo, cfg.e_hi, cfg.e_n),
                         cfg.size, cfg.iters, cfg.seed);
  b.gaps = detect_gaps(b.curve, cfg.tol > 0 ? cfg.tol : -1.0);
  label_gaps(b.gaps, alpha, cfg.k_max);
  return b;
}

ojson gap_entries_json(const GapTable& t) {
  ojson entries = ojson::array();
  for (const auto& g : t.entries)
    entries.push_back(ojson{{"e_lo", g.e_lo}, {"e_hi", g.e_hi}, {"width", g.width()},
                            {"n_value", g.n_value}, {"k", g.k}, {"m", g.m},
                            {"label_residual", g.label_residual},
                            {"labeled", g.labeled}});
  return entries;
}

CsvTable gap_entries_csv(const GapTable& t) {
  CsvTable c;
  c.header = {"e_lo", "e_hi", "width", "n_value", "k", "m", "label_residual",
              "labeled"};
  for (const auto& g : t.entries)
    c.add_row({fmt17(g.e_lo), fmt17(g.e_hi), fmt17(g.width()), fmt17(g.n_value),
               std::to_string(g.k), std::to_string(g.m), fmt17(g.label_residual),
               g.labeled ? "1" : "0"});
  return c;
}

void cmd_ids(const RunConfig& cfg, const Irrational& alpha, Report& rep, Outputs& out) {
  const IdsBundle b = run_ids(cfg, alpha);
  ojson e = ojson::array(), n = ojson::array();
  CsvTable t;
  t.header = {"e", "n"};
  for (std::size_t i = 0; i < b.curve.e.size(); ++i) {
    e.push_back(b.curve.e[i]);
    n.push_back(b.curve.n[i]);
    t.add_row({fmt17(b.curve.e[i]), fmt17(b.curve.n[i])});
  }
  rep.payload["section_size"] = b.curve.section_size;
  rep.payload["theta_samples"] = b.curve.theta_samples;
  rep.payload["seed"] = b.curve.seed;
  rep.payload["e"] = e;
  rep.payload["n"] = n;
  rep.payload["gaps"] = gap_entries_json(b.gaps);
  out.tables.emplace_back("ids", std::move(t));

  PlotSpec spec;
  spec.title = "integrated density of states";
  spec.xlabel = "E";
  spec.ylabel = "N(E)";
  std::size_t labeled = 0;
  for (const auto& g : b.gaps.entries)
    if (g.labeled) {
      spec.markers.push_back({0.5 * (g.e_lo + g.e_hi), fmt_line("k=%ld", g.k)});
      ++labeled;
    }
  PlotSeries s;
  s.name = "ids";
  s.x = b.curve.e;
  s.y = b.curve.n;
  s.steps = true;
  out.svgs.emplace_back("ids", render_line_svg(spec, {s}));
  out.line = fmt_line("IDS on %zu energies: %zu gaps, %zu labeled",
                      b.curve.e.size(), b.gaps.entries.size(), labeled);
}

void cmd_gaps(const RunConfig& cfg, const Irrational& alpha, Report& rep, Outputs& out) {
  const IdsBundle b = run_ids(cfg, alpha);
  std::size_t labeled = 0;
  for (const auto& g : b.gaps.entries)
    if (g.labeled) ++labeled;
  rep.payload["section_size"] = b.curve.section_size;
  rep.payload["theta_samples"] = b.curve.theta_samples;
  rep.payload["plateau_tol"] = b.gaps.plateau_tol;
  rep.payload["min_width"] = b.gaps.min_width;
  rep.payload["entries"] = gap_entries_json(b.gaps);
  out.tables.emplace_back("gaps", gap_entries_csv(b.gaps));
  out.line = fmt_line("%zu gaps, %zu labeled", b.gaps.entries.size(), labeled);
}

void cmd_martini(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                 Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const std::vector<int> sizes{cfg.size, 2 * cfg.size};
  const MartiniReport mr =
      martini_probe(lam, alpha, cfg.k_max, sizes, cfg.tol, cfg.iters);
  ojson entries = ojson::array();
  CsvTable t;
  t.header = {"k", "n_target", "status", "width_coarse", "width_fine",
              "smear_fine", "e_lo", "e_hi"};
  int open = 0, closed = 0, unresolved = 0;
  for (const auto& e : mr.entries) {
    ojson je{{"k", e.k}, {"n_target", e.n_target},
             {"status", gap_status_name(e.status)}, {"widths", e.widths},
             {"smear_fine", e.smear_fine}, {"e_lo", e.e_lo}, {"e_hi", e.e_hi}};
    entries.push_back(je);
    t.add_row({std::to_string(e.k), fmt17(e.n_target), gap_status_name(e.status),
               fmt17(e.widths.empty() ? 0.0 : e.widths.front()),
               fmt17(e.widths.empty() ? 0.0 : e.widths.back()), fmt17(e.smear_fine),
               fmt17(e.e_lo), fmt17(e.e_hi)});
    if (e.status == GapStatus::open) ++open;
    else if (e.status == GapStatus::closed_at_resolution) ++closed;
    else ++unresolved;
  }
  rep.payload["sizes"] = mr.sizes;
  rep.payload["tol"] = mr.tol;
  rep.payload["theta_samples"] = mr.theta_samples;
  rep.payload["beta"] = mr.beta;
  rep.payload["beta_warning"] = mr.beta_warning;
  rep.payload["note"] = mr.note;
  rep.payload["entries"] = entries;
  out.tables.emplace_back("martini", std::move(t));
  out.line = fmt_line("|k| <= %d: %d open, %d closed_at_resolution, %d unresolved",
                      cfg.k_max, open, closed, unresolved);
}

void cmd_duality(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                 Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const DualityReport dr =
      duality_check(lam, alpha.value, cfg.size, cfg.iters, cfg.tol);
  rep.payload["dist_forward"] = dr.dist_forward;
  rep.payload["dist_backward"] = dr.dist_backward;
  rep.payload["hausdorff"] = dr.hausdorff;
  rep.payload["section_size"] = dr.section_size;
  rep.payload["theta_samples"] = dr.theta_samples;
  rep.payload["grid_step"] = dr.grid_step;
  rep.payload["resolution"] = dr.resolution;
  rep.payload["primal_points"] = dr.primal_points;
  rep.payload["dual_points"] = dr.dual_points;
  out.line = fmt_line("hausdorff %.6g (forward %.6g, backward %.6g)", dr.hausdorff,
                      dr.dist_forward, dr.dist_backward);
}

void cmd_le(const RunConfig& cfg, const Irrational& alpha, Report& rep, Outputs& out,
            bool strip) {
  const CouplingTriple base{cfg.l1, cfg.l2, cfg.l3};
  const CouplingTriple lam = cfg.dual_model ? dual(base) : base;
  const double height = strip ? cfg.eps0 : 0.0;
  const CocycleMap map = transfer(lam, alpha, cfg.e_value, TransferVariant::ATilde);
  const LyapunovResult r = lyapunov(map, cfg.iters, cfg.size,
                                    static_cast<unsigned long long>(cfg.seed), height);
  rep.payload["E"] = cfg.e_value;
  rep.payload["variant"] = "a_tilde";
  rep.payload["model_lambda"] = triple_json(lam);
  if (strip) rep.payload["height"] = height;
  rep.payload["estimate"] = r.estimate;
  rep.payload["stderr"] = r.stderr_est;
  rep.payload["n_iter"] = r.n_iter;
  rep.payload["n_phases"] = r.n_phases;
  for (const CouplingTriple& c : {base, dual(base)})
    if (classify_region(c) == Region::II) {
      rep.fitted["epsilon1"] = epsilon1(c);
      break;
    }
  out.line = fmt_line("LE%s %.6f +/- %.6f at E = %.12g",
                      strip ? fmt_line(" at height %.6g", height).c_str() : "",
                      r.estimate, r.stderr_est, cfg.e_value);
}

void cmd_rotation(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                  Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const CocycleMap map = transfer(lam, alpha, cfg.e_value, TransferVariant::ATilde);
  const double rho = rotation_number(map, cfg.iters, 2);
  rep.payload["E"] = cfg.e_value;
  rep.payload["rho"] = rho;
  rep.payload["n_iter"] = cfg.iters;
  out.line = fmt_line("rho = %.9f at E = %.12g", rho, cfg.e_value);
}

void cmd_localize(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                  Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  const DualEigenpair dep = dual_eigenpair(lam, alpha.value,
                                           static_cast<real>(cfg.theta), cfg.e_value,
                                           cfg.size, cfg.tol);
  const ResonanceList rl =
      resonances(static_cast<real>(cfg.theta), alpha, cfg.eps0, cfg.k_max);
  const double eps1 = epsilon1(lam);
  const DecayProfile dp = decay_profile(dep, rl, eps1);

  ojson windows = ojson::array();
  for (const auto& w : dp.windows)
    windows.push_back(ojson{{"j", w.j}, {"k_lo", w.k_lo}, {"k_hi", w.k_hi},
                            {"fitted_rate", w.fitted_rate}, {"max_abs", w.max_abs},
                            {"points", w.points}});
  ojson res = ojson::array();
  for (const auto& e : rl.entries)
    res.push_back(ojson{{"n", e.n}, {"dist", static_cast<double>(e.dist)}});
  rep.payload["e_target"] = cfg.e_value;
  rep.payload["e_dual"] = dep.e_dual;
  rep.payload["e_primal"] = dep.e_primal;
  rep.payload["eigen_residual"] = dep.residual;
  rep.payload["section_size"] = cfg.size;
  rep.payload["eps1"] = dp.eps1;
  rep.payload["rate_threshold"] = dp.rate_threshold;
  rep.payload["pass"] = dp.pass;
  rep.payload["windows"] = windows;
  rep.payload["resonances"] = res;

  CsvTable t;
  t.header = {"k", "abs_u", "window", "fitted_rate"};
  std::vector<double> xs, ys;
  for (long k = dp.u.n0; k < dp.u.n_end(); ++k) {
    const double au = std::abs(dp.u.at(k));
    xs.push_back(static_cast<double>(k));
    ys.push_back(au);
    const long ak = std::labs(k);
    std::string wid, rate;
    for (const auto& w : dp.windows)
      if (ak >= w.k_lo && ak <= w.k_hi) {
        wid = std::to_string(w.j);
        rate = fmt17(w.fitted_rate);
        break;
      }
    t.add_row({std::to_string(k), fmt17(au), wid, rate});
  }
  out.tables.emplace_back("decay", std::move(t));

  PlotSpec spec;
  spec.title = "eigenvector decay";
  spec.xlabel = "site k";
  spec.ylabel = "|u_k|";
  spec.ylog = true;
  for (const auto& e : rl.entries)
    if (e.n != 0) spec.markers.push_back({static_cast<double>(e.n),
                                          fmt_line("n=%lld", (long long)e.n)});
  PlotSeries s;
  s.name = "abs_u";
  s.x = xs;
  s.y = ys;
  out.svgs.emplace_back("decay", render_line_svg(spec, {s}));

  double min_rate = 0;
  for (std::size_t i = 0; i < dp.windows.size(); ++i)
    min_rate = i ? std::min(min_rate, dp.windows[i].fitted_rate)
                 : dp.windows[i].fitted_rate;
  out.line = fmt_line("decay pass=%s over %zu windows, min rate %.4f (threshold %.4f)",
                      dp.pass ? "yes" : "no", dp.windows.size(), min_rate,
                      dp.rate_threshold);
}

void cmd_reduce(const RunConfig& cfg, const Irrational& alpha, Report& rep,
                Outputs& out) {
  const CouplingTriple lam{cfg.l1, cfg.l2, cfg.l3};
  AlmostReduceConfig rc;
  rc.window_sizes = cfg.windows;
  rc.eps0 = cfg.eps0;
  rc.k_max = cfg.k_max;
  rc.section_size = cfg.size;
  rc.max_distance = cfg.tol;
  rc.rot_iters = cfg.iters;
  const ResonanceList rl =
      resonances(static_cast<real>(cfg.theta), alpha, cfg.eps0, cfg.k_max);
  const int res_index = static_cast<int>(rl.entries.size()) - 1;
  const AlmostReduceReport ar = almost_reduce(lam, alpha, static_cast<real>(cfg.theta),
                                              cfg.e_value, res_index, rc);

  ojson stages = ojson::array();
  std::vector<double> wx, wy;
  for (std::size_t i = 0; i < ar.stages.size(); ++i) {
    const ConjugacyResult& s = ar.stages[i];
    const long w = cfg.windows[i];
    stages.push_back(ojson{{"window", w}, {"defect", s.defect},
                           {"degree", s.measured_degree}, {"det_min", s.det_min},
                           {"det_max", s.det_max}, {"det_spread", s.det_spread},
                           {"det_w2_dev", s.det_w2_dev}, {"w_sup", s.w_sup},
                           {"l_value", s.l_value}, {"theta_tilde", s.theta_tilde},
                           {"rotation_turns", s.rotation_turns}, {"grid", s.grid}});
    wx.push_back(static_cast<double>(w));
    wy.push_back(s.defect);
  }
  rep.payload["e_primal"] = ar.e_primal;
  rep.payload["e_dual"] = ar.e_dual;
  rep.payload["eigen_residual"] = ar.eigen_residual;
  rep.payload["n_j"] = ar.n_j;
  rep.payload["l_value"] = ar.l_value;
  rep.payload["small_window"] = ar.small_window;
  rep.payload["trend_ok"] = ar.trend_ok;
  rep.payload["rotation_gap"] = ar.rotation_gap;
  rep.payload["note"] = ar.note;
  rep.payload["stages"] = stages;
  rep.fitted["c_wl"] = ar.fitted_c_wl;

  PlotSpec spec;
  spec.title = "conjugation defect vs window";
  spec.xlabel = "window size";
  spec.ylabel = "defect";
  spec.ylog = true;
  PlotSeries s;
  s.name = "defect";
  s.x = wx;
  s.y = wy;
  out.svgs.emplace_back("defect", render_line_svg(spec, {s}));
  out.line = fmt_line("n_j=%ld: defect %.3e at window %ld, trend %s, rotation gap %.2e",
                      ar.n_j, wy.empty() ? 0.0 : wy.back(),
                      cfg.windows.empty() ? 0 : cfg.windows.back(),
                      ar.trend_ok ? "ok" : "violated", ar.rotation_gap);
}

void cmd_audit(const RunConfig& cfg, const Irrational& alpha, Report& rep,
               Outputs& out) {
  AuditParams params;
  for (std::size_t i = 1; i + 1 < alpha.q.size(); ++i) {
    const long long q = static_cast<long long>(alpha.q[i]);
    if (q > cfg.size) break;
    if (q < 2) continue;
    if (!params.qs.empty() && params.qs.back() == q) continue;
    params.qs.push_back(q);
  }
  if (params.qs.empty())
    throw std::invalid_argument("audit: no convergent denominator in [2, --size]");
  params.samples = cfg.iters;
  params.r = 1;

  auto mode_json = [](const ConstantAuditReport& r) {
    ojson entries = ojson::array();
    for (const auto& e : r.entries)
      entries.push_back(ojson{{"q", e.q}, {"q_next", e.q_next},
                              {"implied", e.implied},
                              {"mean_implied", e.mean_implied}});
    return ojson{{"entries", entries}, {"max_implied", r.max_implied},
                 {"trend_slope", r.trend_slope}};
  };
  const ConstantAuditReport rs =
      constant_audit(alpha, AuditMode::log_sin, params, cfg.seed);
  const ConstantAuditReport rp =
      constant_audit(alpha, AuditMode::trig_poly, params, cfg.seed);

  rep.payload["qs"] = params.qs;
  rep.payload["samples"] = params.samples;
  rep.payload["r"] = params.r;
  rep.payload["log_sin"] = mode_json(rs);
  rep.payload["trig_poly"] = mode_json(rp);
  rep.fitted["c1_max"] = rs.max_implied;
  rep.fitted["c1_trend_slope"] = rs.trend_slope;
  rep.fitted["c2_max"] = rp.max_implied;
  rep.fitted["c2_trend_slope"] = rp.trend_slope;

  CsvTable t;
  t.header = {"mode", "q", "q_next", "implied", "mean_implied"};
  for (const auto& e : rs.entries)
    t.add_row({"log_sin", std::to_string(e.q), std::to_string(e.q_next),
               fmt17(e.implied), fmt17(e.mean_implied)});
  for (const auto& e : rp.entries)
    t.add_row({"trig_poly", std::to_string(e.q), std::to_string(e.q_next),
               fmt17(e.implied), fmt17(e.mean_implied)});
  out.tables.emplace_back("audit", std::move(t));
  out.line = fmt_line("log_sin C <= %.3f (slope %.3f); trig_poly C <= %.3f (slope %.3f)",
                      rs.max_implied, rs.trend_slope, rp.max_implied, rp.trend_slope);
}

// ---------------------------------------------------------------------------
// Emission.  Files are written only after the command succeeded, so a failed
// run leaves no partial output.

void emit_outputs(const RunConfig& cfg, const Report& rep, const Outputs& out) {
  if (cfg.emit_json)
    std::fputs(json_text(report_to_json(rep)).c_str(), stdout);
  else
    std::printf("%s\n", out.line.c_str());
  if (cfg.out_dir.empty()) return;

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir);
  const std::string base = cfg.out_dir + "/" + cfg.command;
  write_text_file(base + ".json", json_text(report_to_json(rep)));
  if (cfg.emit_csv)
    for (const auto& [name, table] : out.tables)
      write_csv(base + "_" + name + ".csv", table);
  if (cfg.emit_svg)
    for (const auto& [name, svg] : out.svgs)
      write_text_file(base + "_" + name + ".svg", svg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extended Harper operator toolkit"};
  app.require_subcommand(1);
  CliValues v;

  auto add_lambda = [&v](CLI::App* sc, bool required = true) {
    auto* o = sc->add_option("--lambda", v.lambda_str,
                             "coupling triple a,b,c")->check(check_lambda);
    if (required) o->required();
  };
  auto add_alpha = [&v](CLI::App* sc) {
    sc->add_option("--alpha", v.alpha,
                   "frequency: golden, silver, or a decimal in (0,1)")
        ->check(check_alpha);
  };
  auto add_out = [&v](CLI::App* sc, bool with_csv, bool with_svg) {
    sc->add_option("--out", v.out_dir, "output directory for report files");
    sc->add_flag("--json", v.emit_json, "print the full JSON report to stdout");
    if (with_csv) sc->add_flag("--csv", v.emit_csv, "also write CSV tables");
    if (with_svg) sc->add_flag("--svg", v.emit_svg, "also write SVG plots");
  };

  CLI::App* regions = app.add_subcommand("regions", "classify the coupling triple");
  add_lambda(regions);
  add_out(regions, false, false);

  CLI::App* dualc = app.add_subcommand("dual", "dual coupling triple");
  add_lambda(dualc);
  add_out(dualc, false, false);

  CLI::App* reso = app.add_subcommand("resonances", "resonant integers of a phase");
  add_alpha(reso);
  reso->add_option("--theta", v.theta, "phase")->required();
  reso->add_option("--eps0", v.eps0, "resonance threshold exponent (default 0.5)");
  reso->add_option("--k-max", v.k_max, "scan depth (default 200)");
  add_out(reso, true, false);

  CLI::App* spect = app.add_subcommand("spectrum", "band spectrum of a rational approximant");
  add_lambda(spect);
  add_alpha(spect);
  spect->add_option("--size", v.size, "largest convergent denominator (default 100)");
  spect->add_option("--iters", v.iters, "theta grid (default 128)");
  spect->add_option("--tol", v.tol, "edge resolution (default 1e-6)");
  add_out(spect, true, false);

  auto add_ids_opts = [&](CLI::App* sc) {
    add_lambda(sc);
    add_alpha(sc);
    sc->add_option("--e-grid", v.e_grid, "energy grid lo:hi:n")->required()
        ->check(check_grid);
    sc->add_option("--size", v.size, "section size (default 400)");
    sc->add_option("--iters", v.iters, "theta samples (default 16)");
    sc->add_option("--seed", v.seed, "tie-break seed (default 0)");
    sc->add_option("--k-max", v.k_max, "labeling depth (default 10)");
    sc->add_option("--tol", v.tol, "plateau tolerance (default 2/size)");
  };
  CLI::App* ids = app.add_subcommand("ids", "integrated density of states staircase");
  add_ids_opts(ids);
  add_out(ids, true, true);

  CLI::App* gaps = app.add_subcommand("gaps", "detected and labeled spectral gaps");
  add_ids_opts(gaps);
  add_out(gaps, true, false);

  CLI::App* martini = app.add_subcommand("martini-probe",
                                         "gap openness at the probed resolutions");
  add_lambda(martini);
  add_alpha(martini);
  martini->add_option("--k-max", v.k_max, "largest label probed (default 5)");
  martini->add_option("--size", v.size, "coarse section size (default 1000)");
  martini->add_option("--iters", v.iters, "theta samples (default 24)");
  martini->add_option("--tol", v.tol, "width tolerance (default 1e-3)");
  add_out(martini, true, false);

  CLI::App* duality = app.add_subcommand("duality", "primal vs scaled dual spectrum");
  add_lambda(duality);
  add_alpha(duality);
  duality->add_option("--size", v.size, "section size (default 600)");
  duality->add_option("--iters", v.iters, "theta samples (default 24)");
  duality->add_option("--tol", v.tol, "merge resolution (default 0.0125)");
  add_out(duality, false, false);

  auto add_le_opts = [&](CLI::App* sc) {
    add_lambda(sc);
    add_alpha(sc);
    sc->add_flag("--dual", v.dual_model, "run on the dual triple");
    sc->add_option("--E", v.e_value, "energy")->required();
    sc->add_option("--iters", v.iters, "iterations (default 100000)");
    sc->add_option("--size", v.size, "phase samples (default 8)");
    sc->add_option("--seed", v.seed, "phase offset seed (default 0)");
  };
  CLI::App* le = app.add_subcommand("le", "Lyapunov exponent on the real axis");
  add_le_opts(le);
  add_out(le, false, false);

  CLI::App* lestrip = app.add_subcommand("le-strip", "Lyapunov exponent at a strip height");
  add_le_opts(lestrip);
  lestrip->add_option("--eps0", v.eps0, "imaginary height")->required();
  add_out(lestrip, false, false);

  CLI::App* rot = app.add_subcommand("rotation", "fibered rotation number");
  add_lambda(rot);
  add_alpha(rot);
  rot->add_option("--E", v.e_value, "energy")->required();
  rot->add_option("--iters", v.iters, "iterations (default 20000)");
  add_out(rot, false, false);

  CLI::App* localize = app.add_subcommand("localize",
                                          "dual eigenvector decay profile");
  add_lambda(localize);
  add_alpha(localize);
  localize->add_option("--theta", v.theta, "phase")->required();
  localize->add_option("--E", v.e_value, "target dual-section energy")->required();
  localize->add_option("--size", v.size, "odd section size (default 241)");
  localize->add_option("--tol", v.tol, "eigenvalue selection radius (default 0.05)");
  localize->add_option("--eps0", v.eps0, "resonance threshold (default 0.5)");
  localize->add_option("--k-max", v.k_max, "resonance depth (default 200)");
  add_out(localize, true, true);

  CLI::App* reduce = app.add_subcommand("reduce", "almost-reducibility certificate");
  add_lambda(reduce);
  add_alpha(reduce);
  reduce->add_option("--theta", v.theta, "phase")->required();
  reduce->add_option("--E", v.e_value, "target primal energy")->required();
  reduce->add_option("--window", v.windows, "window sizes (default 16,32,64)")
      ->delimiter(',');
  reduce->add_option("--size", v.size, "dual section size (default 4*max window + 1)");
  reduce->add_option("--tol", v.tol, "eigenvalue selection radius (default 0.05)");
  reduce->add_option("--eps0", v.eps0, "resonance threshold (default 0.5)");
  reduce->add_option("--k-max", v.k_max, "resonance depth (default 200)");
  reduce->add_option("--iters", v.iters, "rotation probe iterations (default 20000)");
  add_out(reduce, false, true);

  CLI::App* audit = app.add_subcommand("audit", "implied-constant audits along convergents");
  add_alpha(audit);
  audit->add_option("--size", v.size, "largest denominator audited (default 233)");
  audit->add_option("--iters", v.iters, "samples per denominator (default 40)");
  audit->add_option("--seed", v.seed, "sampling seed (default 0)");
  add_out(audit, true, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  // Resolved per-command defaults; the embedded config reports these values.
  struct Cmd {
    CLI::App* sc;
    void (*fill)(CliValues&);
    void (*run)(const RunConfig&, const Irrational&, Report&, Outputs&);
  };
  const Cmd cmds[] = {
      {regions, [](CliValues&) {}, cmd_regions},
      {dualc, [](CliValues&) {}, cmd_dual},
      {reso,
       [](CliValues& c) {
         if (c.eps0 <= 0) c.eps0 = 0.5;
         if (c.k_max <= 0) c.k_max = 200;
       },
       cmd_resonances},
      {spect,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 100;
         if (c.iters <= 0) c.iters = 128;
         if (c.tol <= 0) c.tol = 1e-6;
       },
       cmd_spectrum},
      {ids,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 400;
         if (c.iters <= 0) c.iters = 16;
         if (c.k_max <= 0) c.k_max = 10;
       },
       cmd_ids},
      {gaps,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 400;
         if (c.iters <= 0) c.iters = 16;
         if (c.k_max <= 0) c.k_max = 10;
       },
       cmd_gaps},
      {martini,
       [](CliValues& c) {
         if (c.k_max <= 0) c.k_max = 5;
         if (c.size <= 0) c.size = 1000;
         if (c.iters <= 0) c.iters = 24;
         if (c.tol <= 0) c.tol = 1e-3;
       },
       cmd_martini},
      {duality,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 600;
         if (c.iters <= 0) c.iters = 24;
         if (c.tol <= 0) c.tol = 0.0125;
       },
       cmd_duality},
      {le,
       [](CliValues& c) {
         if (c.iters <= 0) c.iters = 100000;
         if (c.size <= 0) c.size = 8;
       },
       [](const RunConfig& cfg, const Irrational& a, Report& r, Outputs& o) {
         cmd_le(cfg, a, r, o, false);
       }},
      {lestrip,
       [](CliValues& c) {
         if (c.iters <= 0) c.iters = 100000;
         if (c.size <= 0) c.size = 8;
       },
       [](const RunConfig& cfg, const Irrational& a, Report& r, Outputs& o) {
         cmd_le(cfg, a, r, o, true);
       }},
      {rot,
       [](CliValues& c) {
         if (c.iters <= 0) c.iters = 20000;
       },
       cmd_rotation},
      {localize,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 241;
         if (c.tol <= 0) c.tol = 0.05;
         if (c.eps0 <= 0) c.eps0 = 0.5;
         if (c.k_max <= 0) c.k_max = 200;
       },
       cmd_localize},
      {reduce,
       [](CliValues& c) {
         if (c.windows.empty()) c.windows = {16, 32, 64};
         if (c.tol <= 0) c.tol = 0.05;
         if (c.eps0 <= 0) c.eps0 = 0.5;
         if (c.k_max <= 0) c.k_max = 200;
         if (c.iters <= 0) c.iters = 20000;
       },
       cmd_reduce},
      {audit,
       [](CliValues& c) {
         if (c.size <= 0) c.size = 233;
         if (c.iters <= 0) c.iters = 40;
       },
       cmd_audit},
  };

  try {
    for (const Cmd& c : cmds) {
      if (!app.got_subcommand(c.sc)) continue;
      if ((v.emit_csv || v.emit_svg) && v.out_dir.empty())
        throw std::invalid_argument(
            std::string(v.emit_csv ? "--csv" : "--svg") + " requires --out");
      if (c.sc == localize && v.size > 0 && v.size % 2 == 0)
        throw std::invalid_argument("--size: localize needs an odd section size");
      c.fill(v);
      const Irrational alpha = resolve_alpha(v.alpha);
      Report rep;
      rep.command = c.sc->get_name();
      rep.config = make_config(rep.command, v);
      Outputs out;
      const auto t0 = std::chrono::steady_clock::now();
      c.run(rep.config, alpha, rep, out);
      rep.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      emit_outputs(rep.config, rep, out);
      return 0;
    }
  } catch (const ehm::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 1;
}
