#pragma once

// Run configuration, report assembly, and CSV/JSON/SVG emission for the
// command-line front end.  Numeric payloads are produced by the module
// operations; everything here is formatting and file I/O.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ehm/errors.hpp"
#include "json.hpp"

namespace ehm {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Number formatting.  Floats carry 17 significant digits so the serialized
// form round-trips to the same double.

inline std::string fmt17(double v) {
  if (!std::isfinite(v)) return "null";
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// ---------------------------------------------------------------------------
// JSON text.  nlohmann's dump() emits shortest-round-trip floats; reports pin
// the 17-digit form instead, so the tree is printed here.  Keys keep
// insertion order (ordered_json); every scalar lands on its own line.

namespace detail {

inline void json_text_rec(const ojson& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string pad1(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case ojson::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        out += pad1 + ojson(it.key()).dump() + ": ";
        json_text_rec(it.value(), out, depth + 1);
        out += (i + 1 < j.size()) ? ",\n" : "\n";
      }
      out += pad + "}";
      return;
    }
    case ojson::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad1;
        json_text_rec(j[i], out, depth + 1);
        out += (i + 1 < j.size()) ? ",\n" : "\n";
      }
      out += pad + "]";
      return;
    }
    case ojson::value_t::number_float:
      out += fmt17(j.get<double>());
      return;
    case ojson::value_t::number_integer:
      out += std::to_string(j.get<long long>());
      return;
    case ojson::value_t::number_unsigned:
      out += std::to_string(j.get<unsigned long long>());
      return;
    case ojson::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      return;
    case ojson::value_t::string:
      out += j.dump();
      return;
    default:
      out += "null";
      return;
  }
}

}  // namespace detail

inline std::string json_text(const ojson& j) {
  std::string out;
  detail::json_text_rec(j, out, 0);
  out += "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) throw IoError("write failed on " + path);
}

// ---------------------------------------------------------------------------
// CSV: comma separators, one header row, LF endings, UTF-8 passthrough.
// An empty table still emits its header row.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) {
    if (row.size() != header.size())
      throw std::invalid_argument("CsvTable: row width does not match header");
    rows.push_back(std::move(row));
  }
};

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_text(const CsvTable& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  write_text_file(path, csv_text(t));
}

// ---------------------------------------------------------------------------
// SVG line plots: polylines, axis ticks, and text labels only.

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
  std::string color = "#2151a1";
  bool steps = false;  // staircase: hold y across each x interval
};

struct PlotMarker {
  double x = 0;
  std::string label;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  int width = 880, height = 560;
  bool ylog = false;  // plot log10(y); nonpositive samples are dropped
  std::vector<PlotMarker> markers;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

inline std::string fmt_px(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

inline std::string fmt_tick(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%g", v);
  return b;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double step = (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
  std::vector<double> t;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step)
    t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return t;
}

}  // namespace detail

inline std::string render_line_svg(const PlotSpec& spec,
                                   const std::vector<PlotSeries>& series) {
  constexpr double mL = 70, mR = 18, mT = 40, mB = 50;
  const double W = spec.width, H = spec.height;
  const double pw = W - mL - mR, ph = H - mT - mB;

  // Data bounds, with y mapped through log10 in ylog mode.
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool any = false;
  auto ymap = [&spec](double y) { return spec.ylog ? std::log10(y) : y; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (spec.ylog && !(s.y[i] > 0)) continue;
      const double yv = ymap(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(yv)) continue;
      if (!any) { xlo = xhi = s.x[i]; ylo = yhi = yv; any = true; }
      xlo = std::min(xlo, s.x[i]); xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, yv);     yhi = std::max(yhi, yv);
    }
  for (const auto& m : spec.markers) {
    if (!any) { xlo = xhi = m.x; any = true; }
    xlo = std::min(xlo, m.x); xhi = std::max(xhi, m.x);
  }
  if (!any) { xlo = ylo = 0; xhi = yhi = 1; }
  if (!(xhi > xlo)) { xlo -= 0.5; xhi += 0.5; }
  if (!(yhi > ylo)) { ylo -= 0.5; yhi += 0.5; }
  const double xpad = 0.02 * (xhi - xlo), ypad = 0.04 * (yhi - ylo);
  xlo -= xpad; xhi += xpad; ylo -= ypad; yhi += ypad;

  auto X = [&](double x) { return mL + (x - xlo) / (xhi - xlo) * pw; };
  auto Y = [&](double y) { return mT + (yhi - y) / (yhi - ylo) * ph; };

  std::string svg;
  char b[512];
  std::snprintf(b, sizeof b,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                spec.width, spec.height, spec.width, spec.height);
  svg += b;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  std::snprintf(b, sizeof b,
                "<rect x=\"%s\" y=\"%s\" width=\"%s\" height=\"%s\" "
                "fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
                detail::fmt_px(mL).c_str(), detail::fmt_px(mT).c_str(),
                detail::fmt_px(pw).c_str(), detail::fmt_px(ph).c_str());
  svg += b;

  auto text = [&svg](double x, double y, const std::string& s,
                     const char* anchor, const char* extra = "") {
    char t[384];
    std::snprintf(t, sizeof t,
                  "<text x=\"%s\" y=\"%s\" font-family=\"sans-serif\" "
                  "font-size=\"12\" fill=\"#222222\" text-anchor=\"%s\"%s>%s</text>\n",
                  detail::fmt_px(x).c_str(), detail::fmt_px(y).c_str(), anchor,
                  extra, detail::xml_escape(s).c_str());
    svg += t;
  };
  auto seg = [&svg](double x1, double y1, double x2, double y2,
                    const char* style) {
    char t[256];
    std::snprintf(t, sizeof t,
                  "<line x1=\"%s\" y1=\"%s\" x2=\"%s\" y2=\"%s\" %s/>\n",
                  detail::fmt_px(x1).c_str(), detail::fmt_px(y1).c_str(),
                  detail::fmt_px(x2).c_str(), detail::fmt_px(y2).c_str(), style);
    svg += t;
  };

  // Axis ticks.
  for (double tx : detail::nice_ticks(xlo + xpad, xhi - xpad)) {
    if (tx < xlo || tx > xhi) continue;
    seg(X(tx), mT + ph, X(tx), mT + ph + 5, "stroke=\"#333333\" stroke-width=\"1\"");
    text(X(tx), mT + ph + 18, detail::fmt_tick(tx), "middle");
  }
  if (spec.ylog) {
    const int dlo = static_cast<int>(std::ceil(ylo));
    const int dhi = static_cast<int>(std::floor(yhi));
    const int step = std::max(1, (dhi - dlo) / 6);
    for (int d = dlo; d <= dhi; d += step) {
      seg(mL - 5, Y(d), mL, Y(d), "stroke=\"#333333\" stroke-width=\"1\"");
      char lbl[24];
      std::snprintf(lbl, sizeof lbl, "1e%d", d);
      text(mL - 8, Y(d) + 4, lbl, "end");
    }
  } else {
    for (double ty : detail::nice_ticks(ylo + ypad, yhi - ypad)) {
      if (ty < ylo || ty > yhi) continue;
      seg(mL - 5, Y(ty), mL, Y(ty), "stroke=\"#333333\" stroke-width=\"1\"");
      text(mL - 8, Y(ty) + 4, detail::fmt_tick(ty), "end");
    }
  }

  // Markers: vertical dashed lines with labels along the top edge.
  for (const auto& m : spec.markers) {
    if (m.x < xlo || m.x > xhi) continue;
    seg(X(m.x), mT, X(m.x), mT + ph,
        "stroke=\"#999999\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
    if (!m.label.empty()) text(X(m.x) + 3, mT + 12, m.label, "start");
  }

  for (const auto& s : series) {
    std::string pts;
    double px = 0, py = 0;
    bool have_prev = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (spec.ylog && !(s.y[i] > 0)) { have_prev = false; continue; }
      const double yv = ymap(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(yv)) { have_prev = false; continue; }
      if (s.steps && have_prev)
        pts += detail::fmt_px(X(s.x[i])) + "," + detail::fmt_px(Y(py)) + " ";
      pts += detail::fmt_px(X(s.x[i])) + "," + detail::fmt_px(Y(yv)) + " ";
      px = s.x[i]; py = yv; have_prev = true;
      (void)px;
    }
    if (pts.empty()) continue;
    svg += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }

  if (!spec.title.empty()) text(W / 2, 20, spec.title, "middle");
  if (!spec.xlabel.empty()) text(mL + pw / 2, H - 12, spec.xlabel, "middle");
  if (!spec.ylabel.empty()) {
    char extra[128];
    std::snprintf(extra, sizeof extra, " transform=\"rotate(-90 14 %s)\"",
                  detail::fmt_px(mT + ph / 2).c_str());
    text(14, mT + ph / 2, spec.ylabel, "middle", extra);
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// Run configuration: every CLI-visible knob, as resolved for the run.  The
// serialized form round-trips exactly and is embedded in every report.

struct RunConfig {
  std::string command;
  double l1 = 0, l2 = 0, l3 = 0;
  bool dual_model = false;
  std::string alpha_spec = "golden";  // named constant or decimal literal
  double theta = 0;
  double e_value = 0;
  bool has_e = false;
  double e_lo = 0, e_hi = 0;
  int e_n = 0;
  bool has_e_grid = false;
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

inline ojson run_config_to_json(const RunConfig& c) {
  ojson j;
  j["command"] = c.command;
  j["lambda"] = ojson::array({c.l1, c.l2, c.l3});
  j["dual"] = c.dual_model;
  j["alpha"] = c.alpha_spec;
  j["theta"] = c.theta;
  j["e"] = c.has_e ? ojson(c.e_value) : ojson(nullptr);
  if (c.has_e_grid)
    j["e_grid"] = ojson{{"lo", c.e_lo}, {"hi", c.e_hi}, {"n", c.e_n}};
  else
    j["e_grid"] = nullptr;
  j["size"] = c.size;
  j["iters"] = c.iters;
  j["seed"] = c.seed;
  j["k_max"] = c.k_max;
  j["eps0"] = c.eps0;
  j["window"] = c.windows;
  j["tol"] = c.tol;
  j["out"] = c.out_dir;
  j["emit"] = ojson{{"json", c.emit_json}, {"csv", c.emit_csv}, {"svg", c.emit_svg}};
  return j;
}

inline RunConfig run_config_from_json(const ojson& j) {
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.l1 = j.at("lambda").at(0).get<double>();
  c.l2 = j.at("lambda").at(1).get<double>();
  c.l3 = j.at("lambda").at(2).get<double>();
  c.dual_model = j.at("dual").get<bool>();
  c.alpha_spec = j.at("alpha").get<std::string>();
  c.theta = j.at("theta").get<double>();
  c.has_e = !j.at("e").is_null();
  if (c.has_e) c.e_value = j.at("e").get<double>();
  c.has_e_grid = !j.at("e_grid").is_null();
  if (c.has_e_grid) {
    c.e_lo = j.at("e_grid").at("lo").get<double>();
    c.e_hi = j.at("e_grid").at("hi").get<double>();
    c.e_n = j.at("e_grid").at("n").get<int>();
  }
  c.size = j.at("size").get<int>();
  c.iters = j.at("iters").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.k_max = j.at("k_max").get<int>();
  c.eps0 = j.at("eps0").get<double>();
  c.windows = j.at("window").get<std::vector<long>>();
  c.tol = j.at("tol").get<double>();
  c.out_dir = j.at("out").get<std::string>();
  c.emit_json = j.at("emit").at("json").get<bool>();
  c.emit_csv = j.at("emit").at("csv").get<bool>();
  c.emit_svg = j.at("emit").at("svg").get<bool>();
  return c;
}

// ---------------------------------------------------------------------------
// Report: command, resolved config, payload, fitted-constant ledger, wall
// time.  wall_time_s is the last key so reruns differ in that line alone.

struct Report {
  std::string command;
  RunConfig config;
  ojson payload = ojson::object();
  ojson fitted = ojson::object();  // fitted constants are reported, never asserted
  double wall_time_s = 0;
};

inline constexpr int kReportSchemaVersion = 1;

inline ojson report_to_json(const Report& r) {
  ojson j;
  j["schema"] = "ehm-report";
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = r.command;
  j["config"] = run_config_to_json(r.config);
  j["payload"] = r.payload;
  j["fitted_constants"] = r.fitted;
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

}  // namespace ehm
