#pragma once

// CSV and SVG output for sweep tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "meshfair/error.hpp"
#include "meshfair/sweep.hpp"

namespace meshfair {

inline std::string sig6(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double parse_sig6(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return kNever;
  if (s == "-inf") return -kNever;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError("bad number '" + s + "'");
  }
  if (used != s.size()) throw ParseError("bad number '" + s + "'");
  return v;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "scheme",
      "x",
      "nodes",
      "density",
      "seeds",
      "avg_update_delay_mean",
      "avg_update_delay_std",
      "detection_time_90_mean",
      "detection_time_90_std",
      "overhead_ratio_mean",
      "overhead_ratio_std",
      "detected_fraction_mean",
      "detected_fraction_std",
      "false_positives_mean",
      "false_positives_std",
  };
  return cols;
}

inline void write_csv(std::ostream& os, const SweepTable& table) {
  if (table.rows.empty()) throw InvalidArgument("cannot emit an empty table");
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : table.rows) {
    os << to_string(r.scheme) << ',' << sig6(r.x) << ',' << r.nodes << ',' << sig6(r.density) << ',' << r.seeds;
    for (const Stat* s : {&r.avg_update_delay, &r.detection_time_90, &r.overhead_ratio, &r.detected_fraction,
                          &r.false_positives})
      os << ',' << sig6(s->mean) << ',' << sig6(s->stddev);
    os << '\n';
  }
}

inline SweepTable read_csv(std::istream& is, std::string variable = "") {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty CSV");
  {
    std::string joined;
    for (std::size_t i = 0; i < csv_columns().size(); ++i) joined += (i ? "," : "") + csv_columns()[i];
    if (line != joined) throw ParseError("unexpected CSV header");
  }
  SweepTable table{std::move(variable), {}};
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != csv_columns().size()) throw ParseError("wrong column count in '" + line + "'");
    SweepRow r;
    if (f[0] == "centralized")
      r.scheme = Scheme::Centralized;
    else if (f[0] == "hybrid")
      r.scheme = Scheme::Hybrid;
    else
      throw ParseError("bad scheme '" + f[0] + "'");
    r.x = parse_sig6(f[1]);
    r.nodes = static_cast<std::size_t>(std::stoull(f[2]));
    r.density = parse_sig6(f[3]);
    r.seeds = static_cast<std::size_t>(std::stoull(f[4]));
    Stat* stats[] = {&r.avg_update_delay, &r.detection_time_90, &r.overhead_ratio, &r.detected_fraction,
                     &r.false_positives};
    for (std::size_t i = 0; i < 5; ++i) *stats[i] = {parse_sig6(f[5 + 2 * i]), parse_sig6(f[6 + 2 * i])};
    table.rows.push_back(r);
  }
  return table;
}

// One row per x present for both schemes: relative improvement of hybrid
// over centralized for each metric.
inline void write_improvement_csv(std::ostream& os, const SweepTable& table) {
  os << "x,delay_improvement,detection_improvement,overhead_improvement\n";
  std::map<double, const SweepRow*> cent, hyb;
  for (const auto& r : table.rows) (r.scheme == Scheme::Centralized ? cent : hyb)[r.x] = &r;
  for (const auto& [x, c] : cent) {
    auto it = hyb.find(x);
    if (it == hyb.end()) continue;
    const SweepRow* h = it->second;
    os << sig6(x) << ',' << sig6(improvement(c->avg_update_delay.mean, h->avg_update_delay.mean)) << ','
       << sig6(improvement(c->detection_time_90.mean, h->detection_time_90.mean)) << ','
       << sig6(improvement(c->overhead_ratio.mean, h->overhead_ratio.mean)) << '\n';
  }
}

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  const Stat SweepRow::*metric;
};

// Line chart: x from the table, one series per scheme, error bars of one
// standard deviation. Points with infinite means are skipped.
inline void write_svg(std::ostream& os, const SweepTable& table, const ChartSpec& spec) {
  if (table.rows.empty()) throw InvalidArgument("cannot emit an empty table");
  constexpr double W = 640, H = 420, L = 80, R = 150, T = 40, B = 60;
  double xmin = kNever, xmax = -kNever, ymin = 0.0, ymax = -kNever;
  for (const auto& r : table.rows) {
    const Stat& s = r.*spec.metric;
    if (!std::isfinite(s.mean)) continue;
    xmin = std::min(xmin, r.x);
    xmax = std::max(xmax, r.x);
    ymax = std::max(ymax, s.mean + s.stddev);
    ymin = std::min(ymin, s.mean - s.stddev);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  ymax *= 1.08;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << spec.title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0, yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">" << sig6(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << sig6(yv) << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << py(yv) << "\" x2=\"" << W - R << "\" y2=\"" << py(yv)
       << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << spec.x_label
     << "</text>\n";
  os << "<text transform=\"translate(18," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << spec.y_label << "</text>\n";

  int legend = 0;
  for (Scheme scheme : {Scheme::Centralized, Scheme::Hybrid}) {
    const char* color = scheme == Scheme::Centralized ? "#c0392b" : "#2471a3";
    std::vector<const SweepRow*> pts;
    for (const auto& r : table.rows)
      if (r.scheme == scheme && std::isfinite((r.*spec.metric).mean)) pts.push_back(&r);
    if (pts.empty()) continue;
    std::sort(pts.begin(), pts.end(), [](const SweepRow* a, const SweepRow* b) { return a->x < b->x; });
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : pts) os << px(r->x) << ',' << py((r->*spec.metric).mean) << ' ';
    os << "\"/>\n";
    for (const auto* r : pts) {
      const Stat& s = r->*spec.metric;
      const double x = px(r->x);
      os << "<line x1=\"" << x << "\" y1=\"" << py(s.mean - s.stddev) << "\" x2=\"" << x << "\" y2=\""
         << py(s.mean + s.stddev) << "\" stroke=\"" << color << "\"/>\n";
      os << "<circle cx=\"" << x << "\" cy=\"" << py(s.mean) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = T + 10 + 20 * legend++;
    os << "<line x1=\"" << W - R + 15 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 46 << "\" y=\"" << ly + 4 << "\">" << to_string(scheme) << "</text>\n";
  }
  os << "</svg>\n";
}

inline std::vector<std::pair<std::string, ChartSpec>> standard_charts(const std::string& variable) {
  const std::string suffix = variable == "density" ? "_vs_density.svg" : "_vs_size.svg";
  const std::string xl = variable == "density" ? "density (nodes/m^2)" : "nodes";
  return {
      {"delay" + suffix, {"Average server update delay", xl, "delay (time units)", &SweepRow::avg_update_delay}},
      {"detection" + suffix,
       {"Time to blacklist 90% of malicious nodes", xl, "time (time units)", &SweepRow::detection_time_90}},
      {"overhead" + suffix, {"Fairness traffic overhead ratio", xl, "fairness / total bytes", &SweepRow::overhead_ratio}},
  };
}

template <class Writer>
void write_file(const std::string& path, Writer&& w) {
  std::ostringstream buf;
  w(buf);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << buf.str();
  if (!out) throw IoError("write failed for " + path);
}

// Writes <prefix>.csv, <prefix>_improvement.csv and the three charts into dir.
inline void emit_sweep(const SweepTable& table, const std::string& dir, const std::string& prefix) {
  if (table.rows.empty()) throw InvalidArgument("cannot emit an empty table");
  write_file(dir + "/" + prefix + ".csv", [&](std::ostream& os) { write_csv(os, table); });
  write_file(dir + "/" + prefix + "_improvement.csv", [&](std::ostream& os) { write_improvement_csv(os, table); });
  for (const auto& [name, spec] : standard_charts(table.variable))
    write_file(dir + "/" + name, [&](std::ostream& os) { write_svg(os, table, spec); });
}

}  // namespace meshfair
