#include "toptag/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "toptag/error.hpp"

namespace toptag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s, int line_no) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

template <typename Int>
Int to_int(std::string_view s, int line_no) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

SolverKind to_solver(std::string_view s, int line_no) {
  for (SolverKind k : kAllSolvers)
    if (s == solver_name(k)) return k;
  throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + ": unknown solver '" + std::string(s) + "'");
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "NaN";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<TrialRow> trial_rows(const std::vector<TrialRecord>& records, const std::array<bool, 3>& solvers) {
  std::vector<TrialRow> rows;
  for (const auto& rec : records) {
    for (SolverKind kind : kAllSolvers) {
      const auto i = static_cast<std::size_t>(kind);
      const SolverOutcome& out = rec.solvers[i];
      if (rec.dropped ? !solvers[i] : !out.ran) continue;
      TrialRow r;
      r.trial = rec.trial;
      r.x = rec.sample.pose.x;
      r.y = rec.sample.pose.y;
      r.phi = rec.sample.pose.phi * kRadToDeg;
      r.delta = rec.sample.delta;
      r.dist = rec.sample.distance;
      r.solver = kind;
      r.dropped = rec.dropped;
      if (rec.dropped || out.failed) {
        r.est_x = r.est_y = r.est_phi = r.pos_err = r.ang_err = kNaN;
        r.converged = false;
      } else {
        r.est_x = out.estimate.horizontal.x;
        r.est_y = out.estimate.horizontal.y;
        r.est_phi = out.estimate.horizontal.phi * kRadToDeg;
        r.pos_err = out.position_error;
        r.ang_err = out.orientation_error * kRadToDeg;
        r.converged = out.estimate.converged;
      }
      rows.push_back(r);
    }
  }
  return rows;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kTrialsHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial << ',' << format_number(r.x) << ',' << format_number(r.y) << ',' << format_number(r.phi)
        << ',' << format_number(r.delta) << ',' << format_number(r.dist) << ',' << solver_name(r.solver)
        << ',' << format_number(r.est_x) << ',' << format_number(r.est_y) << ','
        << format_number(r.est_phi) << ',' << format_number(r.pos_err) << ',' << format_number(r.ang_err)
        << ',' << (r.converged ? 1 : 0) << ',' << (r.dropped ? 1 : 0) << '\n';
  }
}

std::vector<TrialRow> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kTrialsHeader) {
    throw Error(ErrorCode::IoFailure, "trials CSV header mismatch");
  }
  std::vector<TrialRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 14) {
      throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + ": expected 14 fields");
    }
    TrialRow r;
    r.trial = to_int<std::uint64_t>(f[0], line_no);
    r.x = to_double(f[1], line_no);
    r.y = to_double(f[2], line_no);
    r.phi = to_double(f[3], line_no);
    r.delta = to_double(f[4], line_no);
    r.dist = to_double(f[5], line_no);
    r.solver = to_solver(f[6], line_no);
    r.est_x = to_double(f[7], line_no);
    r.est_y = to_double(f[8], line_no);
    r.est_phi = to_double(f[9], line_no);
    r.pos_err = to_double(f[10], line_no);
    r.ang_err = to_double(f[11], line_no);
    r.converged = to_int<int>(f[12], line_no) != 0;
    r.dropped = to_int<int>(f[13], line_no) != 0;
    rows.push_back(r);
  }
  return rows;
}

std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_trials_csv(in);
}

std::array<bool, 3> solvers_present(const std::vector<TrialRow>& rows) {
  std::array<bool, 3> present = {false, false, false};
  for (const auto& r : rows) present[static_cast<std::size_t>(r.solver)] = true;
  return present;
}

std::vector<DistanceBinStats> bin_by_distance(const std::vector<TrialRow>& rows, int min_bin_count) {
  struct Acc {
    int count = 0;
    double pos_sq = 0.0, pos_max = 0.0, ang_sq = 0.0;
  };
  std::map<long, std::array<Acc, 3>> bins;
  for (const auto& r : rows) {
    if (r.dropped || !std::isfinite(r.pos_err) || !std::isfinite(r.ang_err) || !std::isfinite(r.dist)) continue;
    Acc& a = bins[std::lround(r.dist)][static_cast<std::size_t>(r.solver)];
    const double ang = r.ang_err / kRadToDeg;
    ++a.count;
    a.pos_sq += r.pos_err * r.pos_err;
    a.pos_max = std::max(a.pos_max, r.pos_err);
    a.ang_sq += ang * ang;
  }
  std::vector<DistanceBinStats> out;
  for (const auto& [d, accs] : bins) {
    DistanceBinStats b;
    b.distance = static_cast<int>(d);
    for (std::size_t s = 0; s < 3; ++s) {
      const Acc& a = accs[s];
      SolverBinStats& st = b.solvers[s];
      st.count = a.count;
      if (a.count == 0) {
        st.pos_rms = st.pos_max = st.ang_rms = kNaN;
        continue;
      }
      st.pos_rms = std::sqrt(a.pos_sq / a.count);
      st.pos_max = a.pos_max;
      st.ang_rms = std::sqrt(a.ang_sq / a.count);
      if (a.count < min_bin_count) b.sparse = true;
    }
    out.push_back(b);
  }
  return out;
}

void write_stats_csv(std::ostream& out, const std::vector<DistanceBinStats>& stats,
                     const std::array<bool, 3>& solvers) {
  out << kStatsHeader << '\n';
  for (const auto& b : stats) {
    for (SolverKind kind : kAllSolvers) {
      const auto s = static_cast<std::size_t>(kind);
      if (!solvers[s]) continue;
      const SolverBinStats& st = b.solvers[s];
      const bool empty = st.count == 0;
      out << b.distance << ',' << solver_name(kind) << ',' << st.count << ','
          << format_number(empty ? kNaN : st.pos_rms) << ',' << format_number(empty ? kNaN : st.pos_max) << ','
          << format_number(empty ? kNaN : st.ang_rms * kRadToDeg) << '\n';
    }
  }
}

ParsedStats parse_stats_csv(std::istream& in, int min_bin_count) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kStatsHeader) {
    throw Error(ErrorCode::IoFailure, "stats CSV header mismatch");
  }
  ParsedStats parsed;
  std::map<int, DistanceBinStats> bins;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw Error(ErrorCode::IoFailure, "line " + std::to_string(line_no) + ": expected 6 fields");
    const int d = to_int<int>(f[0], line_no);
    const auto s = static_cast<std::size_t>(to_solver(f[1], line_no));
    parsed.solvers[s] = true;
    DistanceBinStats& b = bins[d];
    b.distance = d;
    SolverBinStats& st = b.solvers[s];
    st.count = to_int<int>(f[2], line_no);
    st.pos_rms = to_double(f[3], line_no);
    st.pos_max = to_double(f[4], line_no);
    st.ang_rms = to_double(f[5], line_no) / kRadToDeg;
    if (st.count > 0 && st.count < min_bin_count) b.sparse = true;
  }
  for (auto& [d, b] : bins) parsed.bins.push_back(b);
  return parsed;
}

std::vector<Polyline> plot_polylines(const ParsedStats& stats, PlotMetric metric) {
  std::vector<Polyline> lines;
  for (SolverKind kind : kAllSolvers) {
    const auto s = static_cast<std::size_t>(kind);
    if (!stats.solvers[s]) continue;
    Polyline line;
    line.solver = kind;
    for (const auto& b : stats.bins) {
      const SolverBinStats& st = b.solvers[s];
      const double v = metric == PlotMetric::PositionRms ? st.pos_rms : st.ang_rms * kRadToDeg;
      if (st.count > 0 && std::isfinite(v)) line.points.push_back({static_cast<double>(b.distance), v});
    }
    if (!line.points.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::string render_svg(const std::vector<Polyline>& lines, PlotMetric metric) {
  constexpr double W = 640, H = 420, left = 70, right = 120, top = 30, bottom = 55;
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& l : lines)
    for (const auto& p : l.points) {
      xmin = std::min(xmin, p[0]);
      xmax = std::max(xmax, p[0]);
      ymax = std::max(ymax, p[1]);
    }
  if (xmin > xmax) xmin = 0.0, xmax = 1.0;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.1;
  const double pw = W - left - right, ph = H - top - bottom;
  const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto sy = [&](double y) { return top + ph - y / ymax * ph; };
  const auto fmt = [](double v, const char* f) {
    char buf[48];
    std::snprintf(buf, sizeof buf, f, v);
    return std::string(buf);
  };

  static constexpr const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c"};
  static constexpr const char* kLabels[] = {"Bas.", "H.Opt.", "S.Opt."};
  const std::string ylabel = metric == PlotMetric::PositionRms ? "position RMS error (m)" : "orientation RMS error (deg)";

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  // Axes and ticks.
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  const int xstep = std::max(1, static_cast<int>(std::ceil((xmax - xmin) / 12.0)));
  for (int x = static_cast<int>(std::ceil(xmin)); x <= xmax; x += xstep) {
    svg << "<line x1=\"" << fmt(sx(x), "%.2f") << "\" y1=\"" << top + ph << "\" x2=\"" << fmt(sx(x), "%.2f")
        << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(sx(x), "%.2f") << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << x
        << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double y = ymax * i / 5.0;
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << fmt(sy(y), "%.2f") << "\" x2=\"" << left << "\" y2=\""
        << fmt(sy(y), "%.2f") << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << left - 8 << "\" y=\"" << fmt(sy(y) + 4, "%.2f") << "\" text-anchor=\"end\">"
        << fmt(y, "%.3g") << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">horizontal distance to RSU (m)</text>\n";
  svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
      << "</text>\n";
  int legend = 0;
  for (const auto& l : lines) {
    const auto s = static_cast<std::size_t>(l.solver);
    svg << "<polyline fill=\"none\" stroke=\"" << kColors[s] << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < l.points.size(); ++i) {
      svg << (i ? " " : "") << fmt(sx(l.points[i][0]), "%.2f") << ',' << fmt(sy(l.points[i][1]), "%.2f");
    }
    svg << "\"/>\n";
    const double ly = top + 10 + 20 * legend++;
    svg << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
        << "\" stroke=\"" << kColors[s] << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << kLabels[s] << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

void emit_report(const std::vector<DistanceBinStats>& stats, const std::array<bool, 3>& solvers,
                 const std::filesystem::path& out_dir) {
  if (stats.empty()) throw Error(ErrorCode::InvalidArgument, "no statistics to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out_dir.string());

  std::ostringstream csv;
  write_stats_csv(csv, stats, solvers);
  std::istringstream reparse(csv.str());
  const ParsedStats parsed = parse_stats_csv(reparse);

  const auto write_file = [&](const std::string& name, const std::string& body) {
    std::ofstream out(out_dir / name, std::ios::binary);
    out << body;
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + (out_dir / name).string());
  };
  write_file("stats.csv", csv.str());
  write_file("pos_rms.svg", render_svg(plot_polylines(parsed, PlotMetric::PositionRms), PlotMetric::PositionRms));
  write_file("ang_rms.svg", render_svg(plot_polylines(parsed, PlotMetric::OrientationRms), PlotMetric::OrientationRms));
}

}  // namespace toptag
