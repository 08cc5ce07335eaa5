#include "spectralab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "spectralab/error.hpp"

namespace spectralab {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof kPalette / sizeof kPalette[0];

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Round step for roughly five ticks over [lo, hi].
double tick_step(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double nice = r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? std::abs(lo) * 0.1 : 1.0;
    lo -= pad;
    hi += pad;
  }
}

void write_text(const fs::path& path, const std::string& text, ReportResult& out) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  out.written.push_back(path);
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series) {
  const double width = 720, height = 440;
  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = width - left - right, ph = height - top - bottom;

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  widen(xlo, xhi);
  widen(ylo, yhi);
  const double ystep = tick_step(ylo, yhi);
  ylo = std::floor(ylo / ystep) * ystep;
  yhi = std::ceil(yhi / ystep) * ystep;
  const double xstep = tick_step(xlo, xhi);

  auto sx = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
  auto sy = [&](double y) { return top + (yhi - y) / (yhi - ylo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << px(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<g stroke=\"#ddd\">\n";
  for (double y = ylo; y <= yhi + ystep * 1e-9; y += ystep)
    o << "<line x1=\"" << px(left) << "\" y1=\"" << px(sy(y)) << "\" x2=\"" << px(left + pw) << "\" y2=\""
      << px(sy(y)) << "\"/>\n";
  o << "</g>\n";
  o << "<g stroke=\"black\">\n";
  o << "<line x1=\"" << px(left) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(left + pw) << "\" y2=\""
    << px(top + ph) << "\"/>\n";
  o << "<line x1=\"" << px(left) << "\" y1=\"" << px(top) << "\" x2=\"" << px(left) << "\" y2=\"" << px(top + ph)
    << "\"/>\n";
  o << "</g>\n";
  for (double y = ylo; y <= yhi + ystep * 1e-9; y += ystep) {
    const double v = std::abs(y) < ystep * 1e-9 ? 0.0 : y;
    o << "<text x=\"" << px(left - 6) << "\" y=\"" << px(sy(y) + 4) << "\" text-anchor=\"end\">" << num(v)
      << "</text>\n";
  }
  for (double x = std::ceil(xlo / xstep) * xstep; x <= xhi + xstep * 1e-9; x += xstep) {
    const double v = std::abs(x) < xstep * 1e-9 ? 0.0 : x;
    o << "<line x1=\"" << px(sx(x)) << "\" y1=\"" << px(top + ph) << "\" x2=\"" << px(sx(x)) << "\" y2=\""
      << px(top + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << px(sx(x)) << "\" y=\"" << px(top + ph + 18) << "\" text-anchor=\"middle\">" << num(v)
      << "</text>\n";
  }
  o << "<text x=\"" << px(left + pw / 2) << "\" y=\"" << px(height - 12) << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18 " << px(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % kPaletteSize];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!first) o << " ";
      o << px(sx(s.x[i])) << "," << px(sy(s.y[i]));
      first = false;
    }
    o << "\"/>\n";
    const double ly = top + 10 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << px(left + pw + 15) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(left + pw + 35)
      << "\" y2=\"" << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << px(left + pw + 40) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

SpectraCsv read_spectra_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spectra log " + path.string());
  SpectraCsv out;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!header) {
      if (line != "step,index,singular_value,log_singular_value")
        throw Error(path.string() + ": unexpected column header");
      header = true;
      continue;
    }
    unsigned long long step = 0, index = 0;
    double sv = 0, lsv = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%llu,%llu,%lf,%lf%c", &step, &index, &sv, &lsv, &tail) != 4)
      throw Error(path.string() + ":" + std::to_string(line_no) + ": malformed spectrum row");
    if (out.snapshots.empty() || out.snapshots.back().step != step) {
      if (!out.snapshots.empty() && step < out.snapshots.back().step)
        throw Error(path.string() + ":" + std::to_string(line_no) + ": steps not increasing");
      out.snapshots.push_back({step, {}, {}});
    }
    SpectrumSnapshot& snap = out.snapshots.back();
    if (index != snap.singular_values.size())
      throw Error(path.string() + ":" + std::to_string(line_no) + ": spectrum index out of order");
    snap.singular_values.push_back(sv);
    snap.log_singular_values.push_back(lsv);
  }
  if (!header) throw Error(path.string() + ": missing column header");
  return out;
}

std::vector<fs::path> find_run_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error("report: " + root.string() + " is not a directory");
  std::vector<fs::path> dirs;
  if (fs::exists(root / "runlog.csv")) dirs.push_back(root);
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "runlog.csv")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

ReportResult report(const fs::path& root) {
  const std::vector<fs::path> dirs = find_run_dirs(root);
  if (dirs.empty()) throw Error("report: no runs found under " + root.string());

  ReportResult out;
  for (const fs::path& dir : dirs) {
    const std::string name = dir == root ? std::string(".") : dir.filename().string();
    try {
      ReportRun run;
      run.name = name;
      run.records = read_runlog_csv(dir / "runlog.csv").records;
      if (run.records.empty()) throw Error((dir / "runlog.csv").string() + ": no records");
      const SpectraCsv spectra = read_spectra_csv(dir / "spectra.csv");
      if (!spectra.snapshots.empty()) run.terminal_spectrum = spectra.snapshots.back();
      out.runs.push_back(std::move(run));
    } catch (const std::exception& e) {
      out.problems.push_back(name + ": " + e.what());
    }
  }
  if (out.runs.empty()) {
    std::string msg = "report: no readable runs under " + root.string();
    for (const std::string& p : out.problems) msg += "\n  " + p;
    throw Error(msg);
  }

  const fs::path dest = root / "report";
  fs::create_directories(dest);

  std::string ts = std::string("run,") + kRunLogColumns + "\n";
  std::string summary = "run,steps_recorded,terminal_step,mean_log_cond,classifier_score,frechet_distance,"
                        "least_class,least_count\n";
  for (const ReportRun& r : out.runs) {
    for (const RunRecord& rec : r.records) ts += r.name + "," + format_record(rec) + "\n";
    const RunRecord& t = r.records.back();
    summary += r.name + "," + std::to_string(r.records.size()) + "," + std::to_string(t.step) + "," +
               format_double(t.mean_log_cond) + "," + format_double(t.classifier_score) + "," +
               format_double(t.frechet_distance) + "," + std::to_string(t.least_class) + "," +
               std::to_string(t.least_count) + "\n";
  }
  write_text(dest / "timeseries.csv", ts, out);
  write_text(dest / "summary.csv", summary, out);

  auto chart = [&](const char* file, const char* title, const char* y_label, double RunRecord::*field) {
    std::vector<Series> series;
    for (const ReportRun& r : out.runs) {
      Series s{r.name, {}, {}};
      for (const RunRecord& rec : r.records) {
        s.x.push_back(static_cast<double>(rec.step));
        s.y.push_back(rec.*field);
      }
      series.push_back(std::move(s));
    }
    write_text(dest / file, render_line_chart(title, "training step", y_label, series), out);
  };
  chart("mean_log_condition.svg", "Mean log-condition number", "mean log condition", &RunRecord::mean_log_cond);
  chart("classifier_score.svg", "Classifier score", "score", &RunRecord::classifier_score);
  chart("frechet_distance.svg", "Frechet distance", "distance", &RunRecord::frechet_distance);

  std::vector<Series> spectra;
  for (const ReportRun& r : out.runs) {
    Series s{r.name, {}, r.terminal_spectrum.log_singular_values};
    for (std::size_t k = 0; k < s.y.size(); ++k) s.x.push_back(static_cast<double>(k));
    spectra.push_back(std::move(s));
  }
  write_text(dest / "spectra.svg",
             render_line_chart("Terminal log spectrum of the average Jacobian", "singular value index",
                               "log singular value", spectra),
             out);
  return out;
}

}  // namespace spectralab
