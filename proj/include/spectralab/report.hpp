#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spectralab/runlog.hpp"

namespace spectralab {

/// Per-index spectrum rows of spectra.csv.
struct SpectraCsv {
  std::vector<SpectrumSnapshot> snapshots;  // one per recorded step, ascending
};

SpectraCsv read_spectra_csv(const std::filesystem::path& path);

struct ReportRun {
  std::string name;  // directory name relative to the report root
  std::vector<RunRecord> records;
  SpectrumSnapshot terminal_spectrum;
};

struct ReportResult {
  std::vector<ReportRun> runs;
  std::vector<std::filesystem::path> written;
  std::vector<std::string> problems;  // one entry per unreadable run
};

/// Run directories are `root` itself or its immediate subdirectories holding a
/// runlog.csv, sorted by name.
std::vector<std::filesystem::path> find_run_dirs(const std::filesystem::path& root);

/// Writes timeseries.csv, summary.csv and four SVG charts into root/report.
/// Throws Error when no readable run is found.
ReportResult report(const std::filesystem::path& root);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Polyline chart with axes, ticks and a legend; colors cycle per series.
std::string render_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                              const std::vector<Series>& series);

}  // namespace spectralab
