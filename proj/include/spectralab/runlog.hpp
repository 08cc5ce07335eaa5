#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spectralab/config.hpp"
#include "spectralab/diagnostics.hpp"

namespace spectralab {

/// One diagnostic row. Loss fields come from the training step that ended at
/// `step` (step 0 evaluates them on a held batch without updating).
struct RunRecord {
  std::uint64_t step = 0;
  double l_d = 0.0;
  double l_g = 0.0;
  double clamp_penalty = 0.0;
  double q_mean = 0.0;
  double q_max = 0.0;
  double mean_log_cond = 0.0;
  std::size_t floored_points = 0;
  double classifier_score = 0.0;
  double frechet_distance = 0.0;
  std::size_t least_class = 0;
  std::size_t least_count = 0;

  bool operator==(const RunRecord&) const = default;
};

struct SpectrumSnapshot {
  std::uint64_t step = 0;
  Vector singular_values;
  Vector log_singular_values;
};

enum class RunStatus { completed, aborted };

struct RunLog {
  RunConfig config;
  std::vector<RunRecord> records;
  std::vector<SpectrumSnapshot> spectra;
  RunStatus status = RunStatus::completed;
  std::string abort_message;
  StepMetrics last_step;  // most recent training step, kept when a run aborts
  std::vector<std::size_t> terminal_mode_counts;
  double terminal_mean_log_determinant = 0.0;
  double classifier_accuracy = 0.0;

  const RunRecord& terminal() const { return records.back(); }
  const SpectrumSnapshot& terminal_spectrum() const { return spectra.back(); }
};

inline constexpr const char* kRunLogColumns =
    "step,l_d,l_g,clamp_penalty,q_mean,q_max,mean_log_cond,floored_points,classifier_score,frechet_distance,"
    "least_class,least_count";

/// Shortest representation that parses back to the same double.
std::string format_double(double x);
std::string format_record(const RunRecord& r);
RunRecord parse_record(const std::string& line);

/// Lines starting with '#' carry metadata (schema, cadence) ahead of the column header.
struct RunLogCsv {
  std::vector<std::string> comments;
  std::vector<RunRecord> records;
};

/// Throws Error naming the file on any malformed or out-of-order row.
RunLogCsv read_runlog_csv(const std::filesystem::path& path);

/// Append-only writer; every line is flushed so an interrupted run leaves a
/// parseable prefix.
class RunLogWriter {
 public:
  RunLogWriter(const std::filesystem::path& dir, const RunConfig& cfg);
  void append(const RunRecord& record);
  void append_spectrum(const SpectrumSnapshot& snapshot);

 private:
  std::ofstream records_;
  std::ofstream spectra_;
};

void write_summary(const RunLog& log, const std::filesystem::path& path);

struct RunSummary {
  std::string name;
  RunStatus status = RunStatus::completed;
  std::string abort_message;
  RunRecord terminal;
  Vector terminal_singular_values;
  Vector terminal_log_singular_values;
  std::vector<std::size_t> terminal_mode_counts;
};

RunSummary read_summary(const std::filesystem::path& path);

}  // namespace spectralab
