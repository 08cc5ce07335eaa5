#include "spectralab/runlog.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace spectralab {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_record(const RunRecord& r) {
  std::string line;
  line += std::to_string(r.step) + ",";
  line += format_double(r.l_d) + ",";
  line += format_double(r.l_g) + ",";
  line += format_double(r.clamp_penalty) + ",";
  line += format_double(r.q_mean) + ",";
  line += format_double(r.q_max) + ",";
  line += format_double(r.mean_log_cond) + ",";
  line += std::to_string(r.floored_points) + ",";
  line += format_double(r.classifier_score) + ",";
  line += format_double(r.frechet_distance) + ",";
  line += std::to_string(r.least_class) + ",";
  line += std::to_string(r.least_count);
  return line;
}

namespace {

template <typename T>
T parse_field(std::string_view text, const char* name) {
  T value{};
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(std::string("bad value for ") + name + ": '" + std::string(text) + "'");
  return value;
}

}  // namespace

RunRecord parse_record(const std::string& line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      f.emplace_back(line.data() + start, i - start);
      start = i + 1;
    }
  if (f.size() != 12) throw Error("expected 12 columns, found " + std::to_string(f.size()));
  RunRecord r;
  r.step = parse_field<std::uint64_t>(f[0], "step");
  r.l_d = parse_field<double>(f[1], "l_d");
  r.l_g = parse_field<double>(f[2], "l_g");
  r.clamp_penalty = parse_field<double>(f[3], "clamp_penalty");
  r.q_mean = parse_field<double>(f[4], "q_mean");
  r.q_max = parse_field<double>(f[5], "q_max");
  r.mean_log_cond = parse_field<double>(f[6], "mean_log_cond");
  r.floored_points = parse_field<std::size_t>(f[7], "floored_points");
  r.classifier_score = parse_field<double>(f[8], "classifier_score");
  r.frechet_distance = parse_field<double>(f[9], "frechet_distance");
  r.least_class = parse_field<std::size_t>(f[10], "least_class");
  r.least_count = parse_field<std::size_t>(f[11], "least_count");
  return r;
}

RunLogCsv read_runlog_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run log " + path.string());
  RunLogCsv out;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line);
      continue;
    }
    if (!header_seen) {
      if (line != kRunLogColumns) throw Error(path.string() + ": unexpected column header");
      header_seen = true;
      continue;
    }
    try {
      RunRecord r = parse_record(line);
      if (!out.records.empty() && r.step <= out.records.back().step) throw Error("steps not strictly increasing");
      out.records.push_back(r);
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw Error(path.string() + ": missing column header");
  return out;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& dir, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  records_.open(dir / "runlog.csv", std::ios::trunc);
  spectra_.open(dir / "spectra.csv", std::ios::trunc);
  if (!records_ || !spectra_) throw Error("cannot create run log files in " + dir.string());
  records_ << "# spectralab runlog v1\n";
  records_ << "# name=" << cfg.name << " diag_every=" << cfg.diagnostics.every
           << " probe_size=" << cfg.diagnostics.probe_size << " steps=" << cfg.training.steps
           << " clamp=" << (cfg.clamp.enabled ? "on" : "off") << " clamp_norm_mode=" << to_string(cfg.clamp.norm_mode)
           << "\n";
  records_ << kRunLogColumns << "\n";
  records_.flush();
  spectra_ << "step,index,singular_value,log_singular_value\n";
  spectra_.flush();
}

void RunLogWriter::append(const RunRecord& record) {
  records_ << format_record(record) << "\n";
  records_.flush();
}

void RunLogWriter::append_spectrum(const SpectrumSnapshot& s) {
  for (std::size_t k = 0; k < s.singular_values.size(); ++k)
    spectra_ << s.step << "," << k << "," << format_double(s.singular_values[k]) << ","
             << format_double(s.log_singular_values[k]) << "\n";
  spectra_.flush();
}

namespace {

json record_json(const RunRecord& r) {
  return json{{"step", r.step},
              {"l_d", r.l_d},
              {"l_g", r.l_g},
              {"clamp_penalty", r.clamp_penalty},
              {"q_mean", r.q_mean},
              {"q_max", r.q_max},
              {"mean_log_cond", r.mean_log_cond},
              {"floored_points", r.floored_points},
              {"classifier_score", r.classifier_score},
              {"frechet_distance", r.frechet_distance},
              {"least_class", r.least_class},
              {"least_count", r.least_count}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.step = j.at("step").get<std::uint64_t>();
  r.l_d = j.at("l_d").get<double>();
  r.l_g = j.at("l_g").get<double>();
  r.clamp_penalty = j.at("clamp_penalty").get<double>();
  r.q_mean = j.at("q_mean").get<double>();
  r.q_max = j.at("q_max").get<double>();
  r.mean_log_cond = j.at("mean_log_cond").get<double>();
  r.floored_points = j.at("floored_points").get<std::size_t>();
  r.classifier_score = j.at("classifier_score").get<double>();
  r.frechet_distance = j.at("frechet_distance").get<double>();
  r.least_class = j.at("least_class").get<std::size_t>();
  r.least_count = j.at("least_count").get<std::size_t>();
  return r;
}

}  // namespace

void write_summary(const RunLog& log, const std::filesystem::path& path) {
  json j;
  j["name"] = log.config.name;
  j["status"] = log.status == RunStatus::completed ? "completed" : "aborted";
  if (log.status == RunStatus::aborted) j["abort_message"] = log.abort_message;
  j["diag_every"] = log.config.diagnostics.every;
  j["steps_recorded"] = log.records.size();
  if (!log.records.empty()) j["terminal"] = record_json(log.terminal());
  if (!log.spectra.empty()) {
    j["terminal_spectrum"] = {{"step", log.terminal_spectrum().step},
                              {"singular_values", log.terminal_spectrum().singular_values},
                              {"log_singular_values", log.terminal_spectrum().log_singular_values}};
  }
  j["terminal_mode_counts"] = log.terminal_mode_counts;
  j["terminal_mean_log_determinant"] = log.terminal_mean_log_determinant;
  j["classifier_heldout_accuracy"] = log.classifier_accuracy;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

RunSummary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open summary " + path.string());
  try {
    const json j = json::parse(in);
    RunSummary s;
    s.name = j.at("name").get<std::string>();
    s.status = j.at("status").get<std::string>() == "completed" ? RunStatus::completed : RunStatus::aborted;
    if (j.contains("abort_message")) s.abort_message = j["abort_message"].get<std::string>();
    if (j.contains("terminal")) s.terminal = record_from_json(j["terminal"]);
    if (j.contains("terminal_spectrum")) {
      s.terminal_singular_values = j["terminal_spectrum"].at("singular_values").get<Vector>();
      s.terminal_log_singular_values = j["terminal_spectrum"].at("log_singular_values").get<Vector>();
    }
    s.terminal_mode_counts = j.at("terminal_mode_counts").get<std::vector<std::size_t>>();
    return s;
  } catch (const json::exception& e) {
    throw Error(path.string() + ": corrupt summary: " + e.what());
  }
}

}  // namespace spectralab
