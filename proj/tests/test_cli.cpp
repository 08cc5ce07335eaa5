#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "spectralab/cli.hpp"
#include "spectralab/config.hpp"
#include "spectralab/runlog.hpp"

using namespace spectralab;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "spectralab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path smoke_config(const fs::path& dir) {
  RunConfig c;
  c.name = "smoke";
  c.dataset.samples = 2000;
  c.training.steps = 10;
  c.training.classifier_epochs = 2;
  c.diagnostics.every = 5;
  c.diagnostics.probe_size = 16;
  c.diagnostics.score_samples = 300;
  c.diagnostics.real_samples = 300;
  c.memorizer.pairs = 40;
  c.memorizer.epochs = 2;
  c.vae.epochs = 1;
  c.output_dir = (dir / "out").string();
  save_config(c, dir / "smoke.json");
  return dir / "smoke.json";
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("train with a smoke config writes a run log") {
  const auto dir = temp_dir("cli_train");
  const Result r = cli({"train", smoke_config(dir).string()});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  CHECK(fs::exists(dir / "out" / "runlog.csv"));
  CHECK(read_runlog_csv(dir / "out" / "runlog.csv").records.back().step == 10);
}

TEST_CASE("common flags override seed and output directory") {
  const auto dir = temp_dir("cli_flags");
  const auto cfg = smoke_config(dir);
  CHECK(cli({"train", cfg.string(), "--seed", "9", "--out", (dir / "other").string()}).code == 0);
  CHECK(load_config(dir / "other" / "config.json").seeds.latent == 9);
  CHECK(cli({"train", cfg.string(), "--out", (dir / "base").string()}).code == 0);
  CHECK(read_file(dir / "other" / "runlog.csv") != read_file(dir / "base" / "runlog.csv"));
}

TEST_CASE("usage errors exit 2 with usage text") {
  const Result flag = cli({"train", "x.json", "--bogus"});
  CHECK(flag.code == 2);
  CHECK(flag.err.find("Usage") != std::string::npos);
  const Result sub = cli({"frobnicate"});
  CHECK(sub.code == 2);
  CHECK(sub.err.find("Usage") != std::string::npos);
  CHECK(cli({}).code == 2);
  CHECK(cli({"sweep", "x.json"}).code == 2);
  CHECK(cli({"spectra", "g.ckpt"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit 1 with a one-line diagnostic") {
  const Result missing = cli({"train", "/nonexistent/config.json"});
  CHECK(missing.code == 1);
  CHECK(lines(missing.err) == 1);
  CHECK(missing.err.find("cannot open config") != std::string::npos);
  const auto dir = temp_dir("cli_bad");
  {
    std::ofstream f(dir / "bad.json");
    f << R"({"schema_version": 1, "unknown": 0})";
  }
  const Result bad = cli({"train", (dir / "bad.json").string()});
  CHECK(bad.code == 1);
  CHECK(lines(bad.err) == 1);
  const Result rep = cli({"report", dir.string()});
  CHECK(rep.code == 1);
  CHECK(rep.err.find("no runs found") != std::string::npos);
}

TEST_CASE("spectra reproduces the terminal spectrum of a run") {
  const auto dir = temp_dir("cli_spectra");
  REQUIRE(cli({"train", smoke_config(dir).string()}).code == 0);
  const RunSummary s = read_summary(dir / "out" / "summary.json");
  const Result r = cli({"spectra", (dir / "out" / "generator.ckpt").string(), "--probe", "16", "--seed", "1234"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto sv = j.at("singular_values").get<Vector>();
  REQUIRE(sv.size() == s.terminal_singular_values.size());
  for (std::size_t k = 0; k < sv.size(); ++k) CHECK(std::abs(sv[k] - s.terminal_singular_values[k]) <= 1e-9);
  CHECK(std::abs(j.at("mean_log_condition").get<double>() - s.terminal.mean_log_cond) <= 1e-9);
}

TEST_CASE("score, memorize, vae, sweep and report subcommands") {
  const auto dir = temp_dir("cli_all");
  const auto cfg = smoke_config(dir);
  REQUIRE(cli({"train", cfg.string()}).code == 0);
  const Result sc = cli({"score", (dir / "out" / "generator.ckpt").string(), "--classifier",
                         (dir / "out" / "classifier.ckpt").string(), "--samples", "200"});
  CHECK(sc.code == 0);
  const double score = nlohmann::json::parse(sc.out).at("classifier_score").get<double>();
  CHECK(score >= 1.0);
  CHECK(score <= 8.0);
  CHECK(cli({"score", (dir / "out" / "generator.ckpt").string(), "--classifier",
             (dir / "out" / "generator.ckpt").string()})
            .code == 1);

  CHECK(cli({"memorize", cfg.string(), "--out", (dir / "mem").string()}).code == 0);
  CHECK(fs::exists(dir / "mem" / "memorizer.json"));
  CHECK(cli({"vae", cfg.string(), "--out", (dir / "vae").string()}).code == 0);
  CHECK(fs::exists(dir / "vae" / "vae.json"));

  const Result sw = cli({"sweep", cfg.string(), "--runs", "2", "--parallel", "2", "--out", (dir / "sweep").string()});
  CHECK(sw.code == 0);
  CHECK(fs::exists(dir / "sweep" / "run_01" / "runlog.csv"));
  const Result rep = cli({"report", (dir / "sweep").string()});
  CHECK(rep.code == 0);
  CHECK(fs::exists(dir / "sweep" / "report" / "spectra.svg"));
}
