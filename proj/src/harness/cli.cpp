#include "spectralab/cli.hpp"

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectralab/checkpoint.hpp"
#include "spectralab/experiment.hpp"
#include "spectralab/report.hpp"

namespace spectralab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Seed override");
  cmd->add_option("--out", c.out, "Output directory");
}

RunConfig configured(const std::string& path, const Common& c) {
  RunConfig cfg = load_config(path);
  if (c.seed) cfg.seeds.set_run_seed(*c.seed);
  if (c.out) cfg.output_dir = *c.out;
  return cfg;
}

void write_json(const json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << j.dump(2) << "\n";
}

json spectrum_json(const SingularSpectrum& s) {
  return {{"singular_values", s.singular_values}, {"log_singular_values", s.log_singular_values}};
}

json condition_json(const ConditionSeries& c) {
  return {{"mean_log_condition", c.mean},
          {"mean_log_determinant", c.mean_log_determinant},
          {"floored_points", c.floored_points}};
}

std::string one_line(std::string msg) {
  for (std::size_t pos = 0; (pos = msg.find('\n', pos)) != std::string::npos;) msg.replace(pos, 1, "; ");
  return msg;
}

int cmd_train(const std::string& config, const Common& c, std::ostream& out) {
  const RunConfig cfg = configured(config, c);
  const RunLog log = run_experiment(cfg);
  const RunRecord& t = log.terminal();
  out << "run " << cfg.output_dir << ": " << (log.status == RunStatus::completed ? "completed" : "aborted")
      << " step=" << t.step << " mean_log_cond=" << format_double(t.mean_log_cond)
      << " classifier_score=" << format_double(t.classifier_score)
      << " frechet_distance=" << format_double(t.frechet_distance) << " least_count=" << t.least_count << "\n";
  if (log.status == RunStatus::aborted) throw Error("training diverged: " + log.abort_message);
  return 0;
}

int cmd_sweep(const std::string& config, const Common& c, std::size_t runs, std::size_t parallel,
              std::ostream& out, std::ostream& err) {
  const RunConfig cfg = configured(config, c);
  SweepOptions opts;
  opts.n_runs = runs;
  opts.parallel = parallel;
  opts.on_run_done = [&](std::size_t i, const RunLog& log) {
    out << run_dir_name(i) << " " << (log.status == RunStatus::completed ? "completed" : "aborted")
        << " frechet_distance=" << format_double(log.terminal().frechet_distance) << "\n";
  };
  const SweepResult r = sweep(cfg, opts);
  for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
  const ClusterSummary& s = r.summary;
  out << "sweep " << cfg.output_dir << ": " << s.runs.size() << " runs"
      << " mean_log_cond=" << format_double(s.mean_log_cond_mean) << " (var " << format_double(s.mean_log_cond_variance)
      << ") frechet_distance=" << format_double(s.frechet_mean) << " (var " << format_double(s.frechet_variance)
      << ")\n";
  if (!r.failures.empty()) {
    std::string msg = std::to_string(r.failures.size()) + " run(s) failed";
    for (const std::string& f : r.failures) msg += "; " + f;
    throw Error(msg);
  }
  return 0;
}

int cmd_spectra(const std::string& ckpt, std::size_t probe_size, const Common& c, std::ostream& out) {
  const Mlp g = load_checkpoint(ckpt);
  Rng rng = Rng::stream(c.seed.value_or(SeedSpec{}.probe), "probe");
  const LatentBatch probe = sample_latent(probe_size, g.input_dim(), rng, "probe");
  const SingularSpectrum spec = average_jacobian_spectrum(g, probe.z);
  const ConditionSeries cond = mean_log_condition(g, probe.z);
  json j = spectrum_json(spec);
  j["checkpoint"] = ckpt;
  j["probe_size"] = probe_size;
  j.update(condition_json(cond));
  if (c.out) write_json(j, fs::path(*c.out) / "spectra.json");
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_score(const std::string& ckpt, const std::string& classifier, std::size_t samples, const Common& c,
              std::ostream& out) {
  const Mlp g = load_checkpoint(ckpt);
  const Mlp clf = load_checkpoint(classifier);
  if (clf.input_dim() != g.output_dim())
    throw DimensionError("classifier input width " + std::to_string(clf.input_dim()) + " does not match generator output " +
                         std::to_string(g.output_dim()));
  Rng rng = Rng::stream(c.seed.value_or(SeedSpec{}.probe), "score");
  const Matrix x = forward(g, sample_latent(samples, g.input_dim(), rng, "score").z);
  const ModeReport modes = mode_report(x, clf);
  json j{{"checkpoint", ckpt},
         {"samples", samples},
         {"classifier_score", classifier_score(x, clf)},
         {"mode_counts", modes.counts},
         {"least_class", modes.least_sampled_class},
         {"least_count", modes.least_count}};
  if (c.out) write_json(j, fs::path(*c.out) / "score.json");
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_memorize(const std::string& config, const Common& c, std::ostream& out) {
  const RunConfig cfg = configured(config, c);
  const SharedResources shared = prepare_shared(cfg);
  Rng rng = Rng::stream(cfg.seeds.init, "memorizer");
  const MemorizerReport rep = run_memorizer(cfg, shared, rng);
  json j{{"pairs", rep.result.z.rows()},
         {"duplicated_index", rep.result.duplicated_index},
         {"final_mse", rep.result.final_mse},
         {"memorized_classifier_score", rep.memorized_score},
         {"fresh_classifier_score", rep.fresh_score},
         {"memorized_frechet_distance", rep.memorized_frechet},
         {"fresh_frechet_distance", rep.fresh_frechet},
         {"fresh_least_count", rep.fresh_modes.least_count}};
  j.update(condition_json(rep.condition));
  const fs::path dir = cfg.output_dir;
  write_json(j, dir / "memorizer.json");
  save_checkpoint(rep.result.generator, dir / "generator.ckpt");
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_vae(const std::string& config, const Common& c, std::ostream& out) {
  const RunConfig cfg = configured(config, c);
  const SharedResources shared = prepare_shared(cfg);
  Rng rng = Rng::stream(cfg.seeds.init, "vae");
  const VaeReport rep = run_vae(cfg, shared, rng);
  json j = spectrum_json(rep.average_spectrum);
  j["epoch_losses"] = rep.result.epoch_losses;
  j.update(condition_json(rep.condition));
  const fs::path dir = cfg.output_dir;
  write_json(j, dir / "vae.json");
  save_checkpoint(rep.result.encoder, dir / "encoder.ckpt");
  save_checkpoint(rep.result.decoder, dir / "decoder.ckpt");
  out << j.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& dir, std::ostream& out) {
  const ReportResult r = report(dir);
  for (const fs::path& p : r.written) out << p.string() << "\n";
  if (!r.problems.empty()) {
    std::string msg = std::to_string(r.problems.size()) + " unreadable run(s)";
    for (const std::string& p : r.problems) msg += "; " + p;
    throw Error(msg);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generator Jacobian spectra and Jacobian Clamping experiments", "spectralab"};
  app.require_subcommand(1);

  Common common;
  std::string config, ckpt, classifier, dir;
  std::size_t runs = 10, parallel = 1, probe = 64, samples = 5000;

  auto* train = app.add_subcommand("train", "Train one GAN run");
  train->add_option("config", config, "Run config (JSON)")->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "Train seeded runs of one config");
  sweep_cmd->add_option("config", config, "Run config (JSON)")->required();
  sweep_cmd->add_option("--runs", runs, "Number of runs")->required()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--parallel", parallel, "Concurrent runs")->check(CLI::PositiveNumber);
  auto* spectra = app.add_subcommand("spectra", "Spectrum of a saved generator");
  spectra->add_option("checkpoint", ckpt, "Generator checkpoint")->required();
  spectra->add_option("--probe", probe, "Probe batch size")->required()->check(CLI::PositiveNumber);
  auto* score = app.add_subcommand("score", "Classifier score of a saved generator");
  score->add_option("checkpoint", ckpt, "Generator checkpoint")->required();
  score->add_option("--classifier", classifier, "Classifier checkpoint")->required();
  score->add_option("--samples", samples, "Generated samples")->check(CLI::PositiveNumber);
  auto* memorize = app.add_subcommand("memorize", "Train a memorizing generator");
  memorize->add_option("config", config, "Run config (JSON)")->required();
  auto* vae = app.add_subcommand("vae", "Train VAE baselines");
  vae->add_option("config", config, "Run config (JSON)")->required();
  auto* report_cmd = app.add_subcommand("report", "CSV tables and SVG charts for run directories");
  report_cmd->add_option("dir", dir, "Directory of runs")->required();
  for (CLI::App* cmd : {train, sweep_cmd, spectra, score, memorize, vae, report_cmd}) add_common(cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "spectralab: " << e.what() << "\n";
    CLI::App* sub = nullptr;
    for (CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(config, common, out);
    if (sweep_cmd->parsed()) return cmd_sweep(config, common, runs, parallel, out, err);
    if (spectra->parsed()) return cmd_spectra(ckpt, probe, common, out);
    if (score->parsed()) return cmd_score(ckpt, classifier, samples, common, out);
    if (memorize->parsed()) return cmd_memorize(config, common, out);
    if (vae->parsed()) return cmd_vae(config, common, out);
    if (report_cmd->parsed()) return cmd_report(dir, out);
  } catch (const std::exception& e) {
    err << "spectralab: error: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 2;
}

}  // namespace spectralab
