#include "spectralab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <json.hpp>

#include "spectralab/checkpoint.hpp"

namespace spectralab {

Dataset build_dataset(const RunConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  if (d.kind == "ring") {
    Rng rng = Rng::stream(cfg.seeds.data, "data");
    return make_ring_dataset(d.modes, d.samples, d.radius, d.sigma, rng);
  }
  return load_idx(d.images, d.labels, d.downscale);
}

Matrix sample_real_batch(const Dataset& data, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = rng.uniform_index(data.size());
  return data.rows(idx);
}

SharedResources prepare_shared(const RunConfig& cfg) {
  cfg.validate();
  SharedResources s;
  s.dataset = build_dataset(cfg);

  Rng classifier_rng = Rng::stream(cfg.seeds.classifier, "classifier");
  TrainOptions copts;
  copts.epochs = cfg.training.classifier_epochs;
  s.classifier = train_classifier(s.dataset, cfg.architecture, copts, classifier_rng);

  Rng reference = Rng::stream(cfg.seeds.data, "reference");
  const Matrix real = sample_real_batch(s.dataset, cfg.diagnostics.real_samples, reference);
  s.real_features = covariance_stats(classifier_features(s.classifier.net, real));

  const std::size_t nz = cfg.architecture.latent_dim;
  Rng probe = Rng::stream(cfg.seeds.probe, "probe");
  s.probe = sample_latent(cfg.diagnostics.probe_size, nz, probe, "probe");
  Rng score = Rng::stream(cfg.seeds.probe, "score");
  s.score_latents = sample_latent(cfg.diagnostics.score_samples, nz, score, "score").z;
  Rng modes = Rng::stream(cfg.seeds.probe, "modes");
  s.mode_latents = sample_latent(cfg.diagnostics.mode_samples, nz, modes, "modes").z;
  Rng held = Rng::stream(cfg.seeds.data, "loss-real");
  s.loss_real = sample_real_batch(s.dataset, cfg.training.batch_size, held);
  return s;
}

double frechet_to_real(const Matrix& samples, const SharedResources& shared) {
  return frechet_distance(shared.real_features,
                          covariance_stats(classifier_features(shared.classifier.net, samples)));
}

Measurement measure_generator(const Mlp& generator, const SharedResources& shared) {
  Measurement m;
  m.condition = mean_log_condition(generator, shared.probe.z);
  const Matrix samples = forward(generator, shared.score_latents);
  m.classifier_score = classifier_score(samples, shared.classifier.net);
  m.frechet_distance = frechet_to_real(samples, shared);
  m.modes = mode_report(forward(generator, shared.mode_latents), shared.classifier.net);
  m.average_spectrum = average_jacobian_spectrum(generator, shared.probe.z);
  return m;
}

RunStreams make_run_streams(const SeedSpec& seeds) {
  return {Rng::stream(seeds.init, "init"), Rng::stream(seeds.latent, "latent"), Rng::stream(seeds.batches, "batches"),
          Rng::stream(seeds.clamp, "clamp")};
}

GanTrainState make_initial_state(const RunConfig& cfg, const SharedResources& shared, RunStreams& streams) {
  return make_gan_state(cfg.architecture, shared.dataset.dim(), shared.dataset.image_valued, cfg.clamp,
                        cfg.training.batch_size, shared.probe, streams.init, cfg.training.adam);
}

RunRecord make_record(const StepMetrics& step, const Measurement& m) {
  RunRecord r;
  r.step = step.step;
  r.l_d = step.l_d;
  r.l_g = step.l_g;
  r.clamp_penalty = step.clamp_penalty;
  r.q_mean = step.q_mean;
  r.q_max = step.q_max;
  r.mean_log_cond = m.condition.mean;
  r.floored_points = m.condition.floored_points;
  r.classifier_score = m.classifier_score;
  r.frechet_distance = m.frechet_distance;
  r.least_class = m.modes.least_sampled_class;
  r.least_count = m.modes.least_count;
  return r;
}

RunRecord initial_record(const RunConfig& cfg, const GanTrainState& state, const SharedResources& shared,
                         const Measurement& m) {
  StepMetrics step;
  const std::size_t b = shared.loss_real.rows();
  Matrix z(b, state.generator.input_dim());
  for (std::size_t i = 0; i < b; ++i) {
    auto src = shared.score_latents.row(i % shared.score_latents.rows());
    std::copy(src.begin(), src.end(), z.row(i).begin());
  }
  const Matrix real_logits = forward(state.discriminator, shared.loss_real);
  const Matrix fake_logits = forward(state.discriminator, forward(state.generator, z));
  const GanLosses losses = gan_losses(real_logits.values(), fake_logits.values());
  step.l_d = losses.discriminator;
  step.l_g = losses.generator;
  if (cfg.clamp.enabled) {
    Rng rng = Rng::stream(cfg.seeds.probe, "step0-clamp");
    const ClampPenalty p = jacobian_clamping_penalty(state.generator, z, cfg.clamp, rng);
    step.clamp_penalty = p.penalty;
    step.q_mean = std::accumulate(p.quotients.begin(), p.quotients.end(), 0.0) / static_cast<double>(p.quotients.size());
    step.q_max = *std::max_element(p.quotients.begin(), p.quotients.end());
  }
  return make_record(step, m);
}

namespace {

std::string describe(const StepMetrics& m) {
  return "step " + std::to_string(m.step) + " l_d=" + format_double(m.l_d) + " l_g=" + format_double(m.l_g) +
         " clamp_penalty=" + format_double(m.clamp_penalty);
}

}  // namespace

RunLog run_experiment(const RunConfig& cfg, const RunOptions& opts) {
  return run_experiment(cfg, prepare_shared(cfg), opts);
}

RunLog run_experiment(const RunConfig& cfg, const SharedResources& shared, const RunOptions& opts) {
  cfg.validate();
  RunLog log;
  log.config = cfg;
  log.classifier_accuracy = shared.classifier.heldout_accuracy;

  const std::filesystem::path dir = cfg.output_dir;
  std::optional<RunLogWriter> writer;
  if (opts.write_files) {
    std::filesystem::create_directories(dir);
    save_config(cfg, dir / "config.json");
    writer.emplace(dir, cfg);
    save_checkpoint(shared.classifier.net, dir / "classifier.ckpt");
  }

  RunStreams streams = make_run_streams(cfg.seeds);
  GanTrainState state = make_initial_state(cfg, shared, streams);

  Measurement last_measure;
  auto emit = [&](const RunRecord& record, const Measurement& m) {
    log.records.push_back(record);
    SpectrumSnapshot snap{record.step, m.average_spectrum.singular_values, m.average_spectrum.log_singular_values};
    log.spectra.push_back(snap);
    if (writer) {
      writer->append(record);
      writer->append_spectrum(snap);
    }
    if (opts.on_record) opts.on_record(record);
    last_measure = m;
  };

  {
    const Measurement m = measure_generator(state.generator, shared);
    emit(initial_record(cfg, state, shared, m), m);
  }

  const std::size_t steps = cfg.training.steps;
  const std::size_t every = cfg.diagnostics.every;
  try {
    for (std::size_t step = 1; step <= steps; ++step) {
      const Matrix real = sample_real_batch(shared.dataset, cfg.training.batch_size, streams.batches);
      try {
        log.last_step = gan_train_step(state, real, streams.latent, streams.clamp);
      } catch (const NonfiniteGradientError& e) {
        StepMetrics partial = log.last_step;
        partial.step = step;
        throw RunAbortError(e.what(), partial);
      }
      if ((every != 0 && step % every == 0) || step == steps) {
        const Measurement m = measure_generator(state.generator, shared);
        emit(make_record(log.last_step, m), m);
      }
    }
  } catch (const RunAbortError& e) {
    log.status = RunStatus::aborted;
    log.last_step = e.last_metrics();
    log.abort_message = std::string(e.what()) + " (" + describe(e.last_metrics()) + ")";
  }

  log.terminal_mode_counts = last_measure.modes.counts;
  log.terminal_mean_log_determinant = last_measure.condition.mean_log_determinant;
  if (opts.write_files) {
    save_checkpoint(state.generator, dir / "generator.ckpt");
    save_checkpoint(state.discriminator, dir / "discriminator.ckpt");
    write_summary(log, dir / "summary.json");
  }
  return log;
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

ClusterSummary summarize(const std::vector<RunLog>& logs) {
  ClusterSummary s;
  Vector cond, score, fd;
  for (const RunLog& log : logs) {
    if (log.records.empty()) continue;
    const RunRecord& t = log.terminal();
    s.runs.push_back({log.config.name, log.status == RunStatus::completed, t.mean_log_cond, t.classifier_score,
                      t.frechet_distance, t.least_count});
    cond.push_back(t.mean_log_cond);
    score.push_back(t.classifier_score);
    fd.push_back(t.frechet_distance);
  }
  auto mean = [](const Vector& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  s.mean_log_cond_mean = mean(cond);
  s.mean_log_cond_variance = sample_variance(cond);
  s.classifier_score_mean = mean(score);
  s.classifier_score_variance = sample_variance(score);
  s.frechet_mean = mean(fd);
  s.frechet_variance = sample_variance(fd);
  return s;
}

std::string run_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%02zu", index);
  return buf;
}

SweepResult sweep(const RunConfig& base, const SweepOptions& opts) {
  if (opts.n_runs == 0) throw DomainError("sweep needs at least one run");
  std::vector<std::uint64_t> offsets(opts.n_runs);
  if (opts.seed_offsets) {
    if (opts.seed_offsets->size() != opts.n_runs) throw DomainError("sweep: seed_offsets must have n_runs entries");
    offsets = *opts.seed_offsets;
  } else {
    std::iota(offsets.begin(), offsets.end(), std::uint64_t{0});
  }
  std::vector<std::size_t> order(opts.n_runs);
  std::iota(order.begin(), order.end(), 0);
  if (opts.order) {
    std::vector<std::size_t> sorted = *opts.order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != order) throw DomainError("sweep: order must be a permutation of the run indices");
    order = *opts.order;
  }

  std::vector<RunConfig> configs(opts.n_runs, base);
  SweepResult result;
  std::set<std::vector<std::uint64_t>> seen;
  for (std::size_t i = 0; i < opts.n_runs; ++i) {
    RunConfig& c = configs[i];
    c.seeds.offset_run_seeds(offsets[i]);
    c.name = base.name + "/" + run_dir_name(i);
    c.output_dir = (std::filesystem::path(base.output_dir) / run_dir_name(i)).string();
    const std::vector<std::uint64_t> key{c.seeds.init, c.seeds.latent, c.seeds.batches, c.seeds.clamp};
    if (!seen.insert(key).second)
      result.warnings.push_back("run " + std::to_string(i) + " repeats the seeds of an earlier run");
  }

  const SharedResources shared = prepare_shared(base);
  std::vector<std::optional<RunLog>> logs(opts.n_runs);
  std::vector<std::string> errors(opts.n_runs);
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  auto worker = [&] {
    for (std::size_t pos = next++; pos < opts.n_runs; pos = next++) {
      const std::size_t i = order[pos];
      try {
        logs[i] = run_experiment(configs[i], shared);
        if (opts.on_run_done) {
          std::lock_guard lock(callback_mutex);
          opts.on_run_done(i, *logs[i]);
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opts.parallel, opts.n_runs));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (std::size_t i = 0; i < opts.n_runs; ++i) {
    if (logs[i]) {
      result.runs.push_back(std::move(*logs[i]));
      result.run_index.push_back(i);
    } else {
      result.failures.push_back(run_dir_name(i) + ": " + errors[i]);
    }
  }
  result.summary = summarize(result.runs);
  std::filesystem::create_directories(base.output_dir);
  write_cluster_summary(result.summary, base.output_dir);
  return result;
}

void write_cluster_summary(const ClusterSummary& s, const std::filesystem::path& dir) {
  std::ofstream csv(dir / "sweep_summary.csv", std::ios::trunc);
  csv << "run,completed,mean_log_cond,classifier_score,frechet_distance,least_count\n";
  for (const RunTerminal& r : s.runs)
    csv << r.name << "," << (r.completed ? 1 : 0) << "," << format_double(r.mean_log_cond) << ","
        << format_double(r.classifier_score) << "," << format_double(r.frechet_distance) << "," << r.least_count
        << "\n";
  nlohmann::json j{{"runs", s.runs.size()},
                   {"mean_log_cond", {{"mean", s.mean_log_cond_mean}, {"variance", s.mean_log_cond_variance}}},
                   {"classifier_score", {{"mean", s.classifier_score_mean}, {"variance", s.classifier_score_variance}}},
                   {"frechet_distance", {{"mean", s.frechet_mean}, {"variance", s.frechet_variance}}}};
  std::ofstream js(dir / "sweep_summary.json", std::ios::trunc);
  js << j.dump(2) << "\n";
}

MemorizerReport run_memorizer(const RunConfig& cfg, const SharedResources& shared, Rng& rng) {
  TrainOptions opts;
  opts.epochs = cfg.memorizer.epochs;
  opts.batch_size = cfg.memorizer.batch_size;
  opts.adam.learning_rate = cfg.memorizer.learning_rate;
  MemorizerReport rep;
  rep.result = train_memorizer(shared.dataset, cfg.memorizer.duplication_fraction, cfg.memorizer.pairs,
                               cfg.architecture, opts, rng);
  const Mlp& g = rep.result.generator;
  rep.condition = mean_log_condition(g, shared.probe.z);
  const Matrix memorized = forward(g, rep.result.z);
  const Matrix fresh = forward(g, shared.score_latents);
  rep.memorized_score = classifier_score(memorized, shared.classifier.net);
  rep.fresh_score = classifier_score(fresh, shared.classifier.net);
  rep.memorized_frechet = frechet_to_real(memorized, shared);
  rep.fresh_frechet = frechet_to_real(fresh, shared);
  rep.fresh_modes = mode_report(forward(g, shared.mode_latents), shared.classifier.net);
  return rep;
}

VaeReport run_vae(const RunConfig& cfg, const SharedResources& shared, Rng& rng) {
  TrainOptions opts;
  opts.epochs = cfg.vae.epochs;
  opts.batch_size = cfg.vae.batch_size;
  opts.adam.learning_rate = cfg.vae.learning_rate;
  VaeReport rep;
  rep.result = train_vae(shared.dataset, cfg.architecture, opts, rng);
  rep.condition = mean_log_condition(rep.result.decoder, shared.probe.z);
  rep.average_spectrum = average_jacobian_spectrum(rep.result.decoder, shared.probe.z);
  return rep;
}

double max_log_gap(const std::vector<Vector>& log_spectra) {
  if (log_spectra.size() < 2) return 0.0;
  const std::size_t n = log_spectra.front().size();
  double gap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double lo = log_spectra.front()[k], hi = lo;
    for (const Vector& s : log_spectra) {
      if (s.size() != n) throw DimensionError("max_log_gap: spectra lengths differ");
      lo = std::min(lo, s[k]);
      hi = std::max(hi, s[k]);
    }
    gap = std::max(gap, hi - lo);
  }
  return gap;
}

std::vector<std::size_t> upper_cluster(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  if (n < 2 || values[order.front()] == values[order.back()]) return {};

  auto sse = [&](std::size_t lo, std::size_t hi) {
    double mean = 0.0;
    for (std::size_t i = lo; i < hi; ++i) mean += values[order[i]];
    mean /= static_cast<double>(hi - lo);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += (values[order[i]] - mean) * (values[order[i]] - mean);
    return s;
  };
  std::size_t best = 1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 1; cut < n; ++cut) {
    if (values[order[cut - 1]] == values[order[cut]]) continue;
    const double cost = sse(0, cut) + sse(cut, n);
    if (cost < best_cost) best_cost = cost, best = cut;
  }
  std::vector<std::size_t> upper(order.begin() + static_cast<std::ptrdiff_t>(best), order.end());
  std::sort(upper.begin(), upper.end());
  return upper;
}

}  // namespace spectralab
