#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spectralab/config.hpp"
#include "spectralab/data.hpp"
#include "spectralab/diagnostics.hpp"
#include "spectralab/models.hpp"
#include "spectralab/runlog.hpp"

namespace spectralab {

/// Everything derived only from the experiment-level seeds. Identical for all
/// runs of a sweep and read-only once built.
struct SharedResources {
  Dataset dataset;
  ClassifierResult classifier;
  GaussianStats real_features;
  LatentBatch probe;
  Matrix score_latents;  // score_samples × n_z
  Matrix mode_latents;   // mode_samples × n_z
  Matrix loss_real;      // held batch for step-0 losses
};

Dataset build_dataset(const RunConfig& cfg);
SharedResources prepare_shared(const RunConfig& cfg);

/// Diagnostics for a generator snapshot (no training metrics).
struct Measurement {
  ConditionSeries condition;
  double classifier_score = 0.0;
  double frechet_distance = 0.0;
  ModeReport modes;
  SingularSpectrum average_spectrum;
};

Measurement measure_generator(const Mlp& generator, const SharedResources& shared);

/// Frechet distance between the classifier features of `samples` and the real data.
double frechet_to_real(const Matrix& samples, const SharedResources& shared);

struct RunStreams {
  Rng init;
  Rng latent;
  Rng batches;
  Rng clamp;
};

RunStreams make_run_streams(const SeedSpec& seeds);
GanTrainState make_initial_state(const RunConfig& cfg, const SharedResources& shared, RunStreams& streams);
/// Indices drawn uniformly with replacement.
Matrix sample_real_batch(const Dataset& data, std::size_t batch, Rng& rng);
/// Step-0 record: losses from the held batch, no update.
RunRecord initial_record(const RunConfig& cfg, const GanTrainState& state, const SharedResources& shared,
                         const Measurement& m);
RunRecord make_record(const StepMetrics& step, const Measurement& m);

struct RunOptions {
  bool write_files = true;
  std::function<void(const RunRecord&)> on_record;
};

/// Trains one GAN with diagnostics every `diagnostics.every` steps (plus step
/// 0 and the final step) and persists the log under cfg.output_dir.
RunLog run_experiment(const RunConfig& cfg, const RunOptions& opts = {});
RunLog run_experiment(const RunConfig& cfg, const SharedResources& shared, const RunOptions& opts = {});

struct RunTerminal {
  std::string name;
  bool completed = true;
  double mean_log_cond = 0.0;
  double classifier_score = 0.0;
  double frechet_distance = 0.0;
  std::size_t least_count = 0;
};

struct ClusterSummary {
  std::vector<RunTerminal> runs;
  double mean_log_cond_mean = 0.0, mean_log_cond_variance = 0.0;
  double classifier_score_mean = 0.0, classifier_score_variance = 0.0;
  double frechet_mean = 0.0, frechet_variance = 0.0;
};

/// Sample variance (n − 1 denominator); zero for fewer than two values.
double sample_variance(std::span<const double> values);
ClusterSummary summarize(const std::vector<RunLog>& logs);

struct SweepOptions {
  std::size_t n_runs = 10;
  std::size_t parallel = 1;
  /// Per-run offsets added to the run-level seeds; defaults to 0..n_runs-1.
  std::optional<std::vector<std::uint64_t>> seed_offsets;
  /// Execution order over run indices; defaults to ascending.
  std::optional<std::vector<std::size_t>> order;
  std::function<void(std::size_t run, const RunLog&)> on_run_done;
};

struct SweepResult {
  std::vector<RunLog> runs;            // indexed by run, failures omitted
  std::vector<std::size_t> run_index;  // run number of each entry in `runs`
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  ClusterSummary summary;
};

std::string run_dir_name(std::size_t index);
SweepResult sweep(const RunConfig& base, const SweepOptions& opts);
void write_cluster_summary(const ClusterSummary& s, const std::filesystem::path& dir);

// Side experiments sharing the data/classifier pipeline.

struct MemorizerReport {
  MemorizerResult result;
  ConditionSeries condition;
  double memorized_score = 0.0;
  double fresh_score = 0.0;
  double memorized_frechet = 0.0;
  double fresh_frechet = 0.0;
  ModeReport fresh_modes;
};

MemorizerReport run_memorizer(const RunConfig& cfg, const SharedResources& shared, Rng& rng);

struct VaeReport {
  VaeResult result;
  ConditionSeries condition;
  SingularSpectrum average_spectrum;
};

VaeReport run_vae(const RunConfig& cfg, const SharedResources& shared, Rng& rng);

/// Largest over indices k of (max_r log σ_k − min_r log σ_k) across runs.
double max_log_gap(const std::vector<Vector>& log_spectra);

/// Indices of the upper group of the best two-group split of `values`
/// (least within-group sum of squares). Empty for fewer than two values or
/// when all values are equal.
std::vector<std::size_t> upper_cluster(std::span<const double> values);

}  // namespace spectralab
