#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "spectralab/models.hpp"
#include "spectralab/nn.hpp"

namespace spectralab {

inline constexpr int kConfigSchemaVersion = 1;

struct DatasetSpec {
  std::string kind = "ring";  // "ring" | "idx"
  std::size_t modes = 8;
  std::size_t samples = 50000;
  double radius = 2.0;
  double sigma = 0.02;
  std::string images;  // idx only
  std::string labels;
  std::size_t downscale = 2;
};

struct TrainingSpec {
  std::size_t steps = 20000;
  std::size_t batch_size = 64;
  AdamConfig adam{};
  std::size_t classifier_epochs = 5;
};

struct DiagnosticsSpec {
  std::size_t every = 200;  // 0 = first and last step only
  std::size_t probe_size = 64;
  std::size_t score_samples = 5000;
  std::size_t mode_samples = 360;
  std::size_t real_samples = 5000;
};

/// One seed per RNG stream. `data`, `classifier` and `probe` are experiment
/// level and shared by every run of a sweep (so scores are comparable);
/// the rest are per run and are what a sweep varies.
struct SeedSpec {
  std::uint64_t data = 1234;
  std::uint64_t classifier = 1234;
  std::uint64_t probe = 1234;
  std::uint64_t init = 0;
  std::uint64_t latent = 0;
  std::uint64_t batches = 0;
  std::uint64_t clamp = 0;

  void set_run_seed(std::uint64_t s) { init = latent = batches = clamp = s; }
  void offset_run_seeds(std::uint64_t k) {
    init += k;
    latent += k;
    batches += k;
    clamp += k;
  }
  bool operator==(const SeedSpec&) const = default;
};

struct MemorizerSpec {
  double duplication_fraction = 0.5;
  std::size_t pairs = 2000;
  std::size_t epochs = 10000;
  std::size_t batch_size = 64;
  double learning_rate = 3e-3;
};

struct VaeSpec {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "run";
  DatasetSpec dataset;
  Architecture architecture;
  ClampConfig clamp;  // clamp.norm_mode is serialized as top-level "clamp_norm_mode"
  TrainingSpec training;
  DiagnosticsSpec diagnostics;
  SeedSpec seeds;
  MemorizerSpec memorizer;
  VaeSpec vae;
  std::string output_dir = "runs/run";

  void validate() const;
};

std::string config_to_json(const RunConfig& cfg);
/// Missing keys take defaults; unknown keys and schema mismatches raise ConfigError.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace spectralab
