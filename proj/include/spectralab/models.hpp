#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spectralab/data.hpp"
#include "spectralab/error.hpp"
#include "spectralab/linalg.hpp"
#include "spectralab/nn.hpp"
#include "spectralab/rng.hpp"

namespace spectralab {

// ---------------------------------------------------------------------------
// Architectures

struct Architecture {
  std::size_t latent_dim = 8;
  std::vector<std::size_t> generator_hidden{64, 64};
  std::vector<std::size_t> discriminator_hidden{64, 64};
  std::vector<std::size_t> classifier_hidden{64};
  double init_stddev = 0.02;
};

/// tanh hidden layers; sigmoid output for image data, linear otherwise.
Mlp make_generator(const Architecture& arch, std::size_t data_dim, bool image_valued, Rng& init);
/// leaky_relu(0.2) hidden layers and a single linear logit.
Mlp make_discriminator(const Architecture& arch, std::size_t data_dim, Rng& init);
/// tanh hidden layers and K linear logits. The last hidden layer is the
/// feature space used by the Frechet distance.
Mlp make_classifier(const Architecture& arch, std::size_t data_dim, std::size_t num_classes, Rng& init);

// ---------------------------------------------------------------------------
// Non-saturating GAN losses

struct GanLosses {
  double discriminator = 0.0;  // L_D
  double generator = 0.0;      // L_G
};

/// L_D = mean softplus(-s_real) + mean softplus(s_fake), L_G = mean softplus(-s_fake).
GanLosses gan_losses(std::span<const double> real_logits, std::span<const double> fake_logits);

/// log(1 + e^x) without overflow.
double softplus(double x);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Jacobian clamping

enum class ClampNormMode { per_example, whole_batch };

std::string to_string(ClampNormMode mode);
ClampNormMode clamp_norm_mode_from_string(const std::string& name);

struct ClampConfig {
  bool enabled = false;
  double epsilon = 1.0;
  double lambda_min = 1.0;
  double lambda_max = 20.0;
  ClampNormMode norm_mode = ClampNormMode::per_example;

  void validate() const;
};

/// Gaussian directions scaled to norm epsilon (per row, or over the whole
/// batch). Zero-norm draws are redrawn.
Matrix sample_clamp_perturbation(std::size_t batch, std::size_t latent_dim, const ClampConfig& cfg, Rng& rng);

struct ClampEvaluation {
  double penalty = 0.0;
  Vector quotients;      // one per row, or a single entry in whole-batch mode
  Matrix grad_output;    // dL/dG(z)
  Matrix grad_perturbed; // dL/dG(z')
};

/// Penalty and its gradient with respect to both generator outputs, from
/// precomputed outputs. The input perturbation is treated as a constant.
ClampEvaluation evaluate_clamp_penalty(const Matrix& z, const Matrix& z_perturbed, const Matrix& out,
                                       const Matrix& out_perturbed, const ClampConfig& cfg);

/// Per-example quotient penalty (max(Q, λmax) − λmax)² + (min(Q, λmin) − λmin)².
double clamp_quotient_penalty(double q, double lambda_min, double lambda_max);

struct ClampPenalty {
  double penalty = 0.0;
  Vector quotients;
  Matrix delta;
};

ClampPenalty jacobian_clamping_penalty(const Mlp& generator, const Matrix& z, const ClampConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// GAN training

struct GanTrainState {
  Mlp generator;
  Mlp discriminator;
  AdamState generator_opt;
  AdamState discriminator_opt;
  std::uint64_t step_count = 0;
  ClampConfig clamp;
  LatentBatch probe;
  std::size_t batch_size = 64;
};

GanTrainState make_gan_state(const Architecture& arch, std::size_t data_dim, bool image_valued,
                             const ClampConfig& clamp, std::size_t batch_size, LatentBatch probe, Rng& init,
                             AdamConfig adam = {});

struct StepMetrics {
  std::uint64_t step = 0;
  double l_d = 0.0;
  double l_g = 0.0;
  double clamp_penalty = 0.0;
  double q_mean = 0.0;
  double q_max = 0.0;
  std::size_t generator_forward_passes = 0;
  std::size_t generator_forward_rows = 0;
};

class RunAbortError : public Error {
 public:
  RunAbortError(const std::string& what, StepMetrics last) : Error(what), last_(last) {}
  const StepMetrics& last_metrics() const noexcept { return last_; }

 private:
  StepMetrics last_;
};

/// One discriminator Adam step on L_D, then one generator Adam step on
/// L_G (+ clamping penalty). G(z) is evaluated once and shared by both halves;
/// clamping adds exactly one more generator pass on the perturbed batch.
StepMetrics gan_train_step(GanTrainState& state, const Matrix& real_batch, Rng& latent, Rng& clamp_noise);

// ---------------------------------------------------------------------------
// Scoring classifier, VAE baseline, memorizing generator

struct TrainOptions {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

struct ClassifierResult {
  Mlp net;
  double heldout_accuracy = 0.0;
};

/// Softmax cross-entropy on a 90/10 split.
ClassifierResult train_classifier(const Dataset& data, const Architecture& arch, const TrainOptions& opts, Rng& rng);

struct VaeResult {
  Mlp encoder;  // n_x → ... → 2·n_z (means, then log-variances)
  Mlp decoder;
  Vector epoch_losses;  // mean negative ELBO per sample
  Vector first_epoch_batch_losses;
};

/// Closed-form KL(N(mu, diag(exp(logvar))) ‖ N(0, I)).
double gaussian_kl(std::span<const double> mean, std::span<const double> logvar);

VaeResult train_vae(const Dataset& data, const Architecture& arch, const TrainOptions& opts, Rng& rng);

struct MemorizerResult {
  Mlp generator;
  Matrix z;        // memorized latents, n_pairs × n_z
  Matrix targets;  // paired samples
  std::vector<std::size_t> target_labels;
  std::size_t duplicated_index = 0;  // dataset row copied into the duplicated half
  double final_mse = 0.0;            // mean ‖G(z_i) − x_i‖²
};

MemorizerResult train_memorizer(const Dataset& data, double duplication_fraction, std::size_t n_pairs,
                                const Architecture& arch, const TrainOptions& opts, Rng& rng);

}  // namespace spectralab
