#include <algorithm>
#include <cmath>

#include "spectralab/models.hpp"

namespace spectralab {

namespace {

std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

std::vector<Activation> hidden_then(Activation hidden, std::size_t n_hidden, Activation out) {
  std::vector<Activation> acts(n_hidden, hidden);
  acts.push_back(out);
  return acts;
}

}  // namespace

Mlp make_generator(const Architecture& arch, std::size_t data_dim, bool image_valued, Rng& init) {
  return Mlp::random_normal(chain(arch.latent_dim, arch.generator_hidden, data_dim),
                            hidden_then(Activation::tanh, arch.generator_hidden.size(),
                                        image_valued ? Activation::sigmoid : Activation::linear),
                            arch.init_stddev, init);
}

Mlp make_discriminator(const Architecture& arch, std::size_t data_dim, Rng& init) {
  return Mlp::random_normal(chain(data_dim, arch.discriminator_hidden, 1),
                            hidden_then(Activation::leaky_relu, arch.discriminator_hidden.size(), Activation::linear),
                            arch.init_stddev, init);
}

Mlp make_classifier(const Architecture& arch, std::size_t data_dim, std::size_t num_classes, Rng& init) {
  return Mlp::random_normal(chain(data_dim, arch.classifier_hidden, num_classes),
                            hidden_then(Activation::tanh, arch.classifier_hidden.size(), Activation::linear),
                            arch.init_stddev, init);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GanLosses gan_losses(std::span<const double> real_logits, std::span<const double> fake_logits) {
  if (real_logits.empty() || fake_logits.empty()) throw DomainError("gan_losses: empty batch");
  double real_term = 0.0;
  for (double s : real_logits) real_term += softplus(-s);
  double fake_term = 0.0;
  double gen_term = 0.0;
  for (double s : fake_logits) {
    fake_term += softplus(s);
    gen_term += softplus(-s);
  }
  const double nr = static_cast<double>(real_logits.size());
  const double nf = static_cast<double>(fake_logits.size());
  return {real_term / nr + fake_term / nf, gen_term / nf};
}

std::string to_string(ClampNormMode mode) {
  return mode == ClampNormMode::per_example ? "per_example" : "whole_batch";
}

ClampNormMode clamp_norm_mode_from_string(const std::string& name) {
  if (name == "per_example") return ClampNormMode::per_example;
  if (name == "whole_batch") return ClampNormMode::whole_batch;
  throw DomainError("unknown clamp_norm_mode '" + name + "'");
}

void ClampConfig::validate() const {
  if (!(epsilon > 0.0)) throw DomainError("clamp epsilon must be positive");
  if (!(lambda_min > 0.0) || !(lambda_min <= lambda_max))
    throw DomainError("clamp bounds must satisfy 0 < lambda_min <= lambda_max");
}

Matrix sample_clamp_perturbation(std::size_t batch, std::size_t latent_dim, const ClampConfig& cfg, Rng& rng) {
  Matrix delta(batch, latent_dim);
  if (cfg.norm_mode == ClampNormMode::per_example) {
    for (std::size_t i = 0; i < batch; ++i) {
      auto row = delta.row(i);
      double n = 0.0;
      while (n == 0.0) {
        for (double& x : row) x = rng.normal();
        n = norm2(row);
      }
      for (double& x : row) x *= cfg.epsilon / n;
    }
  } else {
    double n = 0.0;
    while (n == 0.0) {
      for (double& x : delta.values()) x = rng.normal();
      n = frobenius_norm(delta);
    }
    delta *= cfg.epsilon / n;
  }
  return delta;
}

double clamp_quotient_penalty(double q, double lambda_min, double lambda_max) {
  const double over = std::max(q, lambda_max) - lambda_max;
  const double under = std::min(q, lambda_min) - lambda_min;
  return over * over + under * under;
}

namespace {

double clamp_penalty_slope(double q, double lambda_min, double lambda_max) {
  if (q > lambda_max) return 2.0 * (q - lambda_max);
  if (q < lambda_min) return 2.0 * (q - lambda_min);
  return 0.0;
}

}  // namespace

ClampEvaluation evaluate_clamp_penalty(const Matrix& z, const Matrix& z_perturbed, const Matrix& out,
                                       const Matrix& out_perturbed, const ClampConfig& cfg) {
  if (z.rows() != z_perturbed.rows() || z.cols() != z_perturbed.cols() || out.rows() != out_perturbed.rows() ||
      out.cols() != out_perturbed.cols() || out.rows() != z.rows())
    throw DimensionError("evaluate_clamp_penalty: batch shapes differ");
  const std::size_t batch = z.rows();
  if (batch == 0) throw DomainError("evaluate_clamp_penalty: empty batch");
  ClampEvaluation eval;
  eval.grad_output = Matrix(out.rows(), out.cols());
  eval.grad_perturbed = Matrix(out.rows(), out.cols());
  Matrix diff = out - out_perturbed;

  if (cfg.norm_mode == ClampNormMode::per_example) {
    const double inv_b = 1.0 / static_cast<double>(batch);
    eval.quotients.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      Vector dz(z.cols());
      for (std::size_t j = 0; j < z.cols(); ++j) dz[j] = z(i, j) - z_perturbed(i, j);
      const double zn = norm2(dz);
      const double dn = norm2(diff.row(i));
      const double q = dn / zn;
      eval.quotients[i] = q;
      eval.penalty += clamp_quotient_penalty(q, cfg.lambda_min, cfg.lambda_max);
      const double slope = clamp_penalty_slope(q, cfg.lambda_min, cfg.lambda_max);
      if (slope == 0.0 || dn == 0.0) continue;
      const double scale = inv_b * slope / (dn * zn);
      for (std::size_t j = 0; j < out.cols(); ++j) {
        eval.grad_output(i, j) = scale * diff(i, j);
        eval.grad_perturbed(i, j) = -scale * diff(i, j);
      }
    }
    eval.penalty *= inv_b;
  } else {
    const double zn = frobenius_norm(z - z_perturbed);
    const double dn = frobenius_norm(diff);
    const double q = dn / zn;
    eval.quotients = {q};
    eval.penalty = clamp_quotient_penalty(q, cfg.lambda_min, cfg.lambda_max);
    const double slope = clamp_penalty_slope(q, cfg.lambda_min, cfg.lambda_max);
    if (slope != 0.0 && dn != 0.0) {
      const double scale = slope / (dn * zn);
      eval.grad_output = diff * scale;
      eval.grad_perturbed = diff * (-scale);
    }
  }
  return eval;
}

ClampPenalty jacobian_clamping_penalty(const Mlp& generator, const Matrix& z, const ClampConfig& cfg, Rng& rng) {
  if (!cfg.enabled) throw ContractError("jacobian_clamping_penalty called with clamping disabled");
  cfg.validate();
  if (z.cols() != generator.input_dim()) throw DimensionError("jacobian_clamping_penalty: latent width mismatch");
  ClampPenalty result;
  result.delta = sample_clamp_perturbation(z.rows(), z.cols(), cfg, rng);
  const Matrix zp = z + result.delta;
  const ClampEvaluation eval = evaluate_clamp_penalty(z, zp, forward(generator, z), forward(generator, zp), cfg);
  result.penalty = eval.penalty;
  result.quotients = eval.quotients;
  return result;
}

GanTrainState make_gan_state(const Architecture& arch, std::size_t data_dim, bool image_valued,
                             const ClampConfig& clamp, std::size_t batch_size, LatentBatch probe, Rng& init,
                             AdamConfig adam) {
  if (batch_size == 0) throw DomainError("batch size must be positive");
  if (clamp.enabled) clamp.validate();
  GanTrainState state;
  state.generator = make_generator(arch, data_dim, image_valued, init);
  state.discriminator = make_discriminator(arch, data_dim, init);
  state.generator_opt = AdamState::for_network(state.generator, adam);
  state.discriminator_opt = AdamState::for_network(state.discriminator, adam);
  state.clamp = clamp;
  state.probe = std::move(probe);
  state.batch_size = batch_size;
  return state;
}

StepMetrics gan_train_step(GanTrainState& state, const Matrix& real_batch, Rng& latent, Rng& clamp_noise) {
  const std::size_t batch = state.batch_size;
  if (real_batch.rows() != batch) throw DimensionError("gan_train_step: real batch must have batch_size rows");
  if (real_batch.cols() != state.generator.output_dim())
    throw DimensionError("gan_train_step: real batch width does not match generator output");

  StepMetrics metrics;
  metrics.step = state.step_count + 1;

  const Matrix z = sample_latent(batch, state.generator.input_dim(), latent).z;
  const ForwardCache gen = forward_cached(state.generator, z);
  metrics.generator_forward_passes = 1;
  metrics.generator_forward_rows = batch;

  Matrix z_perturbed;
  ForwardCache gen_perturbed;
  if (state.clamp.enabled) {
    z_perturbed = z + sample_clamp_perturbation(batch, z.cols(), state.clamp, clamp_noise);
    gen_perturbed = forward_cached(state.generator, z_perturbed);
    metrics.generator_forward_passes += 1;
    metrics.generator_forward_rows += batch;
  }
  const Matrix& fake = gen.output();
  const double inv_b = 1.0 / static_cast<double>(batch);

  // Discriminator half.
  {
    const ForwardCache d_real = forward_cached(state.discriminator, real_batch);
    const ForwardCache d_fake = forward_cached(state.discriminator, fake);
    const auto real_logits = d_real.output().values();
    const auto fake_logits = d_fake.output().values();
    metrics.l_d = gan_losses(real_logits, fake_logits).discriminator;
    Matrix up_real(batch, 1);
    Matrix up_fake(batch, 1);
    for (std::size_t i = 0; i < batch; ++i) {
      up_real(i, 0) = (sigmoid(real_logits[i]) - 1.0) * inv_b;
      up_fake(i, 0) = sigmoid(fake_logits[i]) * inv_b;
    }
    Gradients grads = backward(state.discriminator, d_real, up_real).params;
    grads += backward(state.discriminator, d_fake, up_fake).params;
    if (!std::isfinite(metrics.l_d)) throw RunAbortError("nonfinite discriminator loss", metrics);
    adam_step(state.discriminator, grads, state.discriminator_opt);
  }

  // Generator half, against the updated discriminator.
  {
    const ForwardCache d_fake = forward_cached(state.discriminator, fake);
    const auto fake_logits = d_fake.output().values();
    double l_g = 0.0;
    Matrix up(batch, 1);
    for (std::size_t i = 0; i < batch; ++i) {
      l_g += softplus(-fake_logits[i]);
      up(i, 0) = (sigmoid(fake_logits[i]) - 1.0) * inv_b;
    }
    metrics.l_g = l_g * inv_b;
    Matrix grad_fake = backward(state.discriminator, d_fake, up).input_grad;

    Gradients grads;
    if (state.clamp.enabled) {
      const ClampEvaluation clamp =
          evaluate_clamp_penalty(z, z_perturbed, fake, gen_perturbed.output(), state.clamp);
      metrics.clamp_penalty = clamp.penalty;
      double q_sum = 0.0;
      metrics.q_max = 0.0;
      for (double q : clamp.quotients) {
        q_sum += q;
        metrics.q_max = std::max(metrics.q_max, q);
      }
      metrics.q_mean = q_sum / static_cast<double>(clamp.quotients.size());
      grad_fake += clamp.grad_output;
      grads = backward(state.generator, gen, grad_fake).params;
      grads += backward(state.generator, gen_perturbed, clamp.grad_perturbed).params;
    } else {
      grads = backward(state.generator, gen, grad_fake).params;
    }
    if (!std::isfinite(metrics.l_g) || !std::isfinite(metrics.clamp_penalty))
      throw RunAbortError("nonfinite generator loss", metrics);
    adam_step(state.generator, grads, state.generator_opt);
  }

  state.step_count += 1;
  return metrics;
}

}  // namespace spectralab
