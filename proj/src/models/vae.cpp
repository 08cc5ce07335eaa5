#include <cmath>
#include <numeric>

#include "spectralab/models.hpp"
#include "training_util.hpp"

namespace spectralab {

double gaussian_kl(std::span<const double> mean, std::span<const double> logvar) {
  if (mean.size() != logvar.size()) throw DimensionError("gaussian_kl: mean and logvar lengths differ");
  double kl = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j)
    kl += 0.5 * (mean[j] * mean[j] + std::exp(logvar[j]) - 1.0 - logvar[j]);
  return kl;
}

namespace {

constexpr double kProbClip = 1e-7;

// Per-sample reconstruction loss; writes dLoss/dx̂ (unscaled) into grad.
double reconstruction(std::span<const double> x, std::span<const double> x_hat, std::span<double> grad,
                      bool bernoulli) {
  double loss = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (bernoulli) {
      const double p = std::clamp(x_hat[j], kProbClip, 1.0 - kProbClip);
      loss -= x[j] * std::log(p) + (1.0 - x[j]) * std::log(1.0 - p);
      grad[j] = (p - x[j]) / (p * (1.0 - p));
    } else {
      const double d = x_hat[j] - x[j];
      loss += 0.5 * d * d;
      grad[j] = d;
    }
  }
  return loss;
}

}  // namespace

VaeResult train_vae(const Dataset& data, const Architecture& arch, const TrainOptions& opts, Rng& rng) {
  data.validate();
  if (data.size() == 0) throw InsufficientSamplesError("train_vae: empty dataset");
  const std::size_t nz = arch.latent_dim;
  const std::size_t nx = data.dim();
  const bool bernoulli = data.image_valued;

  Rng init = rng.split("vae-init");
  VaeResult result;
  {
    std::vector<std::size_t> dims{nx};
    dims.insert(dims.end(), arch.generator_hidden.begin(), arch.generator_hidden.end());
    dims.push_back(2 * nz);
    std::vector<Activation> acts(arch.generator_hidden.size(), Activation::tanh);
    acts.push_back(Activation::linear);
    result.encoder = Mlp::random_normal(dims, acts, arch.init_stddev, init);
  }
  result.decoder = make_generator(arch, nx, data.image_valued, init);
  AdamState enc_opt = AdamState::for_network(result.encoder, opts.adam);
  AdamState dec_opt = AdamState::for_network(result.decoder, opts.adam);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    detail::shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      const std::size_t b = end - start;
      const double inv_b = 1.0 / static_cast<double>(b);
      const Matrix x = data.rows(std::span<const std::size_t>(order.data() + start, b));

      const ForwardCache enc = forward_cached(result.encoder, x);
      const Matrix& stats = enc.output();
      Matrix eps(b, nz);
      for (double& e : eps.values()) e = rng.normal();
      Matrix z(b, nz);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < nz; ++j) z(i, j) = stats(i, j) + std::exp(0.5 * stats(i, nz + j)) * eps(i, j);

      const ForwardCache dec = forward_cached(result.decoder, z);
      Matrix grad_out(b, nx);
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        auto row = stats.row(i);
        batch_loss += reconstruction(x.row(i), dec.output().row(i), grad_out.row(i), bernoulli);
        batch_loss += gaussian_kl(row.subspan(0, nz), row.subspan(nz, nz));
      }
      grad_out *= inv_b;
      batch_loss *= inv_b;
      if (!std::isfinite(batch_loss)) {
        StepMetrics last;
        last.step = epoch;
        throw RunAbortError("train_vae: nonfinite ELBO at epoch " + std::to_string(epoch), last);
      }

      BackwardResult dec_back = backward(result.decoder, dec, grad_out);
      Matrix grad_stats(b, 2 * nz);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < nz; ++j) {
          const double mu = stats(i, j);
          const double lv = stats(i, nz + j);
          const double dz = dec_back.input_grad(i, j);
          const double sd = std::exp(0.5 * lv);
          grad_stats(i, j) = dz + mu * inv_b;
          grad_stats(i, nz + j) = dz * eps(i, j) * 0.5 * sd + 0.5 * (std::exp(lv) - 1.0) * inv_b;
        }
      const Gradients enc_grads = backward(result.encoder, enc, grad_stats).params;
      adam_step(result.decoder, dec_back.params, dec_opt);
      adam_step(result.encoder, enc_grads, enc_opt);

      epoch_loss += batch_loss * static_cast<double>(b);
      if (epoch == 0) result.first_epoch_batch_losses.push_back(batch_loss);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

}  // namespace spectralab
