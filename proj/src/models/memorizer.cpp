#include <cmath>
#include <numeric>

#include "spectralab/models.hpp"
#include "training_util.hpp"

namespace spectralab {

MemorizerResult train_memorizer(const Dataset& data, double duplication_fraction, std::size_t n_pairs,
                                const Architecture& arch, const TrainOptions& opts, Rng& rng) {
  if (!(duplication_fraction > 0.0 && duplication_fraction < 1.0))
    throw DomainError("train_memorizer: duplication_fraction must lie in (0, 1)");
  if (n_pairs == 0) throw DomainError("train_memorizer: n_pairs must be positive");
  if (data.size() < 2) throw InsufficientSamplesError("train_memorizer needs at least 2 samples");
  const std::size_t n_dup = static_cast<std::size_t>(std::llround(duplication_fraction * static_cast<double>(n_pairs)));
  const std::size_t n_random = n_pairs - n_dup;
  if (n_random > data.size() - 1) throw DomainError("train_memorizer: n_pairs exceeds the available distinct samples");

  MemorizerResult result;
  result.duplicated_index = rng.uniform_index(data.size());

  // Partial Fisher-Yates over every row except the duplicated one.
  std::vector<std::size_t> pool;
  pool.reserve(data.size() - 1);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (i != result.duplicated_index) pool.push_back(i);
  for (std::size_t i = 0; i < n_random; ++i) std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);

  std::vector<std::size_t> chosen(n_dup, result.duplicated_index);
  chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_random));
  result.targets = data.rows(chosen);
  if (data.labeled())
    for (std::size_t i : chosen) result.target_labels.push_back(data.labels[i]);

  result.z = sample_latent(n_pairs, arch.latent_dim, rng, "memorized").z;
  Rng init = rng.split("memorizer-init");
  result.generator = make_generator(arch, data.dim(), data.image_valued, init);
  AdamState opt = AdamState::for_network(result.generator, opts.adam);

  std::vector<std::size_t> order(n_pairs);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    detail::shuffle(order, rng);
    for (std::size_t start = 0; start < n_pairs; start += opts.batch_size) {
      const std::size_t end = std::min(n_pairs, start + opts.batch_size);
      const std::size_t b = end - start;
      Matrix zb(b, arch.latent_dim);
      Matrix xb(b, data.dim());
      for (std::size_t i = 0; i < b; ++i) {
        auto zs = result.z.row(order[start + i]);
        auto xs = result.targets.row(order[start + i]);
        std::copy(zs.begin(), zs.end(), zb.row(i).begin());
        std::copy(xs.begin(), xs.end(), xb.row(i).begin());
      }
      const ForwardCache cache = forward_cached(result.generator, zb);
      Matrix grad = cache.output() - xb;
      grad *= 2.0 / static_cast<double>(b);
      adam_step(result.generator, backward(result.generator, cache, grad).params, opt);
    }
  }

  const Matrix out = forward(result.generator, result.z);
  double sse = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i)
    for (std::size_t j = 0; j < data.dim(); ++j) {
      const double d = out(i, j) - result.targets(i, j);
      sse += d * d;
    }
  result.final_mse = sse / static_cast<double>(n_pairs);
  return result;
}

}  // namespace spectralab
