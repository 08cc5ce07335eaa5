#include <cmath>
#include <numeric>

#include "spectralab/models.hpp"
#include "training_util.hpp"

namespace spectralab {

ClassifierResult train_classifier(const Dataset& data, const Architecture& arch, const TrainOptions& opts, Rng& rng) {
  if (!data.labeled()) throw ContractError("train_classifier needs a labeled dataset");
  if (data.num_classes < 2) throw DomainError("train_classifier needs at least 2 classes");
  if (data.size() < 10) throw InsufficientSamplesError("train_classifier needs at least 10 samples");
  data.validate();

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  detail::shuffle(order, rng);
  const std::size_t n_holdout = std::max<std::size_t>(1, data.size() / 10);
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_holdout));
  std::vector<std::size_t> holdout(order.end() - static_cast<std::ptrdiff_t>(n_holdout), order.end());

  Rng init = rng.split("classifier-init");
  ClassifierResult result{make_classifier(arch, data.dim(), data.num_classes, init), 0.0};
  AdamState opt = AdamState::for_network(result.net, opts.adam);

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    detail::shuffle(train, rng);
    for (std::size_t start = 0; start < train.size(); start += opts.batch_size) {
      const std::size_t end = std::min(train.size(), start + opts.batch_size);
      std::span<const std::size_t> idx(train.data() + start, end - start);
      const Matrix x = data.rows(idx);
      const ForwardCache cache = forward_cached(result.net, x);
      Matrix probs = detail::softmax_rows(cache.output());
      const double inv_b = 1.0 / static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) {
        probs(i, data.labels[idx[i]]) -= 1.0;
        for (double& g : probs.row(i)) g *= inv_b;
      }
      adam_step(result.net, backward(result.net, cache, probs).params, opt);
    }
  }

  const Matrix logits = forward(result.net, data.rows(holdout));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < holdout.size(); ++i)
    if (detail::argmax(logits.row(i)) == data.labels[holdout[i]]) ++correct;
  result.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(holdout.size());
  return result;
}

}  // namespace spectralab
