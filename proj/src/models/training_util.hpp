#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "spectralab/linalg.hpp"
#include "spectralab/rng.hpp"

namespace spectralab::detail {

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_index(i)]);
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < in.size(); ++k) sum += out[k] = std::exp(in[k] - m);
    for (double& x : out) x /= sum;
  }
  return p;
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace spectralab::detail
