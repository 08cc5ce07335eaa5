#include "spectralab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "models/training_util.hpp"
#include "spectralab/error.hpp"

namespace spectralab {

MetricSpectrum metric_tensor_spectrum(const Mlp& generator, std::span<const double> z) {
  MetricSpectrum out;
  out.jacobian = jacobian(generator, z);
  out.eig = sym_eig(gram(out.jacobian));
  const std::size_t rank = std::min(out.jacobian.rows(), out.jacobian.cols());
  out.report = spectrum_report(std::span<const double>(out.eig.eigenvalues.data(), rank));
  return out;
}

ConditionSeries mean_log_condition(const Mlp& generator, const Matrix& probe) {
  if (probe.rows() == 0) throw DomainError("mean_log_condition: empty probe batch");
  ConditionSeries series;
  series.per_point.reserve(probe.rows());
  for (std::size_t i = 0; i < probe.rows(); ++i) {
    double log_cond;
    double log_det;
    try {
      const SpectrumReport r = metric_tensor_spectrum(generator, probe.row(i)).report;
      log_cond = r.log_condition;
      log_det = r.log_determinant;
      if (r.floored) ++series.floored_points;
    } catch (const DegenerateSpectrumError&) {
      // A vanishing Jacobian counts as maximally ill-conditioned.
      log_cond = -std::log(kEigenFloorRatio);
      log_det = -std::numeric_limits<double>::infinity();
      ++series.floored_points;
    }
    series.per_point.push_back(log_cond);
    series.mean += log_cond;
    series.mean_log_determinant += log_det;
  }
  series.mean /= static_cast<double>(probe.rows());
  series.mean_log_determinant /= static_cast<double>(probe.rows());
  return series;
}

SingularSpectrum singular_spectrum(const Matrix& m) {
  const Matrix g = m.rows() < m.cols() ? outer_gram(m) : gram(m);
  SingularSpectrum out;
  out.gram = spectrum_report(sym_eig(g));
  const double sigma_floor = std::sqrt(kEigenFloorRatio * out.gram.eigenvalues.front());
  for (double lambda : out.gram.eigenvalues) {
    const double sigma = std::sqrt(std::max(lambda, 0.0));
    out.singular_values.push_back(sigma);
    out.log_singular_values.push_back(std::log(std::max(sigma, sigma_floor)));
  }
  return out;
}

SingularSpectrum average_jacobian_spectrum(const Mlp& generator, const Matrix& probe) {
  if (probe.rows() == 0) throw DomainError("average_jacobian_spectrum: empty probe batch");
  Matrix avg(generator.output_dim(), generator.input_dim());
  for (std::size_t i = 0; i < probe.rows(); ++i) avg += jacobian(generator, probe.row(i));
  avg *= 1.0 / static_cast<double>(probe.rows());
  return singular_spectrum(avg);
}

StretchSeries directional_stretch_check(const Mlp& generator, std::span<const double> z, std::size_t k,
                                       std::span<const double> steps) {
  const MetricSpectrum spec = metric_tensor_spectrum(generator, z);
  if (k >= spec.eig.eigenvalues.size()) throw DomainError("directional_stretch_check: eigen index out of range");
  StretchSeries series;
  series.expected = std::sqrt(std::max(spec.eig.eigenvalues[k], 0.0));
  const Vector v = spec.eig.eigenvectors.col(k);
  const Vector base = forward(generator, z);
  for (double eps : steps) {
    if (!(eps > 0.0)) throw DomainError("directional_stretch_check: step sizes must be positive");
    Vector moved(z.begin(), z.end());
    for (std::size_t j = 0; j < moved.size(); ++j) moved[j] += eps * v[j];
    Vector out = forward(generator, moved);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] -= base[j];
    series.quotients.push_back(norm2(out) / eps);
  }
  return series;
}

LabelDistribution label_distribution(const Matrix& probabilities) {
  if (probabilities.rows() == 0) throw DomainError("label distribution over an empty sample");
  LabelDistribution dist{probabilities, Vector(probabilities.cols(), 0.0)};
  for (std::size_t i = 0; i < probabilities.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < probabilities.cols(); ++k) {
      const double p = probabilities(i, k);
      if (p < 0.0) throw DomainError("label distribution has a negative probability");
      sum += p;
      dist.marginal[k] += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("label distribution row " + std::to_string(i) + " does not sum to 1");
  }
  for (double& p : dist.marginal) p /= static_cast<double>(probabilities.rows());
  return dist;
}

LabelDistribution label_distribution_from_logits(const Matrix& logits) {
  return label_distribution(detail::softmax_rows(logits));
}

double classifier_score(const LabelDistribution& dist) {
  const std::size_t n = dist.per_sample.rows();
  const std::size_t classes = dist.per_sample.cols();
  double mean_kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double kl = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = dist.per_sample(i, k);
      if (p > 0.0) kl += p * (std::log(p) - std::log(dist.marginal[k]));
    }
    mean_kl += kl;
  }
  mean_kl /= static_cast<double>(n);
  return std::clamp(std::exp(mean_kl), 1.0, static_cast<double>(classes));
}

double classifier_score(const Matrix& samples, const Mlp& classifier) {
  if (samples.rows() == 0) throw DomainError("classifier_score: empty sample batch");
  return classifier_score(label_distribution_from_logits(forward(classifier, samples)));
}

Matrix classifier_features(const Mlp& classifier, const Matrix& samples) {
  if (classifier.num_layers() < 2) throw DimensionError("classifier has no hidden layer to take features from");
  return forward_prefix(classifier, samples, classifier.num_layers() - 1);
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows() || a.cov.rows() != a.mean.size())
    throw DimensionError("frechet_distance: dimension mismatch");
  const std::size_t d = a.mean.size();
  Matrix ca = a.cov;
  Matrix cb = b.cov;
  for (std::size_t i = 0; i < d; ++i) {
    ca(i, i) += kFrechetJitter;
    cb(i, i) += kFrechetJitter;
  }
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i) mean_term += (a.mean[i] - b.mean[i]) * (a.mean[i] - b.mean[i]);

  const Matrix root_a = psd_sqrt(ca);
  Matrix inner = root_a * cb * root_a;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) inner(i, j) = inner(j, i) = 0.5 * (inner(i, j) + inner(j, i));
  const double cross = trace(psd_sqrt(inner));
  const double fd = mean_term + trace(ca) + trace(cb) - 2.0 * cross;
  return std::max(fd, 0.0);
}

ModeReport mode_report_from_logits(const Matrix& logits) {
  ModeReport report;
  report.counts.assign(logits.cols(), 0);
  for (std::size_t i = 0; i < logits.rows(); ++i) ++report.counts[detail::argmax(logits.row(i))];
  const auto least = std::min_element(report.counts.begin(), report.counts.end());
  report.least_sampled_class = static_cast<std::size_t>(least - report.counts.begin());
  report.least_count = *least;
  return report;
}

ModeReport mode_report(const Matrix& samples, const Mlp& classifier) {
  return mode_report_from_logits(forward(classifier, samples));
}

double condition_mode_correlation(std::span<const std::pair<double, double>> runs) {
  if (runs.size() < 3) throw DomainError("condition_mode_correlation needs at least 3 runs");
  const double n = static_cast<double>(runs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : runs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : runs) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedCorrelationError("correlation undefined: a coordinate has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace spectralab
