#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "spectralab/data.hpp"
#include "spectralab/linalg.hpp"
#include "spectralab/nn.hpp"

namespace spectralab {

struct MetricSpectrum {
  Matrix jacobian;           // n_x × n_z
  EigenDecomposition eig;    // full n_z × n_z metric tensor
  SpectrumReport report;     // leading min(n_x, n_z) eigenvalues
};

/// Spectrum of M_z = J_zᵀJ_z. When n_x < n_z the trailing n_z − n_x
/// eigenvalues are zero by construction and are left out of the report, so
/// the condition number is taken over the squared singular values of J_z.
MetricSpectrum metric_tensor_spectrum(const Mlp& generator, std::span<const double> z);

struct ConditionSeries {
  double mean = 0.0;           // mean log-condition number
  double mean_log_determinant = 0.0;
  Vector per_point;
  std::size_t floored_points = 0;
};

ConditionSeries mean_log_condition(const Mlp& generator, const Matrix& probe);

struct SingularSpectrum {
  Vector singular_values;      // descending
  Vector log_singular_values;  // natural log, floored at sqrt(1e-30)·σ_max
  SpectrumReport gram;         // spectrum of the Gram matrix (σ²)
};

/// Singular values of J_avg computed as square roots of its Gram eigenvalues.
SingularSpectrum singular_spectrum(const Matrix& m);

/// Singular values of E_z[J_z] over the probe.
SingularSpectrum average_jacobian_spectrum(const Mlp& generator, const Matrix& probe);

struct StretchSeries {
  Vector quotients;   // ‖G(z) − G(z + ε v_k)‖ / ε, one per ε
  double expected = 0.0;  // √λ_k
};

StretchSeries directional_stretch_check(const Mlp& generator, std::span<const double> z, std::size_t k,
                                       std::span<const double> steps);

struct LabelDistribution {
  Matrix per_sample;  // n × K, rows sum to 1
  Vector marginal;
};

LabelDistribution label_distribution(const Matrix& probabilities);
LabelDistribution label_distribution_from_logits(const Matrix& logits);

/// exp(mean KL(p(y|x) ‖ p(y))), clamped to [1, K].
double classifier_score(const LabelDistribution& dist);
double classifier_score(const Matrix& samples, const Mlp& classifier);

/// Last hidden layer activations of the classifier.
Matrix classifier_features(const Mlp& classifier, const Matrix& samples);

inline constexpr double kFrechetJitter = 1e-6;

/// ‖m_a − m_b‖² + Tr(C_a) + Tr(C_b) − 2 Tr((C_a^{1/2} C_b C_a^{1/2})^{1/2}), with
/// kFrechetJitter·I added to both covariances. Clamped at zero.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

struct ModeReport {
  std::vector<std::size_t> counts;
  std::size_t least_sampled_class = 0;
  std::size_t least_count = 0;
};

ModeReport mode_report_from_logits(const Matrix& logits);
ModeReport mode_report(const Matrix& samples, const Mlp& classifier);

/// Pearson correlation over (mean_log_condition, least_count) pairs.
double condition_mode_correlation(std::span<const std::pair<double, double>> runs);

}  // namespace spectralab
