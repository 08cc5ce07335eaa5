#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "spectralab/diagnostics.hpp"
#include "spectralab/error.hpp"

using namespace spectralab;
using namespace testing;

namespace {

Matrix rotation2(double theta) { return Matrix{{std::cos(theta), -std::sin(theta)}, {std::sin(theta), std::cos(theta)}}; }

// Random orthogonal matrix from the eigenvectors of a random symmetric matrix.
Matrix random_orthogonal(std::size_t n, Rng& rng) { return sym_eig(random_symmetric(n, rng)).eigenvectors; }

Mlp compose_output(const Mlp& g, const Matrix& q) {
  std::vector<std::size_t> dims = g.layer_dims();
  dims.push_back(q.rows());
  std::vector<Activation> acts = g.activations();
  acts.push_back(Activation::linear);
  Mlp out(dims, acts);
  for (std::size_t i = 0; i < g.num_layers(); ++i) out.layer(i) = g.layer(i);
  out.layer(g.num_layers()).weight = q;
  return out;
}

// Scalar exp(mean KL) in long double.
long double score_ref(const std::vector<std::vector<long double>>& p) {
  const std::size_t n = p.size(), k = p[0].size();
  std::vector<long double> marg(k, 0);
  for (const auto& row : p)
    for (std::size_t j = 0; j < k; ++j) marg[j] += row[j] / n;
  long double kl = 0;
  for (const auto& row : p)
    for (std::size_t j = 0; j < k; ++j)
      if (row[j] > 0) kl += row[j] * std::log(row[j] / marg[j]);
  return std::exp(kl / n);
}

Matrix to_matrix(const std::vector<std::vector<long double>>& p) {
  Matrix m(p.size(), p[0].size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p[0].size(); ++j) m(i, j) = static_cast<double>(p[i][j]);
  return m;
}

}  // namespace

TEST_CASE("metric tensor of a diagonal linear generator") {
  const Mlp g = Mlp::linear_map(Matrix::diagonal(Vector{3, 1}));
  const MetricSpectrum s = metric_tensor_spectrum(g, Vector{0.2, -0.7});
  CHECK(s.report.eigenvalues == Vector{9, 1});
  CHECK(s.report.condition_number == 9.0);
}

TEST_CASE("isometries have condition number one") {
  Rng rng(1);
  const Matrix q = random_orthogonal(4, rng);
  Matrix cols(4, 2);
  for (std::size_t i = 0; i < 4; ++i) cols(i, 0) = q(i, 0), cols(i, 1) = q(i, 1);
  const MetricSpectrum s = metric_tensor_spectrum(Mlp::linear_map(cols), Vector{1, 2});
  CHECK(std::abs(s.report.condition_number - 1.0) < 1e-12);
  const ConditionSeries c = mean_log_condition(Mlp::linear_map(rotation2(0.4)), random_matrix(10, 2, rng));
  CHECK(std::abs(c.mean) < 1e-12);
}

TEST_CASE("metric spectrum matches squared singular values of the finite difference Jacobian") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const Mlp g = random_tanh_generator(rng, 3, 5, 8);
    const Vector z = random_vector(3, rng);
    const MetricSpectrum s = metric_tensor_spectrum(g, z);
    const Vector fd = sym_eig(gram(finite_difference_jacobian(g, z))).eigenvalues;
    for (std::size_t k = 0; k < 3; ++k) CHECK(rel(s.eig.eigenvalues[k], fd[k]) < 1e-4);
  }
}

TEST_CASE("wide latent reports the leading eigenvalues only") {
  Rng rng(3);
  const Mlp g = random_tanh_generator(rng, 8, 2, 6);
  const MetricSpectrum s = metric_tensor_spectrum(g, random_vector(8, rng));
  CHECK(s.eig.eigenvalues.size() == 8);
  CHECK(s.report.eigenvalues.size() == 2);
  for (std::size_t k = 2; k < 8; ++k) CHECK(std::abs(s.eig.eigenvalues[k]) < 1e-12 * s.eig.eigenvalues[0]);
  const SingularSpectrum sv = singular_spectrum(s.jacobian);
  for (std::size_t k = 0; k < 2; ++k) CHECK(rel(s.report.eigenvalues[k], sv.singular_values[k] * sv.singular_values[k]) < 1e-10);
}

TEST_CASE("condition numbers are invariant under output rotations") {
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const Mlp g = random_tanh_generator(rng, 3, 4, 6);
    const Mlp rotated = compose_output(g, random_orthogonal(4, rng));
    const Vector z = random_vector(3, rng);
    const SpectrumReport a = metric_tensor_spectrum(g, z).report, b = metric_tensor_spectrum(rotated, z).report;
    for (std::size_t k = 0; k < 3; ++k) CHECK(rel(b.eigenvalues[k], a.eigenvalues[k]) < 1e-8);
    CHECK(rel(b.condition_number, a.condition_number) < 1e-8);
  }
}

TEST_CASE("mean log condition of a linear generator is constant") {
  Rng rng(5);
  const Mlp g = Mlp::linear_map(random_matrix(3, 3, rng));
  const ConditionSeries c = mean_log_condition(g, random_matrix(12, 3, rng));
  for (double v : c.per_point) CHECK(std::abs(v - c.per_point[0]) < 1e-9);
  CHECK(std::abs(c.mean - c.per_point[0]) < 1e-9);
  CHECK_THROWS_AS(mean_log_condition(g, Matrix(0, 3)), DomainError);
}

TEST_CASE("mean log condition equals an independent per-point recomputation") {
  Rng rng(6);
  const Mlp g = random_tanh_generator(rng, 4, 3, 8);
  const Matrix probe = random_matrix(16, 4, rng);
  const ConditionSeries c = mean_log_condition(g, probe);
  double sum = 0, logdet = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    const Vector ev = sym_eig(gram(jacobian(g, probe.row(i)))).eigenvalues;
    sum += std::log(ev[0] / ev[2]);
    logdet += std::log(ev[0]) + std::log(ev[1]) + std::log(ev[2]);
  }
  CHECK(std::abs(c.mean - sum / 16) < 1e-6);
  CHECK(std::abs(c.mean_log_determinant - logdet / 16) < 1e-6);
  CHECK(c.floored_points == 0);
}

TEST_CASE("a vanishing Jacobian counts as a floored point") {
  const Mlp zero(std::vector<std::size_t>{2, 2}, {Activation::linear});
  const ConditionSeries c = mean_log_condition(zero, Matrix(3, 2, 1.0));
  CHECK(c.floored_points == 3);
  CHECK(c.mean == doctest::Approx(-std::log(kEigenFloorRatio)));
  const Mlp rank1 = Mlp::linear_map(Matrix{{1, 0}, {0, 0}});
  const ConditionSeries r = mean_log_condition(rank1, Matrix(2, 2, 1.0));
  CHECK(r.floored_points == 2);
}

TEST_CASE("average Jacobian spectrum") {
  Rng rng(7);
  const Matrix a = random_matrix(3, 2, rng);
  const SingularSpectrum lin = average_jacobian_spectrum(Mlp::linear_map(a), random_matrix(9, 2, rng));
  const Vector ev = sym_eig(gram(a)).eigenvalues;
  for (std::size_t k = 0; k < 2; ++k) CHECK(rel(lin.singular_values[k], std::sqrt(ev[k])) < 1e-12);
  for (std::size_t k = 0; k < 2; ++k) CHECK(lin.log_singular_values[k] == std::log(lin.singular_values[k]));

  const Mlp g = random_tanh_generator(rng, 4, 3, 6);
  const Matrix one = random_matrix(1, 4, rng);
  const SingularSpectrum single = average_jacobian_spectrum(g, one);
  const SingularSpectrum direct = singular_spectrum(jacobian(g, one.row(0)));
  CHECK(single.singular_values == direct.singular_values);
  CHECK_THROWS_AS(average_jacobian_spectrum(g, Matrix(0, 4)), DomainError);
}

TEST_CASE("average Jacobian over a symmetric probe of an odd generator") {
  Rng rng(8);
  Mlp odd = random_tanh_generator(rng, 3, 3, 5);  // zero biases and tanh: G(-z) = -G(z)
  const Vector z = random_vector(3, rng);
  Matrix probe(2, 3);
  for (std::size_t j = 0; j < 3; ++j) probe(0, j) = z[j], probe(1, j) = -z[j];
  const SingularSpectrum avg = average_jacobian_spectrum(odd, probe);
  Matrix manual = finite_difference_jacobian(odd, probe.row(0)) + finite_difference_jacobian(odd, probe.row(1));
  manual *= 0.5;
  const Vector ev = sym_eig(gram(manual)).eigenvalues;
  for (std::size_t k = 0; k < 3; ++k) CHECK(rel(avg.singular_values[k], std::sqrt(ev[k])) < 1e-6);
  const SingularSpectrum at_z = singular_spectrum(jacobian(odd, z));
  for (std::size_t k = 0; k < 3; ++k) CHECK(rel(avg.singular_values[k], at_z.singular_values[k]) < 1e-12);
}

TEST_CASE("directional stretch on a diagonal linear generator") {
  const Mlp g = Mlp::linear_map(Matrix::diagonal(Vector{3, 1}));
  const Vector steps{1.0, 1e-2, 1e-4};
  const StretchSeries top = directional_stretch_check(g, Vector{0.5, 0.5}, 0, steps);
  for (double q : top.quotients) CHECK(std::abs(q - 3.0) < 1e-10);
  CHECK(top.expected == 3.0);
  const StretchSeries low = directional_stretch_check(g, Vector{0.5, 0.5}, 1, steps);
  for (double q : low.quotients) CHECK(std::abs(q - 1.0) < 1e-10);
  CHECK_THROWS_AS(directional_stretch_check(g, Vector{0, 0}, 2, steps), DomainError);
  CHECK_THROWS_AS(directional_stretch_check(g, Vector{0, 0}, 0, Vector{-1.0}), DomainError);
}

TEST_CASE("directional stretch converges toward the root eigenvalue") {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const Mlp g = random_tanh_generator(rng, 3, 4, 6);
    const Vector z = random_vector(3, rng);
    for (std::size_t k = 0; k < 3; ++k) {
      const StretchSeries s = directional_stretch_check(g, z, k, Vector{1e-2, 1e-3, 1e-4});
      const double e0 = std::abs(s.quotients[0] - s.expected), e1 = std::abs(s.quotients[1] - s.expected),
                   e2 = std::abs(s.quotients[2] - s.expected);
      CHECK(e1 <= e0);
      CHECK(e2 <= e1);
      CHECK(e2 <= 1e-3 * s.expected);
    }
  }
}

TEST_CASE("label distributions") {
  const LabelDistribution d = label_distribution(Matrix{{0.5, 0.5}, {1.0, 0.0}});
  CHECK(d.marginal == Vector{0.75, 0.25});
  CHECK_THROWS_AS(label_distribution(Matrix{{0.5, 0.6}}), DomainError);
  CHECK_THROWS_AS(label_distribution(Matrix{{1.5, -0.5}}), DomainError);
  CHECK_THROWS_AS(label_distribution(Matrix(0, 3)), DomainError);
  const LabelDistribution l = label_distribution_from_logits(Matrix{{1000, 0}, {0, 0}});
  CHECK(l.per_sample(0, 0) == 1.0);
  CHECK(l.per_sample(1, 1) == 0.5);
  double s = 0;
  for (double p : l.marginal) s += p;
  CHECK(std::abs(s - 1) < 1e-15);
}

TEST_CASE("classifier score examples") {
  CHECK(classifier_score(label_distribution(Matrix(5, 4, 0.25))) == 1.0);
  const double k = classifier_score(label_distribution(Matrix::identity(6)));
  CHECK(std::abs(k - 6.0) < 1e-12);
  const std::vector<std::vector<long double>> table{
      {0.1L, 0.2L, 0.3L, 0.4L}, {0.7L, 0.1L, 0.1L, 0.1L}, {0.25L, 0.25L, 0.5L, 0.0L}};
  CHECK(std::abs(classifier_score(label_distribution(to_matrix(table))) - static_cast<double>(score_ref(table))) < 1e-10);
}

TEST_CASE("classifier score stays within [1, K]") {
  Rng rng(10);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + t % 9, k = 2 + t % 7;
    Matrix p(n, k);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < k; ++j) s += (p(i, j) = rng.uniform() < 0.2 ? 0.0 : std::exp(3 * rng.normal()));
      if (s == 0) p(i, 0) = s = 1;
      for (std::size_t j = 0; j < k; ++j) p(i, j) /= s;
    }
    const double score = classifier_score(label_distribution(p));
    CHECK(score >= 1.0);
    CHECK(score <= static_cast<double>(k));
  }
}

TEST_CASE("classifier score and features from a network") {
  Rng rng(11);
  const Mlp clf = Mlp::random_normal({2, 5, 3}, {Activation::tanh, Activation::linear}, 1.0, rng);
  const Matrix x = random_matrix(20, 2, rng);
  CHECK(classifier_score(x, clf) == classifier_score(label_distribution_from_logits(forward(clf, x))));
  CHECK(classifier_features(clf, x) == forward_prefix(clf, x, 1));
  CHECK(classifier_features(clf, x).cols() == 5);
  CHECK_THROWS_AS(classifier_score(Matrix(0, 2), clf), DomainError);
  CHECK_THROWS_AS(classifier_features(Mlp::linear_map(Matrix(3, 2)), x), DimensionError);
}

TEST_CASE("frechet distance examples") {
  Rng rng(12);
  const GaussianStats a = covariance_stats(random_matrix(30, 4, rng));
  CHECK(frechet_distance(a, a) <= 1e-8);
  const GaussianStats i1{Vector{1, 2, 2}, Matrix::identity(3)};
  const GaussianStats i0{Vector{0, 0, 0}, Matrix::identity(3)};
  CHECK(std::abs(frechet_distance(i1, i0) - 9.0) < 1e-9);
  CHECK_THROWS_AS(frechet_distance(i1, GaussianStats{Vector{0, 0}, Matrix::identity(2)}), DimensionError);
}

TEST_CASE("frechet distance matches the diagonal closed form") {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + t % 6;
    GaussianStats a{random_vector(d, rng), Matrix(d, d)}, b{random_vector(d, rng), Matrix(d, d)};
    long double ref = 0;
    for (std::size_t i = 0; i < d; ++i) {
      a.cov(i, i) = std::exp(rng.normal());
      b.cov(i, i) = std::exp(rng.normal());
      const long double ca = a.cov(i, i) + kFrechetJitter, cb = b.cov(i, i) + kFrechetJitter;
      const long double dm = a.mean[i] - b.mean[i];
      ref += dm * dm + (std::sqrt(ca) - std::sqrt(cb)) * (std::sqrt(ca) - std::sqrt(cb));
    }
    CHECK(std::abs(frechet_distance(a, b) - static_cast<double>(ref)) < 1e-8);
  }
}

TEST_CASE("frechet distance is symmetric on random full covariances") {
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const GaussianStats a = covariance_stats(random_matrix(40, 5, rng));
    const GaussianStats b = covariance_stats(random_matrix(40, 5, rng, 2.0));
    const double ab = frechet_distance(a, b), ba = frechet_distance(b, a);
    CHECK(std::abs(ab - ba) <= 1e-6 * std::max(ab, 1e-12));
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("mode report examples") {
  Matrix all0(10, 8, 0.0);
  for (std::size_t i = 0; i < 10; ++i) all0(i, 0) = 1.0;
  const ModeReport r = mode_report_from_logits(all0);
  CHECK(r.least_sampled_class == 1);
  CHECK(r.least_count == 0);
  CHECK(r.counts[0] == 10);

  Matrix uniform(360, 8, 0.0);
  for (std::size_t i = 0; i < 360; ++i) uniform(i, i % 8) = 1.0;
  const ModeReport u = mode_report_from_logits(uniform);
  CHECK(u.least_count == 45);
  CHECK(u.least_sampled_class == 0);

  Matrix ties(1, 3, 0.0);
  CHECK(mode_report_from_logits(ties).counts == std::vector<std::size_t>{1, 0, 0});
}

TEST_CASE("mode report equals a brute-force tally") {
  Rng rng(15);
  const Mlp clf = Mlp::random_normal({2, 6, 5}, {Activation::tanh, Activation::linear}, 1.0, rng);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.uniform_index(100);
    const Matrix x = random_matrix(n, 2, rng, 3.0);
    const ModeReport r = mode_report(x, clf);
    const Matrix logits = forward(clf, x);
    std::vector<std::size_t> counts(5, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < 5; ++k)
        if (logits(i, k) > logits(i, best)) best = k;
      counts[best]++;
    }
    CHECK(r.counts == counts);
    CHECK(std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n);
    CHECK(r.least_count == *std::min_element(counts.begin(), counts.end()));
    CHECK(r.counts[r.least_sampled_class] == r.least_count);
  }
}

TEST_CASE("condition mode correlation") {
  const std::vector<std::pair<double, double>> down{{1, 9}, {2, 7}, {3, 5}, {4, 3}};
  CHECK(std::abs(condition_mode_correlation(down) + 1.0) < 1e-15);
  const std::vector<std::pair<double, double>> up{{1, 2}, {2, 4}, {3, 6}};
  CHECK(std::abs(condition_mode_correlation(up) - 1.0) < 1e-15);
  // Hand computation: x̄ = 3, ȳ = 4; Sxy = -13, Sxx = 10, Syy = 22.
  const std::vector<std::pair<double, double>> table{{1, 6}, {2, 7}, {3, 3}, {4, 2}, {5, 2}};
  CHECK(std::abs(condition_mode_correlation(table) - (-13.0 / std::sqrt(220.0))) < 1e-15);
  CHECK_THROWS_AS(condition_mode_correlation(std::vector<std::pair<double, double>>{{1, 2}, {2, 3}}), DomainError);
  const std::vector<std::pair<double, double>> flat{{1, 2}, {2, 2}, {3, 2}};
  CHECK_THROWS_AS(condition_mode_correlation(flat), UndefinedCorrelationError);
}
