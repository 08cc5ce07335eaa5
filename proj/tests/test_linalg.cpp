#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "spectralab/error.hpp"

using namespace spectralab;
using namespace testing;

TEST_CASE("matrix products agree with a naive triple loop") {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = random_matrix(1 + t % 4, 2 + t % 3, rng);
    const Matrix b = random_matrix(a.cols(), 1 + t % 5, rng);
    CHECK(rel_frobenius(a * b, naive_matmul(a, b)) < 1e-14);
    CHECK(rel_frobenius(gram(a), naive_matmul(a.transpose(), a)) < 1e-14);
    CHECK(rel_frobenius(outer_gram(a), naive_matmul(a, a.transpose())) < 1e-14);
  }
  CHECK_THROWS_AS(Matrix(2, 3) * Matrix(2, 3), DimensionError);
  CHECK_THROWS_AS(Matrix(2, 3) + Matrix(3, 2), DimensionError);
  CHECK_THROWS_AS(trace(Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS((Matrix{{1, 2}, {3}}), DimensionError);
}

TEST_CASE("matrix-vector product and helpers") {
  const Matrix a{{1, 2}, {3, 4}, {5, 6}};
  const Vector v{1, -1};
  CHECK(a * v == Vector{-1, -1, -1});
  CHECK(trace(Matrix{{1, 9}, {9, 2}}) == 3.0);
  CHECK(norm2(Vector{3, 4}) == 5.0);
  CHECK(dot(Vector{1, 2, 3}, Vector{4, 5, 6}) == 32.0);
  CHECK(max_abs(Matrix{{-7, 2}}) == 7.0);
  CHECK(all_finite(Vector{1, 2}));
  CHECK_FALSE(all_finite(Vector{1, NAN}));
  CHECK(a.col(1) == Vector{2, 4, 6});
}

TEST_CASE("sym_eig on diagonal and identity input is exact") {
  const EigenDecomposition d = sym_eig(Matrix{{4, 0}, {0, 1}});
  CHECK(d.eigenvalues == Vector{4, 1});
  CHECK(std::abs(d.eigenvectors(0, 0)) == 1.0);
  CHECK(std::abs(d.eigenvectors(1, 1)) == 1.0);
  CHECK(d.eigenvectors(1, 0) == 0.0);

  const EigenDecomposition e = sym_eig(Matrix::identity(5));
  CHECK(e.eigenvalues == Vector(5, 1.0));

  const EigenDecomposition u = sym_eig(Matrix{{1, 0}, {0, 4}});
  CHECK(u.eigenvalues == Vector{4, 1});
  CHECK(std::abs(u.eigenvectors(1, 0)) == 1.0);
}

TEST_CASE("sym_eig residual, orthonormality and reconstruction on random symmetric input") {
  Rng rng(11);
  for (std::size_t n = 1; n <= 9; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      const Matrix a = random_symmetric(n, rng);
      const EigenDecomposition eig = sym_eig(a);
      const Matrix& v = eig.eigenvectors;
      for (std::size_t k = 1; k < n; ++k) CHECK(eig.eigenvalues[k] <= eig.eigenvalues[k - 1]);
      const Matrix vtv = gram(v);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(vtv(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-8);
      for (std::size_t k = 0; k < n; ++k) {
        const Vector vk = v.col(k);
        const Vector av = a * vk;
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(av[i] - eig.eigenvalues[k] * vk[i]) <= 1e-8);
      }
      const Matrix rebuilt = v * Matrix::diagonal(eig.eigenvalues) * v.transpose();
      CHECK(rel_frobenius(rebuilt, a) <= 1e-8);
    }
  }
}

TEST_CASE("sym_eig trace and determinant identities on 2x2 closed form") {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    const EigenDecomposition e = sym_eig(Matrix{{a, b}, {b, c}});
    const double mean = 0.5 * (a + c), rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    CHECK(std::abs(e.eigenvalues[0] - (mean + rad)) < 1e-12);
    CHECK(std::abs(e.eigenvalues[1] - (mean - rad)) < 1e-12);
  }
}

TEST_CASE("sym_eig rejects non-square and asymmetric input") {
  CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(sym_eig(Matrix{{1, 2}, {0, 1}}), SymmetryError);
  CHECK_NOTHROW(sym_eig(Matrix{{1, 2}, {2 + 1e-12, 1}}));
}

TEST_CASE("psd_sqrt examples") {
  const Matrix s = psd_sqrt(Matrix::diagonal(Vector{9, 4}));
  CHECK(std::abs(s(0, 0) - 3) < 1e-15);
  CHECK(std::abs(s(1, 1) - 2) < 1e-15);
  CHECK(s(0, 1) == 0.0);
  CHECK(rel_frobenius(psd_sqrt(Matrix::identity(4)), Matrix::identity(4)) < 1e-15);

  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_matrix(3, 3, rng);
    const Matrix b = gram(a);
    const Matrix r = psd_sqrt(b);
    CHECK(rel_frobenius(r * r, b) <= 1e-8);
    CHECK(max_abs(r - r.transpose()) <= 1e-12);
    for (double lambda : sym_eig(r).eigenvalues) CHECK(lambda >= -1e-12);
  }
}

TEST_CASE("psd_sqrt clamps tiny negative eigenvalues and rejects real negatives") {
  const Matrix near = Matrix::diagonal(Vector{1.0, -1e-12});
  const Matrix r = psd_sqrt(near);
  CHECK(r(1, 1) == 0.0);
  CHECK(r(0, 0) == 1.0);
  CHECK_THROWS_AS(psd_sqrt(Matrix::diagonal(Vector{1.0, -1e-3})), DomainError);
  CHECK_THROWS_AS(psd_sqrt(Matrix{{1, 0.5}, {0, 1}}), SymmetryError);
}

TEST_CASE("spectrum_report examples") {
  const SpectrumReport a = spectrum_report(Vector{4, 1});
  CHECK(a.condition_number == 4.0);
  CHECK(a.log_condition == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(a.log_determinant == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK_FALSE(a.floored);

  const SpectrumReport b = spectrum_report(Vector{1, 1, 1});
  CHECK(b.condition_number == 1.0);
  CHECK(b.log_condition == 0.0);

  const double c = 0.37;
  const SpectrumReport s = spectrum_report(Vector{std::exp(20.0) * c, std::exp(7.0) * c, c});
  CHECK(std::abs(s.log_condition - 20.0) < 1e-12);
  CHECK(std::abs(s.log_determinant - (27.0 + 3 * std::log(c))) < 1e-12);
}

TEST_CASE("spectrum_report floor and errors") {
  const SpectrumReport f = spectrum_report(Vector{2.0, 0.0});
  CHECK(f.floored);
  CHECK(f.condition_number == doctest::Approx(1.0 / kEigenFloorRatio));
  CHECK(f.log_determinant == doctest::Approx(std::log(2.0) + std::log(2.0 * kEigenFloorRatio)));
  CHECK(f.eigenvalues[1] == 0.0);

  const SpectrumReport n = spectrum_report(Vector{2.0, -1e-14});
  CHECK(n.floored);
  CHECK(n.eigenvalues[1] == 0.0);

  CHECK_THROWS_AS(spectrum_report(Vector{}), DomainError);
  CHECK_THROWS_AS(spectrum_report(Vector{1, 2}), DomainError);
  CHECK_THROWS_AS(spectrum_report(Vector{0, 0}), DegenerateSpectrumError);
  CHECK_THROWS_AS(spectrum_report(Vector{-1, -2}), DegenerateSpectrumError);
}

TEST_CASE("spectrum_report invariants on random spectra") {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    Vector ev(1 + t % 7);
    for (double& x : ev) x = std::exp(10 * rng.normal());
    std::sort(ev.rbegin(), ev.rend());
    const SpectrumReport r = spectrum_report(ev);
    CHECK(r.condition_number >= 1.0);
    CHECK(r.log_condition >= 0.0);
    for (std::size_t k = 1; k < r.eigenvalues.size(); ++k) CHECK(r.eigenvalues[k] <= r.eigenvalues[k - 1]);
  }
}

TEST_CASE("covariance_stats matches a two-pass long double estimate") {
  Rng rng(13);
  const Matrix x = random_matrix(50, 4, rng, 3.0);
  const GaussianStats g = covariance_stats(x);
  for (std::size_t j = 0; j < 4; ++j) {
    long double m = 0;
    for (std::size_t i = 0; i < 50; ++i) m += x(i, j);
    m /= 50;
    CHECK(std::abs(g.mean[j] - static_cast<double>(m)) < 1e-13);
  }
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      long double ma = 0, mb = 0;
      for (std::size_t i = 0; i < 50; ++i) ma += x(i, a), mb += x(i, b);
      ma /= 50, mb /= 50;
      long double s = 0;
      for (std::size_t i = 0; i < 50; ++i) s += (x(i, a) - ma) * (x(i, b) - mb);
      CHECK(std::abs(g.cov(a, b) - static_cast<double>(s / 49)) < 1e-12);
      CHECK(g.cov(a, b) == g.cov(b, a));
    }
  for (double lambda : sym_eig(g.cov).eigenvalues) CHECK(lambda >= -1e-10);
}

TEST_CASE("covariance_stats needs two samples") {
  CHECK_THROWS_AS(covariance_stats(Matrix(1, 3)), InsufficientSamplesError);
  const GaussianStats g = covariance_stats(Matrix{{1, 2}, {3, 2}});
  CHECK(g.mean == Vector{2, 2});
  CHECK(g.cov(0, 0) == 2.0);
  CHECK(g.cov(1, 1) == 0.0);
}
