#include "spectralab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "spectralab/error.hpp"

namespace spectralab {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

Vector Matrix::col(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("matrix sum shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw DimensionError("matrix difference shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matrix product: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw DimensionError("matrix-vector product shape mismatch");
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v);
  return out;
}

Matrix gram(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix g(n, n);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = row[i];
      for (std::size_t j = i; j < n; ++j) g(i, j) += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

Matrix outer_gram(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) g(i, j) = g(j, i) = dot(a.row(i), a.row(j));
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot product length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double frobenius_norm(const Matrix& m) { return norm2(m.values()); }

double trace(const Matrix& m) {
  if (!m.square()) throw DimensionError("trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double x : m.values()) best = std::max(best, std::abs(x));
  return best;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_symmetric(const Matrix& m, double tol) {
  if (!m.square())
    throw DimensionError("expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  const double scale = std::max(1.0, max_abs(m));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > tol * scale)
        throw SymmetryError("matrix is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
}

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTolerance = 1e-12;

}  // namespace

EigenDecomposition sym_eig(const Matrix& m) {
  require_symmetric(m);
  const std::size_t n = m.rows();
  Matrix a = m;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double threshold = kJacobiTolerance * frobenius_norm(a);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_norm(a);
    if (off == 0.0 || off <= threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        const double app = a(p, p);
        const double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
          a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

Matrix psd_sqrt(const Matrix& m) {
  EigenDecomposition eig = sym_eig(m);
  const std::size_t n = m.rows();
  const double tol = 1e-10 * std::max(1.0, eig.eigenvalues.empty() ? 0.0 : std::abs(eig.eigenvalues.front()));
  Vector roots(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = eig.eigenvalues[k];
    if (lambda < -tol)
      throw DomainError("psd_sqrt: eigenvalue " + std::to_string(lambda) + " is below the PSD tolerance");
    roots[k] = lambda > 0.0 ? std::sqrt(lambda) : 0.0;
  }
  Matrix s(n, n);
  const Matrix& v = eig.eigenvectors;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += v(i, k) * roots[k] * v(j, k);
      s(i, j) = s(j, i) = acc;
    }
  return s;
}

SpectrumReport spectrum_report(const EigenDecomposition& eig) { return spectrum_report(eig.eigenvalues); }

SpectrumReport spectrum_report(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw DomainError("spectrum_report: empty spectrum");
  for (std::size_t i = 1; i < eigenvalues.size(); ++i)
    if (eigenvalues[i] > eigenvalues[i - 1]) throw DomainError("spectrum_report: eigenvalues must be sorted descending");
  const double lambda_max = eigenvalues.front();
  if (!(lambda_max > 0.0)) throw DegenerateSpectrumError("spectrum_report: largest eigenvalue is not positive");

  SpectrumReport report;
  report.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());
  for (double& x : report.eigenvalues) x = std::max(x, 0.0);

  const double floor = kEigenFloorRatio * lambda_max;
  const double lambda_min = report.eigenvalues.back();
  report.floored = lambda_min < floor;
  report.condition_number = lambda_max / std::max(lambda_min, floor);
  report.log_condition = std::log(lambda_max) - std::log(std::max(lambda_min, floor));
  report.log_determinant = 0.0;
  for (double x : report.eigenvalues) report.log_determinant += std::log(std::max(x, floor));
  return report;
}

GaussianStats covariance_stats(const Matrix& samples) {
  const std::size_t n = samples.rows();
  const std::size_t d = samples.cols();
  if (n < 2) throw InsufficientSamplesError("covariance_stats needs at least 2 samples, got " + std::to_string(n));
  GaussianStats stats;
  stats.mean.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = samples.row(r);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row[j];
  }
  for (double& m : stats.mean) m /= static_cast<double>(n);

  Matrix centered = samples;
  for (std::size_t r = 0; r < n; ++r) {
    auto row = centered.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] -= stats.mean[j];
  }
  stats.cov = gram(centered);
  stats.cov *= 1.0 / static_cast<double>(n - 1);
  return stats;
}

}  // namespace spectralab
