#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace spectralab {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> values);
  /// Single-column matrix holding `v`.
  static Matrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  Vector col(std::size_t c) const;

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> v);

/// aᵀ·a without forming the transpose.
Matrix gram(const Matrix& a);
/// a·aᵀ.
Matrix outer_gram(const Matrix& a);

double frobenius_norm(const Matrix& m);
double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double trace(const Matrix& m);
double max_abs(const Matrix& m);
bool all_finite(std::span<const double> v);

/// Throws SymmetryError when |m(i,j) - m(j,i)| exceeds tol·max(1, max|m|).
void require_symmetric(const Matrix& m, double tol = 1e-8);

struct EigenDecomposition {
  Vector eigenvalues;  // descending
  Matrix eigenvectors; // column k pairs with eigenvalues[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls to
/// 1e-12·‖m‖_F (or exactly zero).
EigenDecomposition sym_eig(const Matrix& m);

/// Principal square root of a symmetric PSD matrix. Eigenvalues in
/// [-1e-10·max(1, λ_max), 0) are clamped to zero; anything more negative
/// raises DomainError.
Matrix psd_sqrt(const Matrix& m);

struct SpectrumReport {
  Vector eigenvalues;  // descending, nonnegative
  double condition_number = 1.0;
  double log_condition = 0.0;
  double log_determinant = 0.0;
  bool floored = false;
};

/// Condition number λ_max / max(λ_min, 1e-30·λ_max). The log-determinant sums
/// logs of the floored eigenvalues.
SpectrumReport spectrum_report(const EigenDecomposition& eig);
SpectrumReport spectrum_report(std::span<const double> descending_eigenvalues);

constexpr double kEigenFloorRatio = 1e-30;

struct GaussianStats {
  Vector mean;
  Matrix cov;
};

/// Column means and the unbiased, symmetrized sample covariance of the rows.
GaussianStats covariance_stats(const Matrix& samples);

}  // namespace spectralab
