#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "spectralab/linalg.hpp"
#include "spectralab/nn.hpp"
#include "spectralab/rng.hpp"

namespace testing {

using namespace spectralab;

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& x : m.values()) x = scale * rng.normal();
  return m;
}

inline Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix a = random_matrix(n, n, rng);
  Matrix s = a + a.transpose();
  s *= 0.5;
  return s;
}

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  return frobenius_norm(a - b) / std::max(frobenius_norm(b), 1e-300);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// tanh network with O(1) weights so Jacobians are far from zero.
inline Mlp random_tanh_generator(Rng& rng, std::size_t nz = 4, std::size_t nx = 3, std::size_t hidden = 6) {
  return Mlp::random_normal({nz, hidden, hidden, nx}, {Activation::tanh, Activation::tanh, Activation::linear},
                            0.7, rng);
}

/// Central differences, step h.
inline Matrix finite_difference_jacobian(const Mlp& net, std::span<const double> z, double h = 1e-5) {
  Matrix j(net.output_dim(), z.size());
  Vector zp(z.begin(), z.end()), zm(z.begin(), z.end());
  for (std::size_t c = 0; c < z.size(); ++c) {
    zp[c] = z[c] + h;
    zm[c] = z[c] - h;
    const Vector fp = forward(net, zp), fm = forward(net, zm);
    for (std::size_t r = 0; r < fp.size(); ++r) j(r, c) = (fp[r] - fm[r]) / (2 * h);
    zp[c] = zm[c] = z[c];
  }
  return j;
}

inline Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("spectralab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace testing
