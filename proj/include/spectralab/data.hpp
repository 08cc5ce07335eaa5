#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectralab/error.hpp"
#include "spectralab/linalg.hpp"
#include "spectralab/rng.hpp"

namespace spectralab {

struct Dataset {
  std::string name;
  Matrix samples;                   // n × n_x
  std::vector<std::size_t> labels;  // empty, or one per sample
  std::size_t num_classes = 0;
  bool image_valued = false;        // entries in [0, 1]

  std::size_t size() const { return samples.rows(); }
  std::size_t dim() const { return samples.cols(); }
  bool labeled() const { return !labels.empty(); }

  /// Throws DomainError when an invariant is broken.
  void validate() const;
  Matrix rows(std::span<const std::size_t> indices) const;
};

/// K Gaussian modes (isotropic, stddev sigma) centred on a circle; sample i
/// belongs to mode i mod K.
Dataset make_ring_dataset(std::size_t modes, std::size_t n, double radius, double sigma, Rng& rng);
Vector ring_center(std::size_t mode, std::size_t modes, double radius);

class IdxError : public Error {
 public:
  enum class Kind { io, bad_magic, truncated, count_mismatch, bad_shape };
  IdxError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // count × rows × cols
};

IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

/// Pixels scaled to [0, 1]; optional block-average downscale by an integer
/// factor that divides both image sides.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<std::size_t> downscale = std::nullopt);

struct LatentBatch {
  Matrix z;  // B × n_z, i.i.d. N(0, 1)
  std::string provenance;
};

LatentBatch sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng, std::string provenance = "");

}  // namespace spectralab
