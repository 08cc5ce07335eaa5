#include "spectralab/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>

namespace spectralab {

void Dataset::validate() const {
  if (!all_finite(samples.values())) throw DomainError("dataset '" + name + "' has nonfinite samples");
  if (!labels.empty()) {
    if (labels.size() != samples.rows()) throw DomainError("dataset '" + name + "' label count differs from samples");
    for (std::size_t y : labels)
      if (y >= num_classes) throw DomainError("dataset '" + name + "' label out of range");
  }
  if (image_valued)
    for (double x : samples.values())
      if (x < 0.0 || x > 1.0) throw DomainError("dataset '" + name + "' image value outside [0, 1]");
}

Matrix Dataset::rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = samples.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Vector ring_center(std::size_t mode, std::size_t modes, double radius) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(mode) / static_cast<double>(modes);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

Dataset make_ring_dataset(std::size_t modes, std::size_t n, double radius, double sigma, Rng& rng) {
  if (modes < 2) throw DomainError("ring dataset needs at least 2 modes");
  if (n < modes) throw DomainError("ring dataset needs at least one sample per mode");
  if (!(sigma > 0.0)) throw DomainError("ring dataset sigma must be positive");
  if (!(radius > 0.0)) throw DomainError("ring dataset radius must be positive");

  Dataset ds;
  ds.name = "ring" + std::to_string(modes);
  ds.num_classes = modes;
  ds.samples = Matrix(n, 2);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t mode = i % modes;
    const Vector c = ring_center(mode, modes, radius);
    ds.samples(i, 0) = c[0] + sigma * rng.normal();
    ds.samples(i, 1) = c[1] + sigma * rng.normal();
    ds.labels[i] = mode;
  }
  ds.validate();
  return ds;
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size())
    throw IdxError(IdxError::Kind::truncated, std::string("IDX file truncated in ") + what);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxImageMagic)
    throw IdxError(IdxError::Kind::bad_magic,
                   "bad IDX image magic " + hex32(magic) + ", expected " + hex32(kIdxImageMagic));
  IdxImages img;
  img.count = read_be32(bytes, 4, "image count");
  img.rows = read_be32(bytes, 8, "row count");
  img.cols = read_be32(bytes, 12, "column count");
  const std::size_t payload = img.count * img.rows * img.cols;
  if (bytes.size() < 16 + payload)
    throw IdxError(IdxError::Kind::truncated, "IDX image file truncated: expected " + std::to_string(payload) +
                                                  " pixel bytes, found " + std::to_string(bytes.size() - 16));
  img.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return img;
}

std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  const std::uint32_t magic = read_be32(bytes, 0, "magic");
  if (magic != kIdxLabelMagic)
    throw IdxError(IdxError::Kind::bad_magic,
                   "bad IDX label magic " + hex32(magic) + ", expected " + hex32(kIdxLabelMagic));
  const std::size_t count = read_be32(bytes, 4, "label count");
  if (bytes.size() < 8 + count)
    throw IdxError(IdxError::Kind::truncated, "IDX label file truncated: expected " + std::to_string(count) +
                                                  " labels, found " + std::to_string(bytes.size() - 8));
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::optional<std::size_t> downscale) {
  const IdxImages img = parse_idx_images(read_file(images_path));
  const std::vector<std::uint8_t> labels = parse_idx_labels(read_file(labels_path));
  if (labels.size() != img.count)
    throw IdxError(IdxError::Kind::count_mismatch, "IDX image count " + std::to_string(img.count) +
                                                       " differs from label count " + std::to_string(labels.size()));
  const std::size_t factor = downscale.value_or(1);
  if (factor == 0 || img.rows % factor != 0 || img.cols % factor != 0)
    throw IdxError(IdxError::Kind::bad_shape, "downscale factor " + std::to_string(factor) +
                                                  " does not divide the image size");
  const std::size_t out_rows = img.rows / factor;
  const std::size_t out_cols = img.cols / factor;
  const double block = static_cast<double>(factor * factor) * 255.0;

  Dataset ds;
  ds.name = images_path.stem().string();
  ds.image_valued = true;
  ds.samples = Matrix(img.count, out_rows * out_cols);
  ds.labels.resize(img.count);
  std::size_t max_label = 0;
  for (std::size_t n = 0; n < img.count; ++n) {
    const std::uint8_t* pixels = img.pixels.data() + n * img.rows * img.cols;
    for (std::size_t r = 0; r < out_rows; ++r)
      for (std::size_t c = 0; c < out_cols; ++c) {
        unsigned sum = 0;
        for (std::size_t dr = 0; dr < factor; ++dr)
          for (std::size_t dc = 0; dc < factor; ++dc) sum += pixels[(r * factor + dr) * img.cols + c * factor + dc];
        ds.samples(n, r * out_cols + c) = static_cast<double>(sum) / block;
      }
    ds.labels[n] = labels[n];
    max_label = std::max<std::size_t>(max_label, labels[n]);
  }
  ds.num_classes = img.count ? max_label + 1 : 0;
  ds.validate();
  return ds;
}

LatentBatch sample_latent(std::size_t batch, std::size_t latent_dim, Rng& rng, std::string provenance) {
  if (batch == 0 || latent_dim == 0) throw DomainError("sample_latent needs positive batch size and latent width");
  LatentBatch out{Matrix(batch, latent_dim), std::move(provenance)};
  for (double& x : out.z.values()) x = rng.normal();
  return out;
}

}  // namespace spectralab
