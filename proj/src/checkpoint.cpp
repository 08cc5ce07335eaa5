#include "spectralab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace spectralab {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size())
      throw CheckpointError(CheckpointError::Kind::truncated,
                            std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kMaxLayers = 1024;
constexpr std::uint32_t kMaxWidth = 1u << 20;

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Mlp& net) {
  std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + kCheckpointMagicSize);
  const auto dims = net.layer_dims();
  put_u32(out, static_cast<std::uint32_t>(net.num_layers()));
  for (std::size_t d : dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (const Layer& l : net.layers()) out.push_back(static_cast<std::uint8_t>(l.activation));
  for (const Layer& l : net.layers()) {
    for (double w : l.weight.values()) put_f64(out, w);
    for (double b : l.bias) put_f64(out, b);
  }
  return out;
}

Mlp decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  // The version digit is checked separately so an older/newer file reports a
  // version problem rather than a generic format error.
  constexpr std::size_t prefix = kCheckpointMagicSize - 1;
  if (bytes.size() < kCheckpointMagicSize) {
    if (std::memcmp(bytes.data(), kCheckpointMagic, bytes.size()) == 0)
      throw CheckpointError(CheckpointError::Kind::truncated, "checkpoint truncated inside the magic header");
    throw CheckpointError(CheckpointError::Kind::format, "not a checkpoint: bad magic");
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, prefix) != 0)
    throw CheckpointError(CheckpointError::Kind::format, "not a checkpoint: expected magic SPECTRALAB1");
  if (bytes[prefix] != static_cast<std::uint8_t>(kCheckpointMagic[prefix]))
    throw CheckpointError(CheckpointError::Kind::version,
                          std::string("unsupported checkpoint version '") + static_cast<char>(bytes[prefix]) +
                              "', expected '1'");

  Reader in(bytes);
  in.skip(kCheckpointMagicSize);
  const std::uint32_t num_layers = in.u32("layer count");
  if (num_layers == 0 || num_layers > kMaxLayers)
    throw CheckpointError(CheckpointError::Kind::shape, "checkpoint layer count out of range");
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i <= num_layers; ++i) {
    const std::uint32_t d = in.u32("layer widths");
    if (d == 0 || d > kMaxWidth) throw CheckpointError(CheckpointError::Kind::shape, "checkpoint layer width out of range");
    dims.push_back(d);
  }
  std::vector<Activation> acts;
  for (std::uint32_t i = 0; i < num_layers; ++i) {
    const std::uint8_t tag = in.u8("activation tags");
    if (tag > static_cast<std::uint8_t>(Activation::linear))
      throw CheckpointError(CheckpointError::Kind::format, "checkpoint has unknown activation tag " + std::to_string(tag));
    acts.push_back(static_cast<Activation>(tag));
  }
  Mlp net(dims, acts);
  for (std::size_t k = 0; k < net.num_layers(); ++k) {
    Layer& layer = net.layer(k);
    for (double& w : layer.weight.values()) w = in.f64("parameters");
    for (double& b : layer.bias) b = in.f64("parameters");
  }
  if (in.remaining() != 0)
    throw CheckpointError(CheckpointError::Kind::format,
                          "checkpoint has " + std::to_string(in.remaining()) + " trailing bytes");
  return net;
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "failed writing " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path, const std::optional<std::vector<std::size_t>>& expected_dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Mlp net = decode_checkpoint(bytes);
  if (expected_dims && net.layer_dims() != *expected_dims)
    throw CheckpointError(CheckpointError::Kind::shape, "checkpoint " + path.string() + " has an unexpected architecture");
  return net;
}

Mlp checkpoint_roundtrip(const Mlp& net, const std::filesystem::path& path) {
  save_checkpoint(net, path);
  return load_checkpoint(path, net.layer_dims());
}

}  // namespace spectralab
