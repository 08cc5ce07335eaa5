#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spectralab/error.hpp"
#include "spectralab/nn.hpp"

namespace spectralab {

// Binary layout, all integers little-endian:
//   "SPECTRALAB1"                   11-byte magic (the trailing digit is the format version)
//   u32 L                           number of layers
//   u32 dims[L + 1]                 layer widths
//   u8  activation[L]               tags as in Activation
//   f64 parameters                  per layer: weight (out × in, row-major), then bias
// Nothing may follow the parameter blob.
inline constexpr char kCheckpointMagic[] = "SPECTRALAB1";
inline constexpr std::size_t kCheckpointMagicSize = 11;

class CheckpointError : public Error {
 public:
  enum class Kind { format, version, truncated, shape, io };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_checkpoint(const Mlp& net);
Mlp decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Mlp& net, const std::filesystem::path& path);
/// When `expected_dims` is given the stored architecture must match it.
Mlp load_checkpoint(const std::filesystem::path& path,
                    const std::optional<std::vector<std::size_t>>& expected_dims = std::nullopt);

/// Save then load; returns the reloaded network.
Mlp checkpoint_roundtrip(const Mlp& net, const std::filesystem::path& path);

}  // namespace spectralab
