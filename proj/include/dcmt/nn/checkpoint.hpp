#ifndef DCMT_NN_CHECKPOINT_HPP
#define DCMT_NN_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcmt/nn/mlp.hpp"

namespace dcmt::nn {

/// One named network inside a checkpoint, optionally with its optimizer state.
struct NetworkSection {
  std::string name;
  Mlp network;
  std::optional<AdamState> adam;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  std::vector<NetworkSection> sections;

  [[nodiscard]] const NetworkSection& section(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers little-endian, doubles as little-endian IEEE-754):
///
///   "DCMTCKPT"                       8 bytes magic
///   u32 version                      currently 1
///   u64 config_hash
///   u32 section_count
///   per section:
///     u32 name_length, name bytes (UTF-8, no terminator)
///     u8  output_activation          0 identity, 1 relu, 2 sigmoid
///     u32 size_count, u64 sizes[size_count]
///     per layer: f64 weight[out*in] (row-major), f64 bias[out]
///     u8  has_adam
///     if has_adam: i64 step, f64 lr, f64 beta1, f64 beta2, f64 eps,
///                  per layer: m_weight, m_bias, v_weight, v_bias (same order as params)
///   u64 FNV-1a hash of every preceding byte
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
/// Throws FileError on bad magic, unsupported version, truncation or checksum mismatch.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace dcmt::nn

#endif  // DCMT_NN_CHECKPOINT_HPP
