#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfmentor/optim.hpp"
#include "selfmentor/tensor.hpp"

namespace selfmentor {

struct UNetConfig {
  int depth = 3;          // M: number of pooled encoder blocks
  int base_filters = 5;   // F: filters of the first encoder block
  int in_channels = 1;
  int out_channels = 1;
  int convs_per_block = 2;
  int pool_size = 4;
  int kernel_size = 3;

  void validate() const;
  // Spatial extents must be multiples of pool_size^depth.
  int required_divisor() const;
  // Filters at encoder level i (0-based); level == depth is the bottleneck.
  int filters_at(int level) const;

  bool operator==(const UNetConfig&) const = default;
};

std::int64_t parameter_count(const UNetConfig& config);

struct ForwardOptions {
  // Replaces the skip tensor at this encoder level with zeros (-1: none).
  int zero_skip_level = -1;
};

// Encoder-decoder with skip connections:
//   encoder level i: conv^k (F*2^i filters, relu) then 4×4 max pooling
//   bottleneck:      conv^k (F*2^M filters, relu)
//   decoder level i: upsample ×4, concat with encoder level i, conv^k (relu)
//   head:            1×1 convolution to out_channels, sigmoid
class UNet {
 public:
  static UNet build(const UNetConfig& config, std::uint64_t seed);

  UNet(UNet&&) noexcept = default;
  UNet& operator=(UNet&&) noexcept = default;
  UNet& operator=(const UNet&) = delete;

  Tensor forward(const Tensor& x, const ForwardOptions& options = {}) const;

  const UNetConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  std::int64_t parameter_count() const;

  // Frozen nets carry no gradient buffers, so backward never writes to them.
  void set_trainable(bool trainable);
  bool trainable() const { return trainable_; }

  // Deterministic re-initialisation of every parameter; accumulators reset.
  void reinitialize(std::uint64_t seed);

  using Snapshot = std::vector<std::vector<float>>;
  Snapshot snapshot() const;
  void restore(const Snapshot& snapshot);
  // Clears RMSprop state, e.g. before a new training phase.
  void reset_optimizer_state();

  // Independent copy (values and optimiser state).
  UNet clone() const;

 private:
  struct Conv {
    std::size_t weight;  // index into params_; bias follows at weight + 1
  };
  using Block = std::vector<Conv>;

  UNet() = default;
  // Shallow: tensors share storage. Use clone() for an independent copy.
  UNet(const UNet&) = default;
  Tensor run_block(const Block& block, Tensor x) const;
  void add_conv(Block& block, const std::string& prefix, int in, int out, int kernel);

  UNetConfig config_;
  std::vector<Parameter> params_;
  std::vector<Block> encoder_;
  Block bottleneck_;
  std::vector<Block> decoder_;  // decoder_[i] works at encoder level i
  Conv head_{};
  bool trainable_ = true;
};

// Versioned binary container: manifest of integer config fields followed by
// named float32 little-endian tensors in parameter order.
std::string serialize_checkpoint(const UNet& net);
UNet deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const UNet& net, const std::filesystem::path& path);
UNet load_checkpoint(const std::filesystem::path& path);

}  // namespace selfmentor
