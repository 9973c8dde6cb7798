#include "selfmentor/unet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"
#include "selfmentor/ops.hpp"
#include "selfmentor/rng.hpp"

namespace selfmentor {

void UNetConfig::validate() const {
  if (depth < 1) throw ContractError("UNet depth must be >= 1");
  if (base_filters < 1) throw ContractError("UNet base_filters must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw ContractError("UNet channel counts must be >= 1");
  if (convs_per_block < 1) throw ContractError("UNet convs_per_block must be >= 1");
  if (pool_size != 4) throw ContractError("UNet pool_size is fixed to 4");
  if (kernel_size != 3) throw ContractError("UNet kernel_size is fixed to 3");
  if (depth > 12 || base_filters > (1 << 20) >> depth) {
    throw ContractError("UNet depth/base_filters too large");
  }
}

int UNetConfig::required_divisor() const {
  int d = 1;
  for (int i = 0; i < depth; ++i) d *= pool_size;
  return d;
}

int UNetConfig::filters_at(int level) const { return base_filters << level; }

std::int64_t parameter_count(const UNetConfig& c) {
  c.validate();
  const std::int64_t k2 = static_cast<std::int64_t>(c.kernel_size) * c.kernel_size;
  auto conv = [k2](std::int64_t in, std::int64_t out) { return in * out * k2 + out; };
  auto block = [&](std::int64_t in, std::int64_t out) {
    std::int64_t n = conv(in, out);
    for (int i = 1; i < c.convs_per_block; ++i) n += conv(out, out);
    return n;
  };
  std::int64_t total = 0;
  std::int64_t in = c.in_channels;
  for (int i = 0; i < c.depth; ++i) {
    total += block(in, c.filters_at(i));
    in = c.filters_at(i);
  }
  total += block(in, c.filters_at(c.depth));
  for (int i = c.depth - 1; i >= 0; --i) {
    total += block(c.filters_at(i + 1) + c.filters_at(i), c.filters_at(i));
  }
  total += static_cast<std::int64_t>(c.filters_at(0)) * c.out_channels + c.out_channels;
  return total;
}

void UNet::add_conv(Block& block, const std::string& prefix, int in, int out, int kernel) {
  block.push_back(Conv{params_.size()});
  params_.emplace_back(prefix + ".weight", Tensor(Shape{out, in, kernel, kernel}));
  params_.emplace_back(prefix + ".bias", Tensor(Shape{out}));
}

UNet UNet::build(const UNetConfig& config, std::uint64_t seed) {
  config.validate();
  UNet net;
  net.config_ = config;
  const int k = config.kernel_size;
  auto make_block = [&](const std::string& name, int in, int out) {
    Block block;
    for (int i = 0; i < config.convs_per_block; ++i) {
      net.add_conv(block, name + ".conv" + std::to_string(i), i == 0 ? in : out, out, k);
    }
    return block;
  };
  int in = config.in_channels;
  for (int i = 0; i < config.depth; ++i) {
    net.encoder_.push_back(make_block("enc" + std::to_string(i), in, config.filters_at(i)));
    in = config.filters_at(i);
  }
  net.bottleneck_ = make_block("bottleneck", in, config.filters_at(config.depth));
  net.decoder_.resize(static_cast<std::size_t>(config.depth));
  for (int i = config.depth - 1; i >= 0; --i) {
    net.decoder_[static_cast<std::size_t>(i)] =
        make_block("dec" + std::to_string(i), config.filters_at(i + 1) + config.filters_at(i),
                   config.filters_at(i));
  }
  Block head;
  net.add_conv(head, "head", config.filters_at(0), config.out_channels, 1);
  net.head_ = head.front();
  net.reinitialize(seed);
  net.set_trainable(true);
  return net;
}

void UNet::reinitialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    Tensor& w = params_[i].value;
    const int out = w.dim(0), in = w.dim(1), k = w.dim(2);
    const double fan_in = static_cast<double>(in) * k * k;
    const double fan_out = static_cast<double>(out) * k * k;
    // He-uniform ahead of relu, Glorot-uniform for the sigmoid head.
    const bool is_head = (i == head_.weight);
    const double bound = is_head ? std::sqrt(6.0 / (fan_in + fan_out)) : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<float> dist(static_cast<float>(-bound),
                                               static_cast<float>(bound));
    for (float& v : w.values()) v = dist(rng);
    for (float& v : params_[i + 1].value.values()) v = 0.0f;
  }
  reset_optimizer_state();
}

void UNet::reset_optimizer_state() {
  for (Parameter& p : params_) {
    std::fill(p.rms_accumulator.begin(), p.rms_accumulator.end(), 0.0f);
    p.value.zero_grad();
  }
}

std::int64_t UNet::parameter_count() const {
  std::int64_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::int64_t>(p.value.numel());
  return n;
}

void UNet::set_trainable(bool trainable) {
  trainable_ = trainable;
  for (Parameter& p : params_) p.value.set_track_grad(trainable);
}

UNet::Snapshot UNet::snapshot() const {
  Snapshot s;
  s.reserve(params_.size());
  for (const Parameter& p : params_) s.emplace_back(p.value.values().begin(), p.value.values().end());
  return s;
}

void UNet::restore(const Snapshot& snapshot) {
  if (snapshot.size() != params_.size()) throw ShapeError("snapshot does not match network");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].value.values();
    if (snapshot[i].size() != dst.size()) throw ShapeError("snapshot tensor size mismatch");
    std::copy(snapshot[i].begin(), snapshot[i].end(), dst.begin());
  }
}

UNet UNet::clone() const {
  UNet copy = *this;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    copy.params_[i].value = params_[i].value.detach();
  }
  copy.set_trainable(trainable_);
  return copy;
}

Tensor UNet::run_block(const Block& block, Tensor x) const {
  for (const Conv& conv : block) {
    x = relu(conv2d_same(x, params_[conv.weight].value, params_[conv.weight + 1].value));
  }
  return x;
}

Tensor UNet::forward(const Tensor& x, const ForwardOptions& options) const {
  if (x.rank() != 4) {
    throw ShapeError("UNet input must be N×C×H×W, got " + shape_to_string(x.shape()));
  }
  if (x.dim(1) != config_.in_channels) {
    throw ShapeError("UNet expects " + std::to_string(config_.in_channels) +
                     " input channels, got " + std::to_string(x.dim(1)));
  }
  const int divisor = config_.required_divisor();
  if (x.dim(2) % divisor != 0 || x.dim(3) % divisor != 0) {
    throw ShapeError("UNet input height and width must be divisible by " +
                     std::to_string(divisor) + " (pool_size^depth), got " +
                     std::to_string(x.dim(2)) + "x" + std::to_string(x.dim(3)));
  }

  std::vector<Tensor> skips;
  skips.reserve(encoder_.size());
  Tensor h = x;
  for (const Block& block : encoder_) {
    h = run_block(block, h);
    skips.push_back(h);
    h = maxpool4(h);
  }
  h = run_block(bottleneck_, h);
  for (int i = config_.depth - 1; i >= 0; --i) {
    Tensor skip = skips[static_cast<std::size_t>(i)];
    if (options.zero_skip_level == i) skip = Tensor(skip.shape(), 0.0f);
    h = concat_channels(upsample_nearest4(h), skip);
    h = run_block(decoder_[static_cast<std::size_t>(i)], h);
  }
  return sigmoid(conv2d_same(h, params_[head_.weight].value, params_[head_.weight + 1].value));
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

constexpr char kMagic[8] = {'S', 'M', 'U', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    out_.append(static_cast<const char*>(data), n);
  }
  template <typename T>
  void le(T value) {
    using U = std::make_unsigned_t<T>;
    U u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
  void name(const std::string& s) {
    le<std::uint16_t>(static_cast<std::uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T le() {
    using U = std::make_unsigned_t<T>;
    need(sizeof(T));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  std::string name() {
    const auto n = le<std::uint16_t>();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw std::runtime_error("checkpoint truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const UNet& net) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kVersion);
  const UNetConfig& c = net.config();
  const std::pair<const char*, int> manifest[] = {
      {"depth", c.depth},           {"base_filters", c.base_filters},
      {"in_channels", c.in_channels}, {"out_channels", c.out_channels},
      {"convs_per_block", c.convs_per_block}, {"pool_size", c.pool_size},
      {"kernel_size", c.kernel_size}};
  w.le<std::uint32_t>(static_cast<std::uint32_t>(std::size(manifest)));
  for (const auto& [key, value] : manifest) {
    w.name(key);
    w.le<std::int64_t>(value);
  }
  w.le<std::uint32_t>(static_cast<std::uint32_t>(net.parameters().size()));
  for (const Parameter& p : net.parameters()) {
    w.name(p.name);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : p.value.values()) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  return w.take();
}

UNet deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("not a U-net checkpoint (bad magic)");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  UNetConfig c;
  const auto entries = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < entries; ++i) {
    const std::string key = r.name();
    const auto value = static_cast<int>(r.le<std::int64_t>());
    if (key == "depth") c.depth = value;
    else if (key == "base_filters") c.base_filters = value;
    else if (key == "in_channels") c.in_channels = value;
    else if (key == "out_channels") c.out_channels = value;
    else if (key == "convs_per_block") c.convs_per_block = value;
    else if (key == "pool_size") c.pool_size = value;
    else if (key == "kernel_size") c.kernel_size = value;
    else throw std::runtime_error("unknown checkpoint manifest key '" + key + "'");
  }
  UNet net = UNet::build(c, 0);
  const auto count = r.le<std::uint32_t>();
  if (count != net.parameters().size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                             std::to_string(net.parameters().size()));
  }
  for (Parameter& p : net.parameters()) {
    const std::string name = r.name();
    if (name != p.name) throw std::runtime_error("checkpoint tensor '" + name + "' out of order, expected '" + p.name + "'");
    const auto rank = r.le<std::uint32_t>();
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(static_cast<int>(r.le<std::uint32_t>()));
    if (shape != p.value.shape()) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               shape_to_string(shape) + ", expected " +
                               shape_to_string(p.value.shape()));
    }
    for (float& v : p.value.values()) v = std::bit_cast<float>(r.le<std::uint32_t>());
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after checkpoint payload");
  return net;
}

void save_checkpoint(const UNet& net, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(net));
}

UNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace selfmentor
