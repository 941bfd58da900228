#include "warpfake/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "warpfake/rng.hpp"

namespace warpfake {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

constexpr char kMagic[4] = {'W', 'F', 'C', 'K'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void floats(const std::vector<float>& values) {
    u64(values.size());
    for (float f : values) u32(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : in_(bytes) {}
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::vector<float> floats(std::uint64_t max_count) {
    const std::uint64_t n = u64();
    if (n > max_count) throw FormatError("checkpoint array length is implausible");
    need(static_cast<std::size_t>(n) * 4);
    std::vector<float> out(static_cast<std::size_t>(n));
    for (float& f : out) f = std::bit_cast<float>(u32());
    return out;
  }
  std::size_t position() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> ModelCheckpoint::serialize() const {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(architecture.input_size));
  w.u32(static_cast<std::uint32_t>(architecture.channels.size()));
  for (int c : architecture.channels) w.u32(static_cast<std::uint32_t>(c));
  w.u64(step);
  w.u32(epochs_done);
  w.u32(hard_epochs_done);
  w.u64(hard_start_step);
  w.u64(seed);
  w.u64(config_hash);
  w.u64(rng_digest);
  w.floats(weights);
  w.floats(velocity);
  const std::uint64_t checksum = fnv1a64(w.bytes());
  w.u64(checksum);
  return std::move(w.bytes());
}

ModelCheckpoint ModelCheckpoint::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelCheckpoint ck;
  ck.architecture.input_size = static_cast<int>(r.u32());
  const std::uint32_t blocks = r.u32();
  if (blocks > 64) throw FormatError("checkpoint block count is implausible");
  ck.architecture.channels.clear();
  for (std::uint32_t i = 0; i < blocks; ++i) ck.architecture.channels.push_back(static_cast<int>(r.u32()));
  ck.step = r.u64();
  ck.epochs_done = r.u32();
  ck.hard_epochs_done = r.u32();
  ck.hard_start_step = r.u64();
  ck.seed = r.u64();
  ck.config_hash = r.u64();
  ck.rng_digest = r.u64();
  const std::uint64_t limit = bytes.size() / 4;
  ck.weights = r.floats(limit);
  ck.velocity = r.floats(limit);
  const std::size_t body = 4 + r.position();
  const std::uint64_t stored = r.u64();
  if (stored != fnv1a64(bytes.first(body))) throw FormatError("checkpoint checksum mismatch");
  if (4 + r.position() != bytes.size()) throw FormatError("trailing bytes after checkpoint");

  try {
    ck.architecture.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid architecture: ") + e.what());
  }
  if (ck.weights.size() != ck.architecture.parameter_count()) {
    throw FormatError("weight count does not match the architecture");
  }
  if (!ck.velocity.empty() && ck.velocity.size() != ck.weights.size()) {
    throw FormatError("velocity count does not match the weight count");
  }
  return ck;
}

Cnn<float> ModelCheckpoint::network() const {
  Cnn<float> net(architecture);
  if (weights.size() != net.parameters().size()) throw ShapeMismatch("checkpoint weight count mismatch");
  std::copy(weights.begin(), weights.end(), net.parameters().begin());
  return net;
}

std::uint64_t training_rng_digest(std::uint64_t seed, std::uint64_t step, std::uint32_t epochs_done,
                                  std::uint32_t hard_epochs_done) {
  return mix64(mix64(mix64(seed) ^ step) ^ ((static_cast<std::uint64_t>(epochs_done) << 32) | hard_epochs_done));
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint) {
  write_file_atomic(path, checkpoint.serialize());
}

ModelCheckpoint read_checkpoint(const std::filesystem::path& path) {
  return ModelCheckpoint::deserialize(read_file_bytes(path));
}

}  // namespace warpfake
