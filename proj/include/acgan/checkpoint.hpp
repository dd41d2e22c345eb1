#pragma once

// Binary checkpoint layout (all integers u64 and reals f64, little-endian,
// unless noted):
//
//   "ACG1" | u32 version | u8 mode | N h f m
//   config echo: lambda1 lambda2 lr beta1 beta2 epsilon | epochs seed
//                critic_steps batch_size epochs_completed
//   architecture: encoder_hidden code | count sim_hidden... | count disc_hidden...
//                 | slope dropout
//   u8 network count, then per network:
//     u8 role | layer count | per layer: inputs outputs u8 activation slope dropout
//     | per layer: weights (row-major, inputs x outputs) bias
//     | adam: step lr beta1 beta2 epsilon u8 has_moments [moments, same order]
//   trailer: FNV-1a 64 of every preceding byte

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "acgan/errors.hpp"
#include "acgan/gan.hpp"

namespace acgan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a(const unsigned char* data, std::size_t n,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<unsigned char>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<unsigned char>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* s, std::size_t n) { bytes_.insert(bytes_.end(), s, s + n); }

  // Row-major element order regardless of storage order.
  void matrix(const Tensor& t) {
    for (Index r = 0; r < t.rows(); ++r) {
      for (Index c = 0; c < t.cols(); ++c) f64(t(r, c));
    }
  }

  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() { return need(1), data_[pos_++]; }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Index index() {
    const std::uint64_t v = u64();
    if (v > (1ULL << 32)) throw CorruptionError("checkpoint: implausible dimension " + std::to_string(v));
    return static_cast<Index>(v);
  }
  Tensor matrix(Index rows, Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 8);
    Tensor t(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) t(r, c) = f64();
    }
    return t;
  }
  bool at_end() const { return pos_ == size_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw CorruptionError("checkpoint is truncated");
  }
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

inline void write_network(ByteWriter& w, std::uint8_t role, const ParamSet& p) {
  w.u8(role);
  w.u64(p.spec.layers.size());
  for (const LayerSpec& l : p.spec.layers) {
    w.u64(static_cast<std::uint64_t>(l.inputs));
    w.u64(static_cast<std::uint64_t>(l.outputs));
    w.u8(static_cast<std::uint8_t>(l.activation));
    w.f64(l.slope);
    w.f64(l.dropout);
  }
  for (const Layer& l : p.layers) {
    w.matrix(l.weights);
    w.matrix(l.bias);
  }
  w.u64(p.adam.step);
  w.f64(p.adam.config.learning_rate);
  w.f64(p.adam.config.beta1);
  w.f64(p.adam.config.beta2);
  w.f64(p.adam.config.epsilon);
  const bool has_moments = !p.adam.first_moment.empty();
  w.u8(has_moments ? 1 : 0);
  if (has_moments) {
    for (const Tensor& m : p.adam.first_moment) w.matrix(m);
    for (const Tensor& v : p.adam.second_moment) w.matrix(v);
  }
}

inline ParamSet read_network(ByteReader& r, std::uint8_t expected_role) {
  const std::uint8_t role = r.u8();
  if (role != expected_role) throw CorruptionError("checkpoint: unexpected network role " + std::to_string(role));
  ParamSet p;
  const std::uint64_t count = r.u64();
  if (count == 0 || count > 64) throw CorruptionError("checkpoint: implausible layer count");
  for (std::uint64_t k = 0; k < count; ++k) {
    LayerSpec l;
    l.inputs = r.index();
    l.outputs = r.index();
    const std::uint8_t act = r.u8();
    if (act > 2) throw CorruptionError("checkpoint: unknown activation code");
    l.activation = static_cast<Activation>(act);
    l.slope = r.f64();
    l.dropout = r.f64();
    p.spec.layers.push_back(l);
  }
  try {
    p.spec.validate();
  } catch (const Error& e) {
    throw DimensionError(std::string("checkpoint: ") + e.what());
  }
  for (const LayerSpec& l : p.spec.layers) {
    Layer layer;
    layer.weights = r.matrix(l.inputs, l.outputs);
    layer.bias = r.matrix(1, l.outputs);
    p.layers.push_back(std::move(layer));
  }
  p.adam.step = r.u64();
  p.adam.config.learning_rate = r.f64();
  p.adam.config.beta1 = r.f64();
  p.adam.config.beta2 = r.f64();
  p.adam.config.epsilon = r.f64();
  if (r.u8() != 0) {
    for (const Tensor* t : p.tensors()) p.adam.first_moment.push_back(r.matrix(t->rows(), t->cols()));
    for (const Tensor* t : p.tensors()) p.adam.second_moment.push_back(r.matrix(t->rows(), t->cols()));
  }
  return p;
}

}  // namespace detail

inline std::vector<unsigned char> serialize_checkpoint(const GanBundle& b) {
  b.validate();
  detail::ByteWriter w;
  w.raw("ACG1", 4);
  w.u32(kCheckpointVersion);
  w.u8(static_cast<std::uint8_t>(b.mode));
  w.u64(static_cast<std::uint64_t>(b.dims.assets));
  w.u64(static_cast<std::uint64_t>(b.dims.history));
  w.u64(static_cast<std::uint64_t>(b.dims.future));
  w.u64(static_cast<std::uint64_t>(b.dims.latent));

  const TrainConfig& c = b.config;
  w.f64(c.lambda1);
  w.f64(c.lambda2);
  w.f64(c.adam.learning_rate);
  w.f64(c.adam.beta1);
  w.f64(c.adam.beta2);
  w.f64(c.adam.epsilon);
  w.u64(c.epochs);
  w.u64(c.seed);
  w.u64(c.critic_steps);
  w.u64(c.batch_size);
  w.u64(b.epochs_completed);

  w.u64(static_cast<std::uint64_t>(b.arch.encoder_hidden));
  w.u64(static_cast<std::uint64_t>(b.arch.code));
  w.u64(b.arch.simulator_hidden.size());
  for (Index v : b.arch.simulator_hidden) w.u64(static_cast<std::uint64_t>(v));
  w.u64(b.arch.discriminator_hidden.size());
  for (Index v : b.arch.discriminator_hidden) w.u64(static_cast<std::uint64_t>(v));
  w.f64(b.arch.slope);
  w.f64(b.arch.dropout);

  w.u8(b.decoder ? 4 : 3);
  detail::write_network(w, 0, b.encoder);
  if (b.decoder) detail::write_network(w, 1, *b.decoder);
  detail::write_network(w, 2, b.simulator);
  detail::write_network(w, 3, b.discriminator);

  auto& bytes = w.bytes();
  w.u64(fnv1a(bytes.data(), bytes.size()));
  return std::move(bytes);
}

inline GanBundle deserialize_checkpoint(const std::vector<unsigned char>& bytes,
                                        std::optional<GanMode> expected_mode = std::nullopt) {
  if (bytes.size() < 4 + 4 + 8) throw CorruptionError("checkpoint is truncated");
  if (std::memcmp(bytes.data(), "ACG1", 4) != 0) throw CorruptionError("not a checkpoint (bad magic)");
  detail::ByteReader r(bytes.data() + 4, bytes.size() - 4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint format version " + std::to_string(version) + ", reader supports " +
                       std::to_string(kCheckpointVersion));
  }
  std::uint64_t stored = 0;
  for (int k = 0; k < 8; ++k) stored |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + static_cast<std::size_t>(k)]) << (8 * k);
  if (fnv1a(bytes.data(), bytes.size() - 8) != stored) {
    throw CorruptionError("checkpoint checksum mismatch (truncated or corrupted file)");
  }

  GanBundle b;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw CorruptionError("checkpoint: unknown mode byte");
  b.mode = static_cast<GanMode>(mode);
  if (expected_mode && *expected_mode != b.mode) {
    throw ModeError(std::string("checkpoint holds a ") + to_string(b.mode) + " model, expected " +
                    to_string(*expected_mode));
  }
  b.dims.assets = r.index();
  b.dims.history = r.index();
  b.dims.future = r.index();
  b.dims.latent = r.index();

  TrainConfig& c = b.config;
  c.lambda1 = r.f64();
  c.lambda2 = r.f64();
  c.adam.learning_rate = r.f64();
  c.adam.beta1 = r.f64();
  c.adam.beta2 = r.f64();
  c.adam.epsilon = r.f64();
  c.epochs = r.u64();
  c.seed = r.u64();
  c.critic_steps = r.u64();
  c.batch_size = r.u64();
  c.latent = b.dims.latent;
  b.epochs_completed = r.u64();

  b.arch.encoder_hidden = r.index();
  b.arch.code = r.index();
  b.arch.simulator_hidden.resize(static_cast<std::size_t>(r.index()));
  for (Index& v : b.arch.simulator_hidden) v = r.index();
  b.arch.discriminator_hidden.resize(static_cast<std::size_t>(r.index()));
  for (Index& v : b.arch.discriminator_hidden) v = r.index();
  b.arch.slope = r.f64();
  b.arch.dropout = r.f64();

  const std::uint8_t networks = r.u8();
  if (networks != (b.mode == GanMode::Acgan ? 4 : 3)) {
    throw CorruptionError("checkpoint: network count does not match mode");
  }
  b.encoder = detail::read_network(r, 0);
  if (b.mode == GanMode::Acgan) b.decoder = detail::read_network(r, 1);
  b.simulator = detail::read_network(r, 2);
  b.discriminator = detail::read_network(r, 3);
  r.u64();  // checksum, verified above
  if (!r.at_end()) throw CorruptionError("checkpoint has trailing bytes");
  try {
    b.validate();
  } catch (const ModeError&) {
    throw;
  } catch (const Error& e) {
    throw DimensionError(std::string("checkpoint networks disagree with header: ") + e.what());
  }
  return b;
}

inline void save_checkpoint(const std::filesystem::path& path, const GanBundle& b) {
  const std::vector<unsigned char> bytes = serialize_checkpoint(b);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline GanBundle load_checkpoint(const std::filesystem::path& path,
                                 std::optional<GanMode> expected_mode = std::nullopt) {
  return deserialize_checkpoint(read_file_bytes(path), expected_mode);
}

inline std::uint64_t file_digest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return fnv1a(bytes.data(), bytes.size());
}

}  // namespace acgan
