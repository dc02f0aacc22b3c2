#include "dcmt/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt::nn {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'M', 'T', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
  void vector(const Eigen::VectorXd& v) {
    for (Eigen::Index r = 0; r < v.size(); ++r) f64(v(r));
  }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int k = 0; k < n; ++k) out_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t end) : in_(in), end_(end) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void matrix(Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  }
  void vector(Eigen::VectorXd& v) {
    for (Eigen::Index r = 0; r < v.size(); ++r) v(r) = f64();
  }
  [[nodiscard]] std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FileError("checkpoint: truncated data");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(in_[pos_ + k]) << (8 * k);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

void write_layers(Writer& w, const std::vector<Layer>& layers) {
  for (const Layer& l : layers) {
    w.matrix(l.weight);
    w.vector(l.bias);
  }
}

void read_layers(Reader& r, std::vector<Layer>& layers) {
  for (Layer& l : layers) {
    r.matrix(l.weight);
    r.vector(l.bias);
  }
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  const auto* b = static_cast<const std::uint8_t*>(data);
  for (std::size_t k = 0; k < size; ++k) {
    h ^= b[k];
    h *= 0x100000001b3ULL;
  }
  return h;
}

const NetworkSection& Checkpoint::section(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return s;
  throw FileError(fmt::format("checkpoint: no section named '{}'", name));
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u64(ckpt.config_hash);
  w.u32(static_cast<std::uint32_t>(ckpt.sections.size()));
  for (const NetworkSection& s : ckpt.sections) {
    w.u32(static_cast<std::uint32_t>(s.name.size()));
    w.bytes(s.name.data(), s.name.size());
    w.u8(static_cast<std::uint8_t>(s.network.output_activation()));
    w.u32(static_cast<std::uint32_t>(s.network.sizes().size()));
    for (std::size_t n : s.network.sizes()) w.u64(n);
    write_layers(w, s.network.layers());
    w.u8(s.adam ? 1 : 0);
    if (s.adam) {
      w.i64(s.adam->step);
      w.f64(s.adam->config.learning_rate);
      w.f64(s.adam->config.beta1);
      w.f64(s.adam->config.beta2);
      w.f64(s.adam->config.epsilon);
      write_layers(w, s.adam->first);
      write_layers(w, s.adam->second);
    }
  }
  const std::uint64_t sum = fnv1a(w.data().data(), w.data().size());
  w.u64(sum);
  return std::move(w.data());
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw FileError("checkpoint: bad magic");
  const std::size_t body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int k = 0; k < 8; ++k) stored |= static_cast<std::uint64_t>(bytes[body + k]) << (8 * k);
  if (stored != fnv1a(bytes.data(), body)) throw FileError("checkpoint: checksum mismatch");

  Reader r(bytes, body);
  r.str(sizeof kMagic);
  if (const auto v = r.u32(); v != kCheckpointVersion)
    throw FileError(fmt::format("checkpoint: unsupported version {}", v));
  Checkpoint ckpt;
  ckpt.config_hash = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t s = 0; s < n; ++s) {
    NetworkSection sec;
    sec.name = r.str(r.u32());
    const auto act = r.u8();
    if (act > 2) throw FileError("checkpoint: unknown activation code");
    const std::uint32_t count = r.u32();
    if (count < 2 || count > 64) throw FileError("checkpoint: implausible layer count");
    std::vector<std::size_t> sizes;
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto sz = r.u64();
      if (sz == 0 || sz > (1u << 24)) throw FileError("checkpoint: implausible layer size");
      sizes.push_back(static_cast<std::size_t>(sz));
    }
    sec.network = Mlp(sizes, static_cast<Activation>(act));
    read_layers(r, sec.network.layers());
    if (r.u8()) {
      AdamState st(sec.network, AdamConfig{});
      st.step = r.i64();
      st.config.learning_rate = r.f64();
      st.config.beta1 = r.f64();
      st.config.beta2 = r.f64();
      st.config.epsilon = r.f64();
      read_layers(r, st.first);
      read_layers(r, st.second);
      sec.adam = std::move(st);
    }
    ckpt.sections.push_back(std::move(sec));
  }
  if (r.position() != body) throw FileError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw FileError(fmt::format("cannot write checkpoint '{}'", file.string()));
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FileError(fmt::format("short write to '{}'", file.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw FileError(fmt::format("cannot open checkpoint '{}'", file.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace dcmt::nn
