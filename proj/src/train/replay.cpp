#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "dcmt/errors.hpp"
#include "dcmt/maddpg.hpp"
#include "dcmt/nn/checkpoint.hpp"

namespace dcmt {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'M', 'T', 'R', 'P', 'L', 'Y'};
constexpr std::uint32_t kVersion = 1;

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int k = 0; k < n; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_vec(std::vector<std::uint8_t>& out, const std::vector<double>& v) {
  put(out, v.size(), 4);
  for (double x : v) put(out, std::bit_cast<std::uint64_t>(x), 8);
}

struct Cursor {
  const std::vector<std::uint8_t>& in;
  std::size_t end;
  std::size_t pos = 0;

  std::uint64_t get(int n) {
    if (pos + static_cast<std::size_t>(n) > end) throw FileError("replay buffer: truncated data");
    std::uint64_t v = 0;
    for (int k = 0; k < n; ++k) v |= static_cast<std::uint64_t>(in[pos + k]) << (8 * k);
    pos += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<double> vec() {
    const auto n = get(4);
    if (n > (end - pos) / 8) throw FileError("replay buffer: truncated data");
    std::vector<double> v(n);
    for (auto& x : v) x = std::bit_cast<double>(get(8));
    return v;
  }
};

}  // namespace

void ReplayBuffer::push(Transition t) {
  if (capacity_ == 0) return;
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t k) const {
  if (k >= data_.size()) throw ContractError(fmt::format("replay index {} out of {}", k, data_.size()));
  return data_[(head_ + k) % data_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (data_.empty()) throw ContractError("sampling from an empty replay buffer");
  std::vector<std::size_t> idx(n);
  for (auto& k : idx) k = uniform_index(rng, data_.size());
  return idx;
}

void ReplayBuffer::save(const std::filesystem::path& file) const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put(out, kVersion, 4);
  put(out, capacity_, 8);
  put(out, head_, 8);
  put(out, data_.size(), 8);
  for (const Transition& t : data_) {
    put_vec(out, t.state);
    put_vec(out, t.action);
    put(out, std::bit_cast<std::uint64_t>(t.reward), 8);
    put_vec(out, t.next_state);
    out.push_back(t.done ? 1 : 0);
  }
  put(out, nn::fnv1a(out.data(), out.size()), 8);
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw FileError(fmt::format("cannot write replay buffer '{}'", file.string()));
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!os) throw FileError(fmt::format("short write to '{}'", file.string()));
}

ReplayBuffer ReplayBuffer::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw FileError(fmt::format("cannot open replay buffer '{}'", file.string()));
  const std::vector<std::uint8_t> in((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (in.size() < sizeof kMagic + 8 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0)
    throw FileError("replay buffer: bad magic");
  const std::size_t body = in.size() - 8;
  Cursor trailer{in, in.size(), body};
  if (trailer.get(8) != nn::fnv1a(in.data(), body)) throw FileError("replay buffer: checksum mismatch");
  Cursor c{in, body, sizeof kMagic};
  if (c.get(4) != kVersion) throw FileError("replay buffer: unsupported version");
  ReplayBuffer buf(c.get(8));
  buf.head_ = c.get(8);
  const auto n = c.get(8);
  if (n > buf.capacity_ || (n > 0 && buf.head_ >= n) || (n == 0 && buf.head_ != 0))
    throw FileError("replay buffer: inconsistent header");
  buf.data_.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    Transition t;
    t.state = c.vec();
    t.action = c.vec();
    t.reward = std::bit_cast<double>(c.get(8));
    t.next_state = c.vec();
    t.done = c.get(1) != 0;
    buf.data_.push_back(std::move(t));
  }
  if (c.pos != body) throw FileError("replay buffer: trailing bytes");
  return buf;
}

}  // namespace dcmt
