#include "cerl/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "cerl/error.hpp"

namespace cerl {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw Error("truncated binary file");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

void expect_magic(std::istream& in, const char (&magic)[8], const char* what) {
  char got[8];
  if (!in.read(got, 8) || std::memcmp(got, magic, 8) != 0) {
    throw Error(std::string("not a ") + what + " file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw Error(std::string("unsupported ") + what + " version " + std::to_string(version));
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace

void write_mlp(std::ostream& out, const nn::Mlp& net) {
  out.write(kMlpMagic, 8);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put_le<std::uint8_t>(out, l.norm ? 1 : 0);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    put_le<std::uint16_t>(out, 0);
  }
  for (const auto& block : net.blocks()) {
    for (double v : block) put_f64(out, v);
  }
  if (!out) throw Error("failed writing network checkpoint");
}

nn::Mlp read_mlp(std::istream& in) {
  expect_magic(in, kMlpMagic, "network checkpoint");
  const auto layers = get_le<std::uint32_t>(in);
  nn::Mlp net;
  for (std::uint32_t i = 0; i < layers; ++i) {
    nn::Layer l;
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    l.norm = get_le<std::uint8_t>(in) != 0;
    const auto act = get_le<std::uint8_t>(in);
    if (act > 2) throw Error("unknown activation code " + std::to_string(act));
    l.activation = static_cast<nn::Activation>(act);
    get_le<std::uint16_t>(in);
    l.weight = WeightMatrix(rows, cols);
    l.bias.resize(cols);
    if (l.norm) {
      l.gain.resize(cols);
      l.offset.resize(cols);
    }
    if (i > 0 && net.layers.back().out_dim() != rows) throw ShapeError("layer dims do not chain");
    net.layers.push_back(std::move(l));
  }
  for (auto& block : net.blocks()) {
    for (double& v : block) v = get_f64(in);
  }
  return net;
}

void save_mlp(const std::filesystem::path& path, const nn::Mlp& net) {
  auto out = open_out(path);
  write_mlp(out, net);
}

nn::Mlp load_mlp(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_mlp(in);
}

void write_replay(std::ostream& out, const ReplayBuffer& buffer) {
  out.write(kReplayMagic, 8);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, 0);
  put_le<std::uint64_t>(out, buffer.capacity());
  put_le<std::uint64_t>(out, buffer.size());
  put_le<std::uint64_t>(out, buffer.state_dim());
  put_le<std::uint64_t>(out, buffer.action_dim());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const auto t = buffer.at(i);
    for (double v : t.state) put_f64(out, v);
    for (double v : t.action) put_f64(out, v);
    put_f64(out, t.reward);
    for (double v : t.next_state) put_f64(out, v);
    put_le<std::uint8_t>(out, t.done ? 1 : 0);
  }
  if (!out) throw Error("failed writing replay snapshot");
}

ReplayBuffer read_replay(std::istream& in) {
  expect_magic(in, kReplayMagic, "replay snapshot");
  get_le<std::uint32_t>(in);
  const auto capacity = get_le<std::uint64_t>(in);
  const auto size = get_le<std::uint64_t>(in);
  const auto sdim = get_le<std::uint64_t>(in);
  const auto adim = get_le<std::uint64_t>(in);
  if (size > capacity) throw Error("replay snapshot size exceeds capacity");
  ReplayBuffer buffer(capacity, sdim, adim);
  for (std::uint64_t i = 0; i < size; ++i) {
    Transition t;
    t.state.resize(sdim);
    t.action.resize(adim);
    t.next_state.resize(sdim);
    for (double& v : t.state) v = get_f64(in);
    for (double& v : t.action) v = get_f64(in);
    t.reward = get_f64(in);
    for (double& v : t.next_state) v = get_f64(in);
    t.done = get_le<std::uint8_t>(in) != 0;
    buffer.push(t);
  }
  return buffer;
}

void save_replay(const std::filesystem::path& path, const ReplayBuffer& buffer) {
  auto out = open_out(path);
  write_replay(out, buffer);
}

ReplayBuffer load_replay(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_replay(in);
}

}  // namespace cerl
