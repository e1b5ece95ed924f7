#include "doctest.h"

#include <filesystem>
#include <sstream>
#include <string>

#include "cerl/error.hpp"
#include "cerl/serialize.hpp"
#include "oracles.hpp"

using namespace cerl;

namespace {

std::string bytes_of(const nn::Mlp& net) {
  std::ostringstream out(std::ios::binary);
  write_mlp(out, net);
  return out.str();
}

nn::Mlp from_bytes(const std::string& s) {
  std::istringstream in(s, std::ios::binary);
  return read_mlp(in);
}

ReplayBuffer filled(std::size_t capacity, int pushes) {
  ReplayBuffer buf(capacity, 3, 2);
  for (int i = 0; i < pushes; ++i) {
    const double v = i;
    buf.push({{v, -v, 0.5 * v}, {v / 7, -v / 9}, 1.0 / (v + 1), {v + 1, v, -v}, i % 5 == 0});
  }
  return buf;
}

}  // namespace

TEST_CASE("network round trip is bit exact") {
  Rng rng(1);
  const nn::Mlp net = oracle::random_net(4, {6, 5}, 3, nn::Activation::tanh, rng);
  const nn::Mlp back = from_bytes(bytes_of(net));
  CHECK(back == net);
  CHECK(bytes_of(back) == bytes_of(net));
  // un-normalized identity-output critic too
  const nn::Mlp critic = oracle::random_net(5, {3}, 1, nn::Activation::identity, rng, false);
  CHECK(from_bytes(bytes_of(critic)) == critic);
}

TEST_CASE("network header layout") {
  Rng rng(2);
  const nn::Mlp net = nn::make_mlp({2, {3}, 1, nn::Activation::elu, nn::Activation::tanh, true}, rng);
  const std::string s = bytes_of(net);
  CHECK(s.substr(0, 8) == std::string(kMlpMagic, 8));
  CHECK(static_cast<unsigned char>(s[8]) == kFormatVersion);
  CHECK(static_cast<unsigned char>(s[12]) == 2);  // layer count
  // header 16 + 2 layer descriptors of 12 bytes + parameters
  CHECK(s.size() == 16 + 2 * 12 + 8 * net.parameter_count());
}

TEST_CASE("network read errors") {
  Rng rng(3);
  const std::string good = bytes_of(oracle::random_net(3, {4}, 2, nn::Activation::tanh, rng));
  std::string bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(from_bytes(bad), Error);
  std::string version = good;
  version[8] = 9;
  CHECK_THROWS_AS(from_bytes(version), Error);
  for (std::size_t cut : {std::size_t{5}, std::size_t{14}, std::size_t{30}, good.size() - 1}) {
    CHECK_THROWS_AS(from_bytes(good.substr(0, cut)), Error);
  }
  std::string act = good;
  act[16 + 9] = 7;  // first layer activation code
  CHECK_THROWS_AS(from_bytes(act), Error);
  CHECK_THROWS_AS(load_mlp("/nonexistent/dir/x.mlp"), Error);
}

TEST_CASE("replay round trip keeps insertion order") {
  for (int pushes : {0, 3, 7, 19}) {
    const ReplayBuffer buf = filled(7, pushes);
    std::ostringstream out(std::ios::binary);
    write_replay(out, buf);
    std::istringstream in(out.str(), std::ios::binary);
    const ReplayBuffer back = read_replay(in);
    CHECK(back.capacity() == buf.capacity());
    CHECK(back.size() == buf.size());
    CHECK(back.state_dim() == 3);
    CHECK(back.action_dim() == 2);
    for (std::size_t i = 0; i < buf.size(); ++i) CHECK(back.at(i) == buf.at(i));
  }
}

TEST_CASE("replay read errors") {
  const ReplayBuffer buf = filled(4, 3);
  std::ostringstream out(std::ios::binary);
  write_replay(out, buf);
  const std::string good = out.str();
  std::string wrong = good;
  wrong.replace(0, 8, std::string(kMlpMagic, 8));
  std::istringstream w(wrong, std::ios::binary);
  CHECK_THROWS_AS(read_replay(w), Error);
  std::istringstream t(good.substr(0, good.size() - 3), std::ios::binary);
  CHECK_THROWS_AS(read_replay(t), Error);
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "cerl_test_serialize";
  std::filesystem::create_directories(dir);
  Rng rng(4);
  const nn::Mlp net = oracle::random_net(3, {4}, 2, nn::Activation::tanh, rng);
  save_mlp(dir / "a.mlp", net);
  CHECK(load_mlp(dir / "a.mlp") == net);
  const ReplayBuffer buf = filled(5, 9);
  save_replay(dir / "r.bin", buf);
  const ReplayBuffer back = load_replay(dir / "r.bin");
  for (std::size_t i = 0; i < buf.size(); ++i) CHECK(back.at(i) == buf.at(i));
  std::filesystem::remove_all(dir);
}
