#pragma once

// Flat little-endian binary layouts for network checkpoints and replay
// snapshots. Byte-level layout is documented in docs/FORMATS.md.

#include <filesystem>
#include <iosfwd>

#include "cerl/nn.hpp"
#include "cerl/replay.hpp"

namespace cerl {

inline constexpr char kMlpMagic[8] = {'C', 'E', 'R', 'L', 'M', 'L', 'P', '\0'};
inline constexpr char kReplayMagic[8] = {'C', 'E', 'R', 'L', 'R', 'P', 'L', '\0'};
inline constexpr std::uint32_t kFormatVersion = 1;

void write_mlp(std::ostream& out, const nn::Mlp& net);
nn::Mlp read_mlp(std::istream& in);
void save_mlp(const std::filesystem::path& path, const nn::Mlp& net);
nn::Mlp load_mlp(const std::filesystem::path& path);

void write_replay(std::ostream& out, const ReplayBuffer& buffer);
ReplayBuffer read_replay(std::istream& in);
void save_replay(const std::filesystem::path& path, const ReplayBuffer& buffer);
ReplayBuffer load_replay(const std::filesystem::path& path);

}  // namespace cerl
