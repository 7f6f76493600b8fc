#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ufnd {

// Serializable position of a named random stream.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t stream_key = 0;
  std::uint64_t position = 0;  // number of 64-bit draws consumed

  bool operator==(const RngState&) const = default;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Named, seedable stream. The engine is std::mt19937_64, whose output sequence
// is fixed by the C++ standard; stream keys are derived with splitmix64 over
// (seed, FNV-1a(name), index). Uniform variates are built from raw 64-bit
// draws so results do not depend on the standard library's distributions.
class Rng {
 public:
  static constexpr std::string_view algorithm = "mt19937_64+splitmix64-streams/v1";

  Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);
  static Rng restore(const RngState& state);

  std::uint64_t next_u64();
  // [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  RngState state() const { return {seed_, key_, position_}; }
  std::uint64_t position() const { return position_; }

 private:
  Rng(std::uint64_t seed, std::uint64_t key);

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

}  // namespace ufnd
