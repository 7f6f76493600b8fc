#include "ufnd/rng.hpp"

namespace ufnd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::uint64_t stream_key(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a64(name)) + index);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key), engine_(key) {}

Rng::Rng(std::uint64_t seed, std::string_view stream, std::uint64_t index)
    : Rng(seed, stream_key(seed, stream, index)) {}

Rng Rng::restore(const RngState& state) {
  Rng rng(state.seed, state.stream_key);
  rng.engine_.discard(state.position);
  rng.position_ = state.position;
  return rng;
}

std::uint64_t Rng::next_u64() {
  ++position_;
  return engine_();
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Largest multiple of n that fits; draws above it are rejected.
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

}  // namespace ufnd
