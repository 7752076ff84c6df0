#pragma once

#include <cstdint>
#include <random>

namespace usual {

// A seeded random stream. Streams with distinct (seed, stream) pairs are
// independent; per-individual streams make latent updates reproducible
// regardless of how individuals are divided among threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }
  // Uniform on [0, 1).
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double chi_squared(double dof) { return std::chi_squared_distribution<double>(dof)(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Independent stream families derived from one master seed.
enum class StreamFamily : std::uint64_t {
  chain = 1,
  latent = 2,
  population = 3,
  synthetic = 4,
  replicate = 5,
};

inline std::uint64_t stream_id(StreamFamily family, std::uint64_t index) {
  return (static_cast<std::uint64_t>(family) << 48) ^ index;
}

}  // namespace usual

namespace usual {

// Seed for an independent sub-run (e.g. a BRR replicate) derived from a
// master seed.
inline std::uint64_t derive_seed(std::uint64_t master, StreamFamily family, std::uint64_t index) {
  RngStream s(master, stream_id(family, index));
  return s.engine()();
}

}  // namespace usual
