#pragma once

#include <cstdint>
#include <random>

namespace sparse_risk {

/// What a stream is used for. Part of the stream key, so the design and the
/// errors of one replication never share draws.
enum class StreamPurpose : std::uint32_t {
  Design = 1,
  Errors = 2,
  Bootstrap = 3,
  Hodges = 4,
  FixedDesign = 5,
  Oracle = 6,
};

struct StreamId {
  std::uint64_t replication = 0;
  StreamPurpose purpose = StreamPurpose::Design;
  std::uint64_t salt = 0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a key. Used to give each
/// sample size of a sweep its own master seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) noexcept {
  return mix64(mix64(seed) ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// Random stream addressed by (master seed, replication, purpose, salt).
///
/// The key is hashed into the seed of a private Mersenne Twister, so a stream
/// depends only on its address. Replications can be evaluated in any order and
/// on any number of threads without changing a single draw.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, StreamId id) {
    const std::uint64_t a = mix64(master_seed);
    const std::uint64_t b = mix64(a ^ mix64(id.replication));
    const std::uint64_t c = mix64(b ^ mix64(static_cast<std::uint64_t>(id.purpose) << 32));
    const std::uint64_t d = mix64(c ^ mix64(id.salt + 0x5851f42d4c957f2dULL));
    std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
    engine_.seed(seq);
  }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// Uniform integer in [0, bound).
  std::size_t index(std::size_t bound) {
    return std::uniform_int_distribution<std::size_t>(0, bound - 1)(engine_);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace sparse_risk
