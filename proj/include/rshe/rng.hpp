#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace rshe::rng {

// Stream derivation is part of the reproducibility contract: stream id =
// mix(seed, replica, tag). Replicas and purposes get statistically
// independent streams that do not depend on scheduling order or worker
// count. Changing this mixing breaks every frozen seed in the test suite.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t replica,
                                      std::string_view tag) {
  std::uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ splitmix64(replica ^ 0xbb67ae8584caa73bULL));
  return splitmix64(h ^ fnv1a64(tag));
}

// N(0,1) stream: mt19937_64 + Box-Muller with a cached partner draw.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t stream_id) : engine_(stream_id) {}

  double next();
  void fill(std::span<double> out, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rshe::rng
