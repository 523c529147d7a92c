#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tptkit {

/// splitmix64 finaliser: z += 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
/// z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31.
std::uint64_t splitmix64(std::uint64_t z);

/// Per-stream seed: splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019)).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id);

/// Reproducible random stream. Uniforms are the top 53 bits of std::mt19937_64;
/// normals come from the Box-Muller transform, both outputs of a pair used in
/// order (cos branch first). The sequence is identical on every platform.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(stream_seed(seed, stream_id)) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tptkit
