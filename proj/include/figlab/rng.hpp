#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace figlab {

// Uniform double in [0,1) from the top 53 bits of one mt19937_64 draw.
inline double uniform_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n) by rejection, independent of library
// distribution internals so streams are reproducible everywhere.
inline std::uint64_t bounded_rand(std::mt19937_64& eng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

// Fisher-Yates with the explicit bounded draw above.
template <typename T>
void shuffle_values(std::vector<T>& v, std::mt19937_64& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_rand(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Standard-normal stream: Marsaglia polar method over mt19937_64.
// Both the engine and the transform are pinned so a seed always yields
// the same value sequence.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform_unit(eng_) - 1.0;
      v = 2.0 * uniform_unit(eng_) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace figlab
