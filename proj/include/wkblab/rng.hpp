#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace wkblab {

// Counter-based generator: draw n of a stream is a pure function of (seed, n),
// so results do not depend on evaluation order or worker count.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t raw(std::uint64_t n) const { return mix(seed_ + (n + 1) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on (0, 1].
  double uniform(std::uint64_t n) const { return (double(raw(n) >> 11) + 1.0) * 0x1.0p-53; }

  // Standard complex Gaussian (E|z|^2 = 1) from draws 2n and 2n + 1.
  std::complex<double> complex_gaussian(std::uint64_t n) const {
    const double r = std::sqrt(-std::log(uniform(2 * n)));
    const double a = 6.283185307179586 * uniform(2 * n + 1);
    return {r * std::cos(a), r * std::sin(a)};
  }

  // Independent stream for a labelled sub-task.
  CounterRng substream(std::uint64_t label) const { return CounterRng(mix(seed_ ^ mix(label + 0x632be59bd9b4e019ULL))); }

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_;
};

}  // namespace wkblab
