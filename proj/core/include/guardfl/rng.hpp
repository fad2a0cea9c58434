#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace guardfl {

// Deterministic random stream keyed by (root seed, purpose tag, round, unit).
// Every consumer derives its own stream, so results do not depend on the
// order in which independent units (clients, labels, restarts) are processed.
// All draws are built from raw mt19937_64 output; std::*_distribution is
// avoided because its output is not pinned by the standard.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::string_view purpose,
            std::uint64_t round = 0, std::uint64_t unit = 0);

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; mean/stddev variant scales it.
  double normal();
  double normal(double mean, double stddev);

  // Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape);

  // k distinct values from [0, population), ascending order.
  std::vector<int> sample_without_replacement(int population, int k);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace guardfl
