#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace asckit {

// Deterministic random stream. All draws are implemented on top of the raw
// mt19937_64 output so that sequences are identical across standard libraries
// (std::*_distribution is not portable).
//
// Streams fork into independent child streams keyed by integer tags; forks
// depend only on (seed, tag), not on how much the parent has drawn. That is
// how per-class / per-epoch / per-batch streams stay replayable.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0);

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  // Uniform integer in [0, n); n must be positive.
  int uniform_int(int n);

  // Standard normal via Box-Muller (no cached spare, keeps draws countable).
  double normal();

  // Gamma(shape, 1) by Marsaglia-Tsang, valid for any shape > 0.
  double gamma(double shape);

  // Beta(a, b) as Ga/(Ga+Gb).
  double beta(double a, double b);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
    }
  }

  // Independent child stream; same (seed, tag) -> same child sequence.
  Rng fork(uint64_t tag) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace asckit
