#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace relest::eval {

// Counter-based stream generator: value k of stream (seed, stream) is a pure
// function of (seed, stream, k), so parallel draws are reproducible and
// order-independent.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t stream) {
    state_ = mix(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  double next_uniform() {  // in (0, 1)
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform(), u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }
  uint64_t state_ = 0;
  bool have_spare_ = false;
  double spare_ = 0;
};

// Uniform draw on {x in R^dim : ||x|| <= radius}: Gaussian direction, radius
// scaled by U^{1/dim}.
Eigen::VectorXd sample_ball(int dim, double radius, CounterRng& rng);

}  // namespace relest::eval
