#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace wassbound {

// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator and
// supports jump(), which advances the state by 2^128 draws; consecutive jumps
// from one seed give non-overlapping streams.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0x9E3779B97F4A7C15ULL);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  void jump();

  bool operator==(const Xoshiro256pp&) const = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Random source for one chain: engine plus the normal sampler state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  /// Uniform on the open interval (0, 1).
  double uniform();
  void fill_normal(Eigen::Ref<Eigen::VectorXd> out);

  Xoshiro256pp& engine() { return engine_; }

  /// `count` independent streams; stream i is a pure function of (seed, i).
  static std::vector<Rng> streams(std::uint64_t seed, std::size_t count);

 private:
  Xoshiro256pp engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wassbound
