#pragma once

#include <cstdint>
#include <random>

#include "imc/matrix.hpp"

namespace imc {

/// Deterministic random stream. A (seed, stream) pair always produces the
/// same sequence, on every platform: the engine is the fully specified
/// std::mt19937_64 and all variate transforms are implemented here rather
/// than with std::*_distribution, whose algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Independent child stream; use distinct ids per trial / per role.
  Rng stream(std::uint64_t id) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  bool bernoulli(double p);

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Matrix gaussian_matrix(Index rows, Index cols);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

/// Mixes a list of indices into a single stream id (order-sensitive).
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> parts);

}  // namespace imc
