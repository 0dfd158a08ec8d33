#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "imc/matrix.hpp"

namespace imc {

struct Triple {
  Index row;
  Index col;
  double value;
};

/// The observed entries P_Omega(M) of an n1 × n2 matrix, sampled with
/// probability p. Triplet storage plus a hash index: the access pattern is
/// residual evaluation at scattered (i, j), so O(1) membership is what
/// matters, not CSR-style row sweeps.
class ObservationSet {
 public:
  ObservationSet(Index n1, Index n2, double p, std::vector<Triple> triples);

  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  double p() const { return p_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const std::vector<Triple>& triples() const { return triples_; }

  bool contains(Index i, Index j) const;
  std::optional<double> value_at(Index i, Index j) const;

  /// Same index set, values replaced entrywise (e.g. noise added).
  ObservationSet with_values(std::vector<double> values) const;

  /// Subset by triple positions; p_factor rescales the sampling probability
  /// (a uniformly chosen fraction q of Omega has effective rate q * p).
  ObservationSet subset(const std::vector<std::size_t>& positions, double p_factor) const;

  /// Dense n1 × n2 matrix with observed values, zeros elsewhere.
  Matrix to_dense() const;

  /// All entries of a dense matrix as an observation set with p = 1.
  static ObservationSet full(const Matrix& m);

 private:
  Index n1_;
  Index n2_;
  double p_;
  std::vector<Triple> triples_;
  std::unordered_map<std::uint64_t, double> index_;

  std::uint64_t key(Index i, Index j) const { return static_cast<std::uint64_t>(i) * n2_ + j; }
};

}  // namespace imc
