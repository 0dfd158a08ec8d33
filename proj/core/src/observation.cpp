#include "imc/observation.hpp"

#include <cmath>
#include <sstream>

namespace imc {

ObservationSet::ObservationSet(Index n1, Index n2, double p, std::vector<Triple> triples)
    : n1_(n1), n2_(n2), p_(p), triples_(std::move(triples)) {
  if (n1 < 1 || n2 < 1) throw_invalid("ObservationSet: dimensions must be positive");
  if (!(p > 0.0) || p > 1.0) throw_invalid("ObservationSet: p must be in (0, 1]");
  if (triples_.size() > static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2))
    throw_invalid("ObservationSet: more triples than entries");
  index_.reserve(triples_.size());
  for (const Triple& t : triples_) {
    if (t.row < 0 || t.row >= n1_ || t.col < 0 || t.col >= n2_) {
      std::ostringstream oss;
      oss << "ObservationSet: index (" << t.row << ", " << t.col << ") out of bounds for "
          << n1_ << " x " << n2_;
      throw_invalid(oss.str());
    }
    if (!std::isfinite(t.value)) throw_invalid("ObservationSet: non-finite value");
    if (!index_.emplace(key(t.row, t.col), t.value).second) {
      std::ostringstream oss;
      oss << "ObservationSet: duplicate index (" << t.row << ", " << t.col << ")";
      throw_invalid(oss.str());
    }
  }
}

bool ObservationSet::contains(Index i, Index j) const {
  return index_.count(key(i, j)) > 0;
}

std::optional<double> ObservationSet::value_at(Index i, Index j) const {
  auto it = index_.find(key(i, j));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ObservationSet ObservationSet::with_values(std::vector<double> values) const {
  if (values.size() != triples_.size())
    throw_invalid("ObservationSet::with_values: size mismatch");
  std::vector<Triple> out = triples_;
  for (std::size_t k = 0; k < out.size(); ++k) out[k].value = values[k];
  return ObservationSet(n1_, n2_, p_, std::move(out));
}

ObservationSet ObservationSet::subset(const std::vector<std::size_t>& positions,
                                      double p_factor) const {
  std::vector<Triple> out;
  out.reserve(positions.size());
  for (std::size_t pos : positions) {
    if (pos >= triples_.size()) throw_invalid("ObservationSet::subset: position out of range");
    out.push_back(triples_[pos]);
  }
  return ObservationSet(n1_, n2_, p_ * p_factor, std::move(out));
}

Matrix ObservationSet::to_dense() const {
  Matrix m = Matrix::Zero(n1_, n2_);
  for (const Triple& t : triples_) m(t.row, t.col) = t.value;
  return m;
}

ObservationSet ObservationSet::full(const Matrix& m) {
  require_finite(m, "ObservationSet::full: input");
  std::vector<Triple> triples;
  triples.reserve(static_cast<std::size_t>(m.rows()) * m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) triples.push_back({i, j, m(i, j)});
  return ObservationSet(m.rows(), m.cols(), 1.0, std::move(triples));
}

}  // namespace imc
