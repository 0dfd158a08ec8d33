#include "imc/movielens.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "imc/linalg.hpp"

namespace imc {
namespace movielens {
namespace {

[[noreturn]] void fail(const std::string& file, long line, const std::string& what) {
  std::ostringstream oss;
  oss << file << ":" << line << ": " << what;
  throw std::runtime_error(oss.str());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

long to_long(const std::string& s, const std::string& file, long line) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) fail(file, line, "trailing characters in '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(file, line, "cannot parse integer '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(file, line, "integer out of range '" + s + "'");
  }
}

std::ifstream open_or_fail(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing or unreadable file: " + path);
  return is;
}

}  // namespace

RatingsTable load_movielens(const std::string& dir) {
  const std::string data_path = dir + "/u.data";
  const std::string user_path = dir + "/u.user";
  const std::string item_path = dir + "/u.item";

  // u.user: id|age|gender|occupation|zip
  std::map<long, UserInfo> users_by_raw;
  {
    auto is = open_or_fail(user_path);
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split(line, '|');
      if (fields.size() != 5) fail(user_path, line_no, "expected 5 pipe-separated fields");
      UserInfo info;
      const long raw_id = to_long(fields[0], user_path, line_no);
      info.age = static_cast<int>(to_long(fields[1], user_path, line_no));
      if (info.age < 0) fail(user_path, line_no, "negative age");
      if (fields[2] != "M" && fields[2] != "F")
        fail(user_path, line_no, "gender must be M or F, got '" + fields[2] + "'");
      info.gender = fields[2][0];
      info.occupation = fields[3];
      if (!users_by_raw.emplace(raw_id, std::move(info)).second)
        fail(user_path, line_no, "duplicate user id " + fields[0]);
    }
    if (users_by_raw.empty()) fail(user_path, 0, "no users parsed");
  }

  // u.item: id|title|...|19 trailing genre flags
  std::map<long, std::array<int, kGenreCount>> items_by_raw;
  {
    auto is = open_or_fail(item_path);
    std::string line;
    long line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split(line, '|');
      if (fields.size() < static_cast<std::size_t>(kGenreCount) + 2)
        fail(item_path, line_no, "expected at least 21 pipe-separated fields");
      const long raw_id = to_long(fields[0], item_path, line_no);
      std::array<int, kGenreCount> genres{};
      for (int g = 0; g < kGenreCount; ++g) {
        const std::string& flag = fields[fields.size() - kGenreCount + g];
        if (flag != "0" && flag != "1")
          fail(item_path, line_no, "genre flag must be 0 or 1, got '" + flag + "'");
        genres[g] = flag == "1" ? 1 : 0;
      }
      if (!items_by_raw.emplace(raw_id, genres).second)
        fail(item_path, line_no, "duplicate item id " + fields[0]);
    }
    if (items_by_raw.empty()) fail(item_path, 0, "no items parsed");
  }

  RatingsTable table;
  std::unordered_map<long, Index> user_dense, item_dense;
  for (const auto& [raw, info] : users_by_raw) {
    user_dense.emplace(raw, table.n_users());
    table.user_raw_ids.push_back(raw);
    table.users.push_back(info);
  }
  for (const auto& [raw, genres] : items_by_raw) {
    item_dense.emplace(raw, table.n_items());
    table.item_raw_ids.push_back(raw);
    table.item_genres.push_back(genres);
  }

  // u.data: user \t item \t rating \t timestamp
  {
    auto is = open_or_fail(data_path);
    std::string line;
    long line_no = 0;
    std::unordered_set<std::uint64_t> seen;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto fields = split(line, '\t');
      if (fields.size() != 4) fail(data_path, line_no, "expected 4 tab-separated fields");
      const long raw_user = to_long(fields[0], data_path, line_no);
      const long raw_item = to_long(fields[1], data_path, line_no);
      const long rating = to_long(fields[2], data_path, line_no);
      if (rating < 1 || rating > 5) fail(data_path, line_no, "rating outside 1..5");
      auto u = user_dense.find(raw_user);
      if (u == user_dense.end()) fail(data_path, line_no, "unknown user id " + fields[0]);
      auto v = item_dense.find(raw_item);
      if (v == item_dense.end()) fail(data_path, line_no, "unknown item id " + fields[1]);
      const std::uint64_t key =
          static_cast<std::uint64_t>(u->second) * items_by_raw.size() + v->second;
      if (!seen.insert(key).second)
        fail(data_path, line_no, "duplicate rating for user " + fields[0] + ", item " + fields[1]);
      table.ratings.push_back({u->second, v->second, static_cast<double>(rating)});
    }
    if (table.ratings.empty()) fail(data_path, 0, "no ratings parsed");
  }
  return table;
}

namespace {

Matrix raw_user_features(const RatingsTable& table, const FeatureSpec& spec) {
  const Index n = table.n_users();
  Matrix f = Matrix::Zero(n, spec.user_columns());
  std::unordered_map<std::string, Index> occupation_col;
  Index next = 2 + static_cast<Index>(spec.age_lower_bounds.size());
  for (const std::string& occ : spec.occupations) {
    if (occ == spec.dropped_occupation) continue;
    occupation_col.emplace(occ, next++);
  }
  for (Index i = 0; i < n; ++i) {
    const UserInfo& u = table.users[i];
    f(i, 0) = 1.0;
    f(i, 1) = u.gender == 'M' ? 1.0 : 0.0;
    Index bin = 0;
    for (std::size_t b = 0; b < spec.age_lower_bounds.size(); ++b)
      if (u.age >= spec.age_lower_bounds[b]) bin = static_cast<Index>(b);
    f(i, 2 + bin) = 1.0;
    if (u.occupation != spec.dropped_occupation) {
      auto it = occupation_col.find(u.occupation);
      if (it == occupation_col.end())
        throw std::runtime_error("build_side_info: unknown occupation '" + u.occupation + "'");
      f(i, it->second) = 1.0;
    }
  }
  return f;
}

Matrix training_right_singular_vectors(const RatingsTable& table,
                                       const std::vector<std::size_t>& train_positions,
                                       Index k) {
  LinearOperator op;
  op.rows = table.n_users();
  op.cols = table.n_items();
  op.apply = [&](const Matrix& x, Matrix& out) {
    out = Matrix::Zero(op.rows, x.cols());
    for (std::size_t pos : train_positions) {
      const Rating& rt = table.ratings[pos];
      out.row(rt.user) += rt.value * x.row(rt.item);
    }
  };
  op.apply_transpose = [&](const Matrix& x, Matrix& out) {
    out = Matrix::Zero(op.cols, x.cols());
    for (std::size_t pos : train_positions) {
      const Rating& rt = table.ratings[pos];
      out.row(rt.item) += rt.value * x.row(rt.user);
    }
  };
  return topk_svd(op, k).v;
}

// Keeps a maximal independent column subset (pivoted QR order) and
// orthonormalizes it.
Matrix drop_dependent_and_orthonormalize(const Matrix& raw, const std::string& name,
                                         std::vector<std::string>& warnings,
                                         Index& effective_cols) {
  Eigen::ColPivHouseholderQR<Matrix> qr(raw);
  // Stricter than the orthonormalize rank cut so the kept subset is
  // comfortably full-rank for it.
  qr.setThreshold(1e-8);
  const Index rank = qr.rank();
  effective_cols = rank;
  if (rank == raw.cols()) return orthonormalize(raw);

  std::ostringstream oss;
  oss << name << ": dropping " << (raw.cols() - rank) << " linearly dependent of " << raw.cols()
      << " feature columns";
  warnings.push_back(oss.str());

  std::vector<Index> keep(qr.colsPermutation().indices().data(),
                          qr.colsPermutation().indices().data() + rank);
  std::sort(keep.begin(), keep.end());
  Matrix reduced(raw.rows(), rank);
  for (Index c = 0; c < rank; ++c) reduced.col(c) = raw.col(keep[c]);
  return orthonormalize(reduced);
}

}  // namespace

BuiltSideInfo build_side_info(const RatingsTable& table,
                              const std::vector<std::size_t>& train_positions,
                              const FeatureSpec& spec) {
  if (train_positions.empty()) throw_invalid("build_side_info: empty training split");

  const Matrix user_raw = raw_user_features(table, spec);

  Matrix item_raw = Matrix::Zero(table.n_items(), spec.item_columns());
  item_raw.col(0).setOnes();
  for (Index i = 0; i < table.n_items(); ++i)
    for (int g = 0; g < kGenreCount; ++g) item_raw(i, 1 + g) = table.item_genres[i][g];
  if (spec.svd_features > 0)
    item_raw.rightCols(spec.svd_features) =
        training_right_singular_vectors(table, train_positions, spec.svd_features);

  std::vector<std::string> warnings;
  Index a1 = 0, a2 = 0;
  Matrix x = drop_dependent_and_orthonormalize(user_raw, "user features", warnings, a1);
  Matrix y = drop_dependent_and_orthonormalize(item_raw, "item features", warnings, a2);
  return {SideInfo(std::move(x), std::move(y)), a1, a2, std::move(warnings)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_test(
    const RatingsTable& table, std::size_t m, Rng& rng) {
  const std::size_t total = table.ratings.size();
  if (m < 1 || m >= total) throw_invalid("split_train_test: m out of range");
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = total - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<std::size_t> train(order.begin(), order.begin() + m);
  std::vector<std::size_t> test(order.begin() + m, order.end());
  return {std::move(train), std::move(test)};
}

double evaluate_rmse(const std::vector<double>& predictions, const RatingsTable& table,
                     const std::vector<std::size_t>& test_positions, bool clip) {
  if (test_positions.empty()) throw_invalid("evaluate_rmse: empty test set");
  if (predictions.size() != test_positions.size())
    throw_invalid("evaluate_rmse: predictions do not cover the test set");
  double acc = 0.0;
  for (std::size_t k = 0; k < test_positions.size(); ++k) {
    double pred = predictions[k];
    if (clip) pred = std::clamp(pred, 1.0, 5.0);
    const double diff = pred - table.ratings[test_positions[k]].value;
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(test_positions.size()));
}

ObservationSet to_observations(const RatingsTable& table,
                               const std::vector<std::size_t>& positions) {
  std::vector<Triple> triples;
  triples.reserve(positions.size());
  for (std::size_t pos : positions) {
    const Rating& rt = table.ratings[pos];
    triples.push_back({rt.user, rt.item, rt.value});
  }
  const double p = static_cast<double>(positions.size()) /
                   (static_cast<double>(table.n_users()) * static_cast<double>(table.n_items()));
  return ObservationSet(table.n_users(), table.n_items(), p, std::move(triples));
}

}  // namespace movielens
}  // namespace imc
