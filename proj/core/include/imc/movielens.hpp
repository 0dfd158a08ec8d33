#pragma once

#include <array>
#include <string>
#include <vector>

#include "imc/observation.hpp"
#include "imc/rng.hpp"
#include "imc/types.hpp"

namespace imc {
namespace movielens {

inline constexpr int kGenreCount = 19;

struct Rating {
  Index user;  // dense 0-based id
  Index item;
  double value;
};

struct UserInfo {
  int age = 0;
  char gender = '?';
  std::string occupation;
};

/// Parsed MovieLens 100K tables with dense ids assigned by ascending raw id.
struct RatingsTable {
  std::vector<Rating> ratings;
  std::vector<long> user_raw_ids;
  std::vector<long> item_raw_ids;
  std::vector<UserInfo> users;
  std::vector<std::array<int, kGenreCount>> item_genres;

  Index n_users() const { return static_cast<Index>(user_raw_ids.size()); }
  Index n_items() const { return static_cast<Index>(item_raw_ids.size()); }
};

/// User features: intercept + gender + one-hot age group + one-hot occupation
/// with one reference category absorbed by the intercept. Movie features:
/// intercept + genre flags + top right singular vectors of the training
/// matrix. Bin boundaries and the occupation list follow the dataset's
/// canonical demographic buckets; both are configurable.
struct FeatureSpec {
  std::vector<int> age_lower_bounds = {0, 18, 25, 35, 45, 50, 56};
  std::vector<std::string> occupations = {
      "administrator", "artist",     "doctor",    "educator",  "engineer", "entertainment",
      "executive",     "healthcare", "homemaker", "lawyer",    "librarian", "marketing",
      "none",          "other",      "programmer", "retired",  "salesman", "scientist",
      "student",       "technician", "writer"};
  std::string dropped_occupation = "none";
  Index svd_features = 10;

  Index user_columns() const {
    return 2 + static_cast<Index>(age_lower_bounds.size()) +
           static_cast<Index>(occupations.size()) - 1;
  }
  Index item_columns() const { return 1 + kGenreCount + svd_features; }
};

/// Reads u.data, u.user, u.item from the dataset directory. Malformed rows,
/// missing files, and unknown ids fail with the file name and line number.
RatingsTable load_movielens(const std::string& dir);

struct BuiltSideInfo {
  SideInfo side_info;
  Index effective_a1;
  Index effective_a2;
  std::vector<std::string> warnings;
};

/// Assembles the raw feature matrices for the given training split,
/// drops linearly dependent columns (with a warning naming how many), and
/// orthonormalizes. train_positions index into table.ratings.
BuiltSideInfo build_side_info(const RatingsTable& table,
                              const std::vector<std::size_t>& train_positions,
                              const FeatureSpec& spec = FeatureSpec{});

/// Uniform without-replacement split of rating positions into (train, test).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_test(
    const RatingsTable& table, std::size_t m, Rng& rng);

/// RMSE of predictions against the held-out ratings; predictions[k]
/// corresponds to test_positions[k]. Optionally clips predictions to [1, 5].
double evaluate_rmse(const std::vector<double>& predictions, const RatingsTable& table,
                     const std::vector<std::size_t>& test_positions, bool clip = false);

/// Training ratings as an observation set with the empirical sampling rate
/// p = |positions| / (n_users * n_items).
ObservationSet to_observations(const RatingsTable& table,
                               const std::vector<std::size_t>& positions);

}  // namespace movielens
}  // namespace imc
