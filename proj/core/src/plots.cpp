#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "imc/experiments.hpp"
#include "imc/io.hpp"

namespace imc {
namespace experiments {

namespace {

std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

bool key_match(const std::optional<double>& row, const std::optional<double>& want) {
  if (!want) return true;
  return row && *row == *want;
}

}  // namespace

void ResultTable::write_csv(std::ostream& os) const {
  os << "experiment,trial,p,delta,lambda,method,metric,value,status,note\n";
  for (const ResultRow& row : rows) {
    os << row.experiment << ',' << row.trial << ',' << opt_str(row.p) << ','
       << opt_str(row.delta) << ',' << opt_str(row.lambda) << ',' << row.method << ','
       << row.metric << ',' << (row.failed ? std::string() : format_double(row.value)) << ','
       << (row.failed ? "failed" : "ok") << ',';
    // Notes are free text; commas would break the row.
    std::string note = row.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << note << '\n';
  }
}

void ResultTable::write_csv_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(os);
}

double ResultTable::mean(const std::string& method, const std::string& metric,
                         std::optional<double> p, std::optional<double> delta,
                         std::optional<double> lambda, int* count_failed) const {
  double acc = 0.0;
  long n = 0;
  int failed = 0;
  for (const ResultRow& row : rows) {
    if (row.method != method || row.metric != metric) continue;
    if (!key_match(row.p, p) || !key_match(row.delta, delta) || !key_match(row.lambda, lambda))
      continue;
    if (row.failed) {
      ++failed;
      continue;
    }
    acc += row.value;
    ++n;
  }
  if (count_failed != nullptr) *count_failed = failed;
  if (n == 0) {
    std::ostringstream oss;
    oss << "ResultTable::mean: no rows for method=" << method << " metric=" << metric;
    throw std::runtime_error(oss.str());
  }
  return acc / static_cast<double>(n);
}

namespace {

using Key = std::tuple<std::string, std::string, std::string, std::string>;  // p,delta,lambda,method

struct Aggregate {
  double sum = 0.0;
  long count = 0;
};

// Aggregated means per (p, delta, lambda, method) for one metric, rows in
// first-appearance order so re-runs are byte-identical.
void write_aggregate_csv(const std::string& path, const ResultTable& table,
                         const std::string& experiment, const std::string& metric,
                         const std::string& value_column) {
  std::vector<Key> order;
  std::map<Key, Aggregate> agg;
  for (const ResultRow& row : table.rows) {
    if (row.experiment != experiment || row.metric != metric || row.failed) continue;
    Key key{opt_str(row.p), opt_str(row.delta), opt_str(row.lambda), row.method};
    auto [it, inserted] = agg.emplace(key, Aggregate{});
    if (inserted) order.push_back(key);
    it->second.sum += row.value;
    it->second.count += 1;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "p,delta,lambda,method," << value_column << '\n';
  for (const Key& key : order) {
    const Aggregate& a = agg.at(key);
    os << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
       << std::get<3>(key) << ',' << format_double(a.sum / static_cast<double>(a.count)) << '\n';
  }
}

nlohmann::ordered_json line_spec(const std::string& data_file, const std::string& title,
                                 const std::string& x_field, bool x_log,
                                 const std::string& y_field, bool y_log) {
  nlohmann::ordered_json spec;
  spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
  spec["title"] = title;
  spec["data"]["url"] = data_file;
  spec["mark"] = {{"type", "line"}, {"point", true}};
  spec["encoding"]["x"] = {{"field", x_field}, {"type", "quantitative"}};
  if (x_log) spec["encoding"]["x"]["scale"] = {{"type", "log"}};
  spec["encoding"]["y"] = {{"field", y_field}, {"type", "quantitative"}};
  if (y_log) spec["encoding"]["y"]["scale"] = {{"type", "log"}};
  spec["encoding"]["color"] = {{"field", "method"}, {"type", "nominal"}};
  return spec;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
}

}  // namespace

void emit_plots(const ResultTable& table, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> experiments_seen;
  for (const ResultRow& row : table.rows)
    if (std::find(experiments_seen.begin(), experiments_seen.end(), row.experiment) ==
        experiments_seen.end())
      experiments_seen.push_back(row.experiment);

  for (const std::string& exp : experiments_seen) {
    const std::string base = out_dir + "/" + exp;
    if (exp == "phase" || exp == "phase-imc-fine") {
      write_aggregate_csv(base + "_data.csv", table, exp, "success", "success_rate");
      write_json(base + "_plot.vl.json",
                 line_spec(exp + "_data.csv", "Exact recovery success rate vs p", "p", true,
                           "success_rate", false));
    } else if (exp == "noisy-error" || exp == "inexact-error" || exp == "interp-cv") {
      write_aggregate_csv(base + "_data.csv", table, exp, "rel_error", "mean_rel_error");
      write_json(base + "_plot.vl.json",
                 line_spec(exp + "_data.csv", "Relative error vs p", "p", true, "mean_rel_error",
                           true));
    } else if (exp == "delta-sweep") {
      write_aggregate_csv(base + "_data.csv", table, exp, "rel_error", "mean_rel_error");
      write_json(base + "_plot.vl.json",
                 line_spec(exp + "_data.csv", "IMC error vs side-information inexactness",
                           "delta", false, "mean_rel_error", false));
    } else if (exp == "interp-sweep") {
      write_aggregate_csv(base + "_data.csv", table, exp, "rel_error", "mean_rel_error");
      nlohmann::ordered_json spec = line_spec(
          exp + "_data.csv", "Interpolation error vs lambda", "lambda", true, "mean_rel_error",
          true);
      spec["encoding"]["color"] = {{"field", "p"}, {"type", "nominal"}};
      write_json(base + "_plot.vl.json", spec);
    } else if (exp == "projection-check") {
      write_aggregate_csv(base + "_ratio_a.csv", table, exp, "max_ratio_a", "max_ratio");
      write_aggregate_csv(base + "_ratio_b.csv", table, exp, "max_ratio_b", "max_ratio");
      nlohmann::ordered_json spec;
      spec["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
      spec["title"] = "Iterate 2,inf norms against the projection radius";
      spec["data"]["url"] = "projection_trace.csv";
      spec["transform"] = nlohmann::ordered_json::array(
          {{{"fold", nlohmann::ordered_json::array({"two_inf_A", "two_inf_B", "radius"})},
            {"as", nlohmann::ordered_json::array({"series", "value"})}}});
      spec["mark"] = "line";
      spec["encoding"]["x"] = {{"field", "iter"}, {"type", "quantitative"}};
      spec["encoding"]["y"] = {{"field", "value"}, {"type", "quantitative"}};
      spec["encoding"]["color"] = {{"field", "series"}, {"type", "nominal"}};
      write_json(base + "_plot.vl.json", spec);
    } else if (exp == "movielens") {
      write_aggregate_csv(base + "_data.csv", table, exp, "rmse", "mean_rmse");
      write_json(base + "_plot.vl.json",
                 line_spec(exp + "_data.csv", "Test RMSE vs sampling rate", "p", false,
                           "mean_rmse", false));
    } else {
      write_aggregate_csv(base + "_data.csv", table, exp, "rel_error", "mean_rel_error");
    }
  }
}

}  // namespace experiments
}  // namespace imc
