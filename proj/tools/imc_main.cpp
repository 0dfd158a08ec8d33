#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "imc/diagnostics.hpp"
#include "imc/experiments.hpp"
#include "imc/io.hpp"

namespace {

using imc::experiments::ExperimentConfig;
using imc::experiments::Preset;

std::vector<double> parse_grid(const std::string& text, const std::string& name) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    try {
      out.push_back(std::stod(field));
    } catch (const std::exception&) {
      throw CLI::ValidationError(name, "cannot parse '" + field + "' as a number");
    }
  }
  if (out.empty()) throw CLI::ValidationError(name, "empty grid");
  return out;
}

std::vector<std::size_t> parse_size_grid(const std::string& text, const std::string& name) {
  std::vector<std::size_t> out;
  for (double v : parse_grid(text, name)) out.push_back(static_cast<std::size_t>(v));
  return out;
}

imc::ProjectionMode parse_projection(const std::string& text) {
  if (text == "enforce") return imc::ProjectionMode::enforce;
  if (text == "monitor") return imc::ProjectionMode::monitor;
  if (text == "off") return imc::ProjectionMode::off;
  throw CLI::ValidationError("--projection", "must be enforce, monitor, or off");
}

// Raw option values as strings; applied onto the preset config in order
// (flags first, then config-file entries, which take precedence).
struct OptionSet {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
};

void apply_option(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto to_long = [&](const std::string& v) {
    try {
      return std::stol(v);
    } catch (const std::exception&) {
      throw std::runtime_error("option " + key + ": cannot parse integer '" + v + "'");
    }
  };
  auto to_double = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::exception&) {
      throw std::runtime_error("option " + key + ": cannot parse number '" + v + "'");
    }
  };
  auto to_bool = [&](const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw std::runtime_error("option " + key + ": cannot parse boolean '" + v + "'");
  };

  if (key == "n1") cfg.n1 = to_long(value);
  else if (key == "n2") cfg.n2 = to_long(value);
  else if (key == "a1") cfg.a1 = to_long(value);
  else if (key == "a2") cfg.a2 = to_long(value);
  else if (key == "rank") cfg.rank = to_long(value);
  else if (key == "p-grid") cfg.p_grid = parse_grid(value, key);
  else if (key == "delta") cfg.delta_grid = parse_grid(value, key);
  else if (key == "lambda-grid") cfg.lambda_grid = parse_grid(value, key);
  else if (key == "sigma") cfg.sigma = to_double(value);
  else if (key == "trials") cfg.trials = static_cast<int>(to_long(value));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(value));
  else if (key == "out") cfg.out_dir = value;
  else if (key == "projection") cfg.solver.projection = parse_projection(value);
  else if (key == "safe-step") cfg.solver.safe_step = to_bool(value);
  else if (key == "step-size") cfg.solver.step_size = to_double(value);
  else if (key == "step-scale") cfg.solver.step_scale = to_double(value);
  else if (key == "max-iters") cfg.solver.max_iters = static_cast<int>(to_long(value));
  else if (key == "rel-tol") cfg.solver.rel_tol = to_double(value);
  else if (key == "threads") cfg.threads = static_cast<int>(to_long(value));
  else if (key == "regen-truth") cfg.regen_truth = to_bool(value);
  else if (key == "movielens-dir") cfg.movielens_dir = value;
  else if (key == "m-grid") cfg.m_grid = parse_size_grid(value, key);
  else if (key == "cv-folds") cfg.cv_folds = static_cast<int>(to_long(value));
  else if (key == "success-threshold") cfg.success_threshold = to_double(value);
  else throw std::runtime_error("unknown config key: " + key);
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    apply_option(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
}

struct CommonFlags {
  std::string preset = "desk";
  std::string config_file;
  OptionSet options;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--preset", flags.preset, "Scale preset: paper or desk")
      ->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--config", flags.config_file,
                  "key = value config file; overrides command-line flags");

  auto capture = [&flags](const std::string& key) {
    return [&flags, key](const std::string& value) { flags.options.set(key, value); };
  };
  for (const char* key : {"n1", "n2", "a1", "a2", "rank", "sigma", "trials", "seed", "out",
                          "projection", "step-size", "step-scale", "max-iters", "rel-tol",
                          "threads", "success-threshold", "cv-folds", "movielens-dir"}) {
    cmd->add_option_function<std::string>(std::string("--") + key, capture(key));
  }
  cmd->add_option_function<std::string>("--p-grid", capture("p-grid"),
                                        "comma-separated sampling probabilities");
  cmd->add_option_function<std::string>("--delta", capture("delta"),
                                        "comma-separated inexactness levels");
  cmd->add_option_function<std::string>("--lambda-grid", capture("lambda-grid"),
                                        "comma-separated penalty weights");
  cmd->add_option_function<std::string>("--m-grid", capture("m-grid"),
                                        "comma-separated training sizes (movielens)");
  cmd->add_flag_callback("--safe-step",
                         [&flags] { flags.options.set("safe-step", "1"); },
                         "Use the conservative theory step size");
  cmd->add_flag_callback("--regen-truth",
                         [&flags] { flags.options.set("regen-truth", "1"); },
                         "Regenerate the ground truth each trial");
}

int run_experiment_command(const std::string& experiment, const CommonFlags& flags) {
  ExperimentConfig cfg = imc::experiments::make_preset(
      experiment, flags.preset == "paper" ? Preset::paper : Preset::desk);
  for (const auto& [key, value] : flags.options.entries) apply_option(cfg, key, value);
  if (!flags.config_file.empty()) apply_config_file(cfg, flags.config_file);
  cfg.validate();

  const imc::experiments::ResultTable table = imc::experiments::run_experiment(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  table.write_csv_file(cfg.out_dir + "/results.csv");
  imc::experiments::emit_plots(table, cfg.out_dir);

  long failed = 0;
  for (const auto& row : table.rows) failed += row.failed ? 1 : 0;
  std::cout << experiment << ": " << table.rows.size() << " result rows ("
            << failed << " accounted failures) -> " << cfg.out_dir << "/results.csv\n";
  return 0;
}

int run_report(const CommonFlags& flags, double p, double delta, double sigma) {
  ExperimentConfig cfg = imc::experiments::make_preset(
      "noisy-error", flags.preset == "paper" ? Preset::paper : Preset::desk);
  cfg.experiment = "report";
  for (const auto& [key, value] : flags.options.entries) apply_option(cfg, key, value);
  if (!flags.config_file.empty()) apply_config_file(cfg, flags.config_file);

  imc::Rng rng(cfg.seed, 0);
  auto inst = imc::gen_ground_truth(cfg.n1, cfg.n2, cfg.a1, cfg.a2, cfg.rank, rng);
  imc::Rng omega_rng = rng.stream(1);
  auto omega = imc::sample_omega(cfg.n1, cfg.n2, p, omega_rng);
  imc::Rng noise_rng = rng.stream(2);
  auto noise = imc::noise_only(cfg.n1, cfg.n2, omega, p, sigma, noise_rng);
  std::vector<double> values;
  values.reserve(omega.size());
  for (std::size_t k = 0; k < omega.size(); ++k)
    values.push_back(inst.truth.l_star(omega[k].first, omega[k].second) +
                     noise.triples()[k].value);
  auto obs = noise.with_values(values);

  imc::SideInfo si = inst.exact_side_info;
  if (delta > 0.0) {
    auto [u_star, v_star] = imc::experiments::truth_singular_subspaces(inst.truth);
    imc::Rng x_rng = rng.stream(3), y_rng = rng.stream(4);
    si = imc::SideInfo(imc::gen_inexact_side_info(u_star, cfg.a1, delta, x_rng),
                       imc::gen_inexact_side_info(v_star, cfg.a2, delta, y_rng));
  }

  const imc::InstanceReport report = imc::instance_report(inst.truth, si, obs, &noise);
  report.print(std::cout);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream os(cfg.out_dir + "/report.csv");
    report.write_csv(os);
    std::cout << "written: " << cfg.out_dir << "/report.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive matrix completion experiments"};
  app.require_subcommand(1);

  struct SubcommandSpec {
    const char* name;
    const char* experiment;
    const char* help;
  };
  const std::vector<SubcommandSpec> specs = {
      {"phase", "phase", "Exact-recovery success rates vs p (IMC and MC)"},
      {"noisy", "noisy-error", "Relative error vs p under Gaussian noise"},
      {"inexact", "inexact-error", "Error vs p under inexact side information"},
      {"delta-sweep", "delta-sweep", "IMC error vs inexactness level delta"},
      {"interp", "interp-sweep", "Interpolation error vs lambda"},
      {"interp-cv", "interp-cv", "Cross-validated interpolation vs IMC and MC"},
      {"projection-check", "projection-check", "Projection-set inactivity diagnostic"},
      {"movielens", "movielens", "MovieLens 100K RMSE comparison"},
  };

  int exit_code = 0;
  std::vector<std::unique_ptr<CommonFlags>> flag_sets;
  std::string phase_experiment = "phase";
  for (const auto& spec : specs) {
    auto* cmd = app.add_subcommand(spec.name, spec.help);
    flag_sets.push_back(std::make_unique<CommonFlags>());
    CommonFlags* flags = flag_sets.back().get();
    add_common_flags(cmd, *flags);
    std::string experiment = spec.experiment;
    if (std::string(spec.name) == "phase") {
      cmd->add_flag_callback("--fine", [&phase_experiment] { phase_experiment = "phase-imc-fine"; },
                             "Fine low-p grid, IMC only");
      cmd->callback([flags, &phase_experiment, &exit_code] {
        exit_code = run_experiment_command(phase_experiment, *flags);
      });
    } else {
      cmd->callback([flags, experiment, &exit_code] {
        exit_code = run_experiment_command(experiment, *flags);
      });
    }
  }

  auto* report_cmd = app.add_subcommand("report", "Incoherence / noise diagnostics of an instance");
  flag_sets.push_back(std::make_unique<CommonFlags>());
  CommonFlags* report_flags = flag_sets.back().get();
  add_common_flags(report_cmd, *report_flags);
  double report_p = 0.05, report_delta = 0.0, report_sigma = 0.0;
  report_cmd->add_option("--p", report_p, "Sampling probability");
  report_cmd->add_option("--inexact-delta", report_delta, "Side-information inexactness");
  report_cmd->add_option("--noise-sigma", report_sigma, "Gaussian noise level");
  report_cmd->callback([report_flags, &report_p, &report_delta, &report_sigma, &exit_code] {
    exit_code = run_report(*report_flags, report_p, report_delta, report_sigma);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}
