/*  Copyright 2026 The rankmin Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.  */

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "rankmin/io.hpp"
#include "rankmin/report.hpp"

namespace {

using namespace rankmin;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

std::string stem_of(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path;
  return path.substr(0, dot);
}

std::vector<std::pair<Index, Index>> parse_indices(const std::string& text,
                                                   int line) {
  std::vector<std::pair<Index, Index>> out;
  std::stringstream ss(text);
  std::string pair_text;
  while (std::getline(ss, pair_text, ';')) {
    const auto comma = pair_text.find(',');
    if (comma == std::string::npos)
      throw ConfigError(line, "indices entries must look like 'row,col'");
    out.emplace_back(std::stoll(pair_text.substr(0, comma)),
                     std::stoll(pair_text.substr(comma + 1)));
  }
  return out;
}

WeightSide parse_side(const std::string& s, int line) {
  if (s == "left") return WeightSide::Left;
  if (s == "right") return WeightSide::Right;
  throw ConfigError(line, "side must be left, right, or alternating");
}

ProblemInstance<double> build_problem(const ConfigSection& sec,
                                      std::optional<std::uint64_t> seed_override) {
  const Index n = sec.get_int("n");
  const Index m = sec.get_int("m");
  const std::uint64_t seed = seed_override.value_or(
      sec.has("seed") ? static_cast<std::uint64_t>(sec.get_int("seed")) : 0);
  const std::string op = sec.get_or("operator", "gaussian");

  std::optional<LinearMap<double>> map;
  if (sec.has("indices")) {
    if (op != "sampling")
      throw ConfigError(sec.line, "explicit indices need operator = sampling");
    map = LinearMap<double>::sampling(
        n, m, parse_indices(sec.get("indices"), sec.value_lines.at("indices")));
  } else {
    const Index l = sec.get_int("l");
    if (op == "gaussian") {
      map = gen_gaussian_operator<double>(n, m, l, seed);
    } else if (op == "sampling") {
      map = gen_sampling_operator<double>(n, m, l, sec.get_int("r"), seed);
    } else {
      throw ConfigError(sec.line, "unknown operator '" + op + "'");
    }
  }

  const std::string reference = sec.get_or("reference", "planted");
  if (reference == "planted") {
    const Index r = sec.get_int("r");
    return ProblemInstance<double>::planted(
        std::move(*map), gen_reference<double>(n, m, r, seed), r, seed);
  }
  if (reference != "none")
    throw ConfigError(sec.line, "reference must be 'planted' or 'none'");
  const MatXd y_mat = matrix_from_csv(read_file(sec.get("y")));
  if (y_mat.cols() != 1 || y_mat.rows() != map->size())
    throw ConfigError(sec.line, "y must be an l x 1 matrix CSV");
  return ProblemInstance<double>::from_measurements(std::move(*map),
                                                    VecXd(y_mat.col(0)), seed);
}

template <typename Record>
std::string trace_to_csv(const std::vector<Record>& records) {
  std::string out = "record,gamma,f_left,f_right,residual,step\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(i);
    out += ',' + format_double(records[i].gamma);
    out += ',' + format_double(records[i].f_left);
    out += ',' + format_double(records[i].f_right);
    out += ',' + format_double(records[i].residual);
    out += ',' + format_double(records[i].step);
    out += '\n';
  }
  return out;
}

int run_solve(const std::string& problem_path, const std::string& out_path,
              const std::string& trace_path,
              std::optional<std::uint64_t> seed_override) {
  const ConfigFile file = ConfigFile::parse(read_file(problem_path));
  const ConfigSection* prob_sec = file.find("problem");
  if (!prob_sec) throw ConfigError(0, "missing [problem] section");
  const ConfigSection* solver_sec = file.find("solver");

  const ProblemInstance<double> problem =
      build_problem(*prob_sec, seed_override);

  std::string kind = "irls";
  double p = 0, nu = 0.97;
  std::optional<double> gamma0, c_L;
  std::optional<Index> rank;
  Index max_iters = 200000;
  std::string side = "left", strategy = "auto";
  if (solver_sec) {
    kind = solver_sec->get_or("kind", kind);
    if (solver_sec->has("p")) p = solver_sec->get_double("p");
    if (solver_sec->has("nu")) nu = solver_sec->get_double("nu");
    if (solver_sec->has("gamma0")) gamma0 = solver_sec->get_double("gamma0");
    if (solver_sec->has("c_L")) c_L = solver_sec->get_double("c_L");
    if (solver_sec->has("rank")) rank = solver_sec->get_int("rank");
    if (solver_sec->has("max_iters"))
      max_iters = solver_sec->get_int("max_iters");
    side = solver_sec->get_or("side", side);
    strategy = solver_sec->get_or("strategy", strategy);
  }

  MatXd X;
  std::string trace_csv;
  if (kind == "airls") {
    AirlsConfig<double> config;
    config.p = p;
    config.schedule = GammaSchedule<double>::constant_rate(nu, gamma0);
    config.rank = rank;
    config.c_L = c_L;
    config.max_sweeps = max_iters;
    const AirlsTrace<double> trace = airls_run(problem, config);
    X = trace.final_x();
    trace_csv = trace_to_csv(trace.records);
  } else if (kind == "irls") {
    IrlsConfig<double> config;
    config.p = p;
    config.schedule = GammaSchedule<double>::constant_rate(nu, gamma0);
    config.max_iters = max_iters;
    if (side == "alternating") {
      config.sides = SideSchedule::alternating();
    } else {
      config.sides = SideSchedule::constant(
          parse_side(side, solver_sec ? solver_sec->line : 0));
    }
    if (strategy == "auto")
      config.strategy = LsPolicy<double>::auto_switch();
    else if (strategy == "image")
      config.strategy = LsPolicy<double>::image_only();
    else if (strategy == "kernel")
      config.strategy = LsPolicy<double>::kernel_only();
    else if (strategy == "relaxed")
      config.strategy = LsPolicy<double>::relaxed(c_L);
    else
      throw ConfigError(solver_sec ? solver_sec->line : 0,
                        "unknown strategy '" + strategy + "'");
    const IrlsTrace<double> trace = irls_run(problem, config);
    X = trace.final_x;
    trace_csv = trace_to_csv(trace.records);
  } else {
    throw ConfigError(solver_sec ? solver_sec->line : 0,
                      "solve supports kind = irls or airls");
  }

  write_file(out_path, matrix_to_csv(X));
  if (!trace_path.empty()) write_file(trace_path, trace_csv);
  return kExitOk;
}

int run_experiment_cmd(const std::string& config_path,
                       const std::string& section_name,
                       const std::string& out_path,
                       std::optional<std::uint64_t> seed_override) {
  const ConfigFile file = ConfigFile::parse(read_file(config_path));
  if (file.sections.empty()) throw ConfigError(0, "config has no sections");

  std::vector<const ConfigSection*> picked;
  if (!section_name.empty()) {
    const ConfigSection* sec = file.find(section_name);
    if (!sec) throw ConfigError(0, "no section [" + section_name + "]");
    picked.push_back(sec);
  } else {
    for (const auto& sec : file.sections) picked.push_back(&sec);
  }

  for (const ConfigSection* sec : picked) {
    ExperimentConfig config = experiment_from_section(*sec);
    if (seed_override) config.base_seed = *seed_override;
    const std::vector<TrialOutcome> table = run_experiment(config);
    std::string path = out_path;
    if (picked.size() > 1)
      path = stem_of(out_path) + "_" + sec->name + ".csv";
    write_file(path, outcomes_to_csv(table));
    long recoveries = 0;
    for (const auto& o : table) recoveries += o.recovered ? 1 : 0;
    std::cerr << "[" << sec->name << "] " << table.size() << " trials, "
              << recoveries << " recoveries -> " << path << "\n";
  }
  return kExitOk;
}

int run_report(const std::string& results_path, bool bar, bool button) {
  const std::vector<TrialOutcome> outcomes =
      outcomes_from_csv(read_file(results_path));
  const std::string stem = stem_of(results_path);
  if (!bar && !button) bar = button = true;
  if (bar) {
    const Chart chart = emit_bar(outcomes);
    write_file(stem + "_bar.svg", chart.svg);
    write_file(stem + "_bar.csv", chart.csv);
  }
  if (button) {
    const Chart chart = emit_button(outcomes);
    write_file(stem + "_button.svg", chart.svg);
    write_file(stem + "_button.csv", chart.csv);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-det IRLS solvers and experiments for affine rank "
               "minimization"};
  app.require_subcommand(1);

  std::string problem_path, out_path, trace_path;
  std::string config_path, section_name, results_path;
  bool bar = false, button = false;
  std::optional<std::uint64_t> seed_override;

  CLI::App* solve = app.add_subcommand("solve", "solve one problem file");
  solve->add_option("--problem", problem_path, "problem config file")
      ->required();
  solve->add_option("--out", out_path, "solution matrix CSV")->required();
  solve->add_option("--trace", trace_path, "per-iteration trace CSV");
  solve->add_option("--seed", seed_override, "override the problem seed");

  CLI::App* experiment =
      app.add_subcommand("experiment", "run a trial batch from a config");
  experiment->add_option("--config", config_path, "experiment config file")
      ->required();
  experiment->add_option("--section", section_name,
                         "run only this config section");
  experiment->add_option("--out", out_path, "outcome CSV path")->required();
  experiment->add_option("--seed", seed_override, "override base_seed");

  CLI::App* report =
      app.add_subcommand("report", "render outcome CSV to SVG charts");
  report->add_option("results", results_path, "outcome CSV")->required();
  report->add_flag("--bar", bar, "emit the sensitivity bar chart");
  report->add_flag("--button", button, "emit the button plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (solve->parsed())
      return run_solve(problem_path, out_path, trace_path, seed_override);
    if (experiment->parsed())
      return run_experiment_cmd(config_path, section_name, out_path,
                                seed_override);
    if (report->parsed()) return run_report(results_path, bar, button);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
