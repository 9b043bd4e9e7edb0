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

#include "rankmin/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rankmin {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& s, int line) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || (end && *end != '\0'))
    throw ConfigError(line, "not a number: '" + t + "'");
  return v;
}

long long parse_int(const std::string& s, int line) {
  const std::string t = trim(s);
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end == t.c_str() || (end && *end != '\0'))
    throw ConfigError(line, "not an integer: '" + t + "'");
  return v;
}

Category category_from_string(const std::string& s, int line) {
  if (s == "improvement") return Category::Improvement;
  if (s == "success") return Category::Success;
  if (s == "weak_fail") return Category::WeakFail;
  if (s == "strong_fail") return Category::StrongFail;
  throw ConfigError(line, "unknown category '" + s + "'");
}

std::string sanitize_note(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string matrix_to_csv(const MatXd& X) {
  std::string out = std::to_string(X.rows()) + "," + std::to_string(X.cols());
  out += '\n';
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      if (j) out += ',';
      out += format_double(X(i, j));
    }
    out += '\n';
  }
  return out;
}

MatXd matrix_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  if (!std::getline(ss, line)) throw ConfigError(1, "empty matrix file");
  ++lineno;
  const auto header = split(trim(line), ',');
  if (header.size() != 2)
    throw ConfigError(lineno, "matrix header must be 'rows,cols'");
  const Index rows = parse_int(header[0], lineno);
  const Index cols = parse_int(header[1], lineno);
  if (rows < 0 || cols < 0) throw ConfigError(lineno, "negative dimensions");
  MatXd X(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!std::getline(ss, line))
      throw ConfigError(lineno, "unexpected end of matrix data");
    ++lineno;
    const auto cells = split(trim(line), ',');
    if (static_cast<Index>(cells.size()) != cols)
      throw ConfigError(lineno, "expected " + std::to_string(cols) +
                                    " values per row");
    for (Index j = 0; j < cols; ++j) X(i, j) = parse_double(cells[j], lineno);
  }
  return X;
}

std::string outcomes_to_csv(const std::vector<TrialOutcome>& outcomes) {
  std::string out =
      "trial,seed,k,category,recovered,Q,residual_rel,iterations,wall_ms,"
      "error_rel,note\n";
  for (const auto& o : outcomes) {
    out += std::to_string(o.trial);
    out += ',' + std::to_string(o.seed);
    out += ',' + std::to_string(o.k);
    out += ',';
    out += to_string(o.category);
    out += ',' + std::to_string(o.recovered ? 1 : 0);
    out += ',' + format_double(o.Q);
    out += ',' + format_double(o.residual_rel);
    out += ',' + std::to_string(o.iterations);
    out += ',' + format_double(o.wall_ms);
    out += ',' + format_double(o.error_rel);
    out += ',' + sanitize_note(o.note);
    out += '\n';
  }
  return out;
}

std::vector<TrialOutcome> outcomes_from_csv(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  if (!std::getline(ss, line)) throw ConfigError(1, "empty outcome file");
  ++lineno;
  std::vector<TrialOutcome> out;
  while (std::getline(ss, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() < 9)
      throw ConfigError(lineno, "outcome row needs at least 9 columns");
    TrialOutcome o;
    o.trial = parse_int(cells[0], lineno);
    o.seed = static_cast<std::uint64_t>(parse_int(cells[1], lineno));
    o.k = static_cast<int>(parse_int(cells[2], lineno));
    o.category = category_from_string(trim(cells[3]), lineno);
    o.recovered = parse_int(cells[4], lineno) != 0;
    o.Q = parse_double(cells[5], lineno);
    o.residual_rel = parse_double(cells[6], lineno);
    o.iterations = parse_int(cells[7], lineno);
    o.wall_ms = parse_double(cells[8], lineno);
    if (cells.size() > 9) o.error_rel = parse_double(cells[9], lineno);
    if (cells.size() > 10) o.note = cells[10];
    out.push_back(std::move(o));
  }
  return out;
}

const std::string& ConfigSection::get(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end())
    throw ConfigError(line, "section [" + name + "] is missing key '" + key +
                                "'");
  return it->second;
}

std::string ConfigSection::get_or(const std::string& key,
                                  const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigSection::get_double(const std::string& key) const {
  return parse_double(get(key), value_lines.at(key));
}

long long ConfigSection::get_int(const std::string& key) const {
  return parse_int(get(key), value_lines.at(key));
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile file;
  std::stringstream ss(text);
  std::string raw;
  int lineno = 0;
  ConfigSection* current = nullptr;
  while (std::getline(ss, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(lineno, "unterminated section header");
      ConfigSection section;
      section.name = trim(line.substr(1, line.size() - 2));
      section.line = lineno;
      file.sections.push_back(std::move(section));
      current = &file.sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(lineno, "expected 'key = value'");
    if (!current) {
      ConfigSection section;
      section.name = "";
      section.line = lineno;
      file.sections.push_back(std::move(section));
      current = &file.sections.back();
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    if (current->values.count(key))
      throw ConfigError(lineno, "duplicate key '" + key + "'");
    current->values[key] = value;
    current->value_lines[key] = lineno;
  }
  return file;
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

ExperimentConfig experiment_from_section(const ConfigSection& section) {
  ExperimentConfig config;
  const auto line = [&](const std::string& key) {
    const auto it = section.value_lines.find(key);
    return it == section.value_lines.end() ? section.line : it->second;
  };
  config.n = section.has("n") ? section.get_int("n") : config.n;
  config.m = section.has("m") ? section.get_int("m") : config.n;
  config.r = section.has("r") ? section.get_int("r") : config.r;
  if (section.has("l")) config.l = section.get_int("l");
  if (section.has("c_mf")) config.c_mf = section.get_double("c_mf");
  if (section.has("l") && section.has("c_mf"))
    throw ConfigError(line("c_mf"), "give either l or c_mf, not both");
  const std::string op = section.get_or("operator", "gaussian");
  if (op == "gaussian")
    config.op = OperatorKind::Gaussian;
  else if (op == "sampling")
    config.op = OperatorKind::Sampling;
  else
    throw ConfigError(line("operator"), "unknown operator '" + op + "'");
  const std::string solver = section.get_or("solver", "irls");
  if (solver == "irls")
    config.solver = SolverKind::Irls;
  else if (solver == "airls")
    config.solver = SolverKind::Airls;
  else if (solver == "acm")
    config.solver = SolverKind::Acm;
  else
    throw ConfigError(line("solver"), "unknown solver '" + solver + "'");
  if (section.has("p")) config.p = section.get_double("p");
  if (section.has("trials")) config.trials = section.get_int("trials");
  if (section.has("k_max")) config.k_max = section.get_int("k_max");
  if (section.has("base_seed"))
    config.base_seed = static_cast<std::uint64_t>(section.get_int("base_seed"));
  if (section.has("nu0")) config.nu0 = section.get_double("nu0");
  if (section.has("max_iters")) config.max_iters = section.get_int("max_iters");
  if (section.has("post_sweeps"))
    config.post_sweeps = section.get_int("post_sweeps");
  if (section.has("rank")) config.rank_override = section.get_int("rank");
  const std::string timing = section.get_or("timing", "off");
  if (timing == "on")
    config.measure_time = true;
  else if (timing == "off")
    config.measure_time = false;
  else
    throw ConfigError(line("timing"), "timing must be 'on' or 'off'");
  if (config.trials < 1)
    throw ConfigError(line("trials"), "trials must be at least 1");
  if (config.k_max < 0)
    throw ConfigError(line("k_max"), "k_max must be non-negative");
  if (!(config.nu0 > 1.0))
    throw ConfigError(line("nu0"), "nu0 must exceed 1");
  return config;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << content;
}

}  // namespace rankmin
