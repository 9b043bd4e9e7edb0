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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "rankmin/harness.hpp"

namespace rankmin {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// 17-significant-digit decimal formatting; round-trips doubles exactly.
std::string format_double(double v);

// Matrix CSV with a `rows,cols` header line followed by row-major values.
std::string matrix_to_csv(const MatXd& X);
MatXd matrix_from_csv(const std::string& text);

// Outcome table CSV. Column order:
// trial,seed,k,category,recovered,Q,residual_rel,iterations,wall_ms,
// error_rel,note
std::string outcomes_to_csv(const std::vector<TrialOutcome>& outcomes);
std::vector<TrialOutcome> outcomes_from_csv(const std::string& text);

// Flat key/value config text: `[section]` headers, `key = value` lines,
// `#` comments. Parse errors carry line numbers.
struct ConfigSection {
  std::string name;
  int line = 0;  // header line number
  std::map<std::string, std::string> values;
  std::map<std::string, int> value_lines;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
};

struct ConfigFile {
  std::vector<ConfigSection> sections;
  static ConfigFile parse(const std::string& text);
  const ConfigSection* find(const std::string& name) const;
};

// Build an ExperimentConfig from a config section whose keys mirror the
// field names (n, m, r, l, c_mf, operator, solver, p, trials, k_max,
// base_seed, nu0, max_iters, post_sweeps, rank, timing).
ExperimentConfig experiment_from_section(const ConfigSection& section);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace rankmin
