#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fastdeco/scenario.hpp"

namespace fastdeco {

struct CommandOptions {
  std::optional<std::uint64_t> seed;  // overrides run.seed
  unsigned threads = 1;
  // sde overrides
  std::optional<std::size_t> n;
  std::optional<double> dt;      // in units of 1/zeta
  std::optional<double> t_end;   // in units of 1/eta
  std::optional<std::string> scheme;
};

// Cells are preformatted strings so the CSV is byte-stable.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct CommandResult {
  std::string name;
  std::vector<std::pair<std::string, std::string>> preamble;
  Table table;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<std::string> warnings;
  int exit_code = 0;  // 0 ok, 3 tolerance failure

  // `# key = value` preamble, header, rows.
  std::string csv() const;
  std::string summary_text() const;
};

const std::vector<std::string>& subcommand_names();

// `verify` accepts a null scenario; every other subcommand needs one.
CommandResult run_subcommand(const std::string& name,
                             const ResolvedScenario* scenario,
                             const CommandOptions& opt);

CommandResult run_moments(const ResolvedScenario& s, const CommandOptions& opt);
CommandResult run_rates(const ResolvedScenario& s, const CommandOptions& opt);
CommandResult run_decoherence(const ResolvedScenario& s,
                              const CommandOptions& opt);
CommandResult run_evolve(const ResolvedScenario& s, const CommandOptions& opt);
CommandResult run_sde(const ResolvedScenario& s, const CommandOptions& opt);
CommandResult run_verify(const ResolvedScenario* s, const CommandOptions& opt);

// Headline numbers and validity diagnostics shared by all subcommands.
void add_diagnostics(const ResolvedScenario& s, CommandResult& out);

// %.12g, with inf/nan spelled out.
std::string format_number(double v);

}  // namespace fastdeco
