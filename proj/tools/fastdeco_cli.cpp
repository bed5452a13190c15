#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "fastdeco/commands.hpp"
#include "fastdeco/errors.hpp"

namespace fd = fastdeco;

namespace {

int write_outputs(const fd::CommandResult& res, const std::string& prefix,
                  const std::string& out_dir) {
  if (out_dir.empty()) {
    std::cout << res.csv();
    std::cerr << res.summary_text();
    return res.exit_code;
  }
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string stem = (prefix.empty() ? "run" : prefix) + "_" + res.name;
  const fs::path csv = fs::path(out_dir) / (stem + ".csv");
  const fs::path txt = fs::path(out_dir) / (stem + "_summary.txt");
  std::ofstream(csv) << res.csv();
  std::ofstream(txt) << res.summary_text();
  std::cout << res.summary_text() << "wrote " << csv.string() << '\n';
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport and decoherence kinetics of a fast particle in a gas"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir, format = "csv";
  app.add_option("--seed", seed, "random seed (overrides run.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "write CSV and summary here instead of stdout");
  app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv"}));

  std::string scenario_path;
  fd::CommandOptions opt;
  std::optional<std::size_t> n;
  std::optional<double> dt, t_end;
  std::optional<std::string> scheme;

  const std::map<std::string, std::string> blurb = {
      {"moments", "angular moments of the cross section"},
      {"rates", "bath-averaged transport coefficients vs |k|"},
      {"decoherence-rate", "F(s) along three directions"},
      {"evolve", "closed-form moments and coherence lengths vs time"},
      {"sde", "stochastic ensemble vs time, with standard errors"},
      {"verify", "operator and cross-section identity checks"},
  };
  for (const auto& name : fd::subcommand_names()) {
    auto* sub = app.add_subcommand(name, blurb.count(name) ? blurb.at(name) : "");
    sub->fallthrough();
    auto* pos = sub->add_option("scenario", scenario_path, "scenario file");
    if (name != "verify") pos->required();
    if (name == "sde") {
      sub->add_option("-N,--walkers", n, "number of walkers");
      sub->add_option("--dt", dt, "time step in units of 1/zeta");
      sub->add_option("--t-end", t_end, "final time in units of 1/eta");
      sub->add_option("--scheme", scheme, "analytic or full_a2")
          ->check(CLI::IsMember({"analytic", "full_a2"}));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  opt.seed = seed;
  opt.threads = threads;
  opt.n = n;
  opt.dt = dt;
  opt.t_end = t_end;
  opt.scheme = scheme;

  try {
    std::optional<fd::ResolvedScenario> resolved;
    std::string prefix = "verify";
    if (!scenario_path.empty()) {
      resolved = fd::resolve(fd::load_scenario(scenario_path));
      prefix = resolved->scenario.output.prefix;
    }
    const auto res =
        fd::run_subcommand(name, resolved ? &*resolved : nullptr, opt);
    return write_outputs(res, prefix, out_dir);
  } catch (const fd::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const fd::ToleranceError& e) {
    std::cerr << "tolerance failure: " << e.what() << '\n';
    return 3;
  } catch (const fd::RegimeError& e) {
    std::cerr << "regime failure: " << e.what() << '\n';
    return 3;
  } catch (const fd::StepRejected& e) {
    std::cerr << "step rejected: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
