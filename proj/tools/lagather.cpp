#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lagather/cli.hpp"

namespace {

using namespace lagather;

template <typename T, typename Parse>
CLI::Validator enum_validator(Parse parse, const std::string& names) {
  return CLI::Validator(
      [parse, names](std::string& value) -> std::string {
        return parse(value) ? std::string{} : "expected one of " + names + ", got '" + value + "'";
      },
      names);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate and model allgather algorithms over a region topology"};
  app.require_subcommand(1);

  std::string algorithm = "bruck";
  std::string variant = "both";
  const auto algorithm_names = std::string("bruck|locality-bruck|ring|hierarchical");
  const auto algorithm_check = enum_validator<AlgorithmId>(parse_algorithm, algorithm_names);
  const auto variant_check = enum_validator<cli::VariantSelection>(cli::parse_variant, "both|paper|exact");

  cli::RunSpec run_spec;
  auto* run_cmd = app.add_subcommand("run", "Simulate one allgather and print its CSV row");
  run_cmd->add_option("--algorithm", algorithm, "Algorithm name")->check(algorithm_check);
  run_cmd->add_option("--p", run_spec.p, "Process count")->required();
  run_cmd->add_option("--region-size", run_spec.region_size, "Processes per region");
  run_cmd->add_option("--values-per-rank", run_spec.values_per_rank, "Values initially held by each rank");
  run_cmd->add_option("--value-bytes", run_spec.value_bytes, "Bytes per value");
  run_cmd->add_option("--params", run_spec.params_file, "Cost parameter file");
  run_cmd->add_option("--output", run_spec.output, "Output CSV path (default stdout)");
  run_cmd->add_option("--events", run_spec.events_file, "Write the message event log as CSV");
  run_cmd->add_option("--variant", variant, "Model columns to fill")->check(variant_check);

  cli::SweepSpec sweep_spec;
  std::vector<std::string> sweep_algorithms;
  std::string preset = "none";
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate a grid of topologies and print CSV rows");
  sweep_cmd->add_option("--preset", preset, "Grid preset")
      ->check(enum_validator<cli::SweepPreset>(cli::parse_preset, "none|node-sweep|size-sweep|grid"));
  sweep_cmd->add_option("--algorithm", sweep_algorithms, "Algorithms (comma separated)")
      ->delimiter(',')
      ->check(algorithm_check);
  sweep_cmd->add_option("--p", sweep_spec.ps, "Process counts (comma separated)")->delimiter(',');
  sweep_cmd->add_option("--regions", sweep_spec.regions, "Region counts, used when --p is absent")->delimiter(',');
  sweep_cmd->add_option("--region-size", sweep_spec.region_sizes, "Processes per region (comma separated)")
      ->delimiter(',');
  sweep_cmd->add_option("--values-per-rank", sweep_spec.values_per_rank, "Values per rank (comma separated)")
      ->delimiter(',');
  sweep_cmd->add_option("--value-bytes", sweep_spec.value_bytes, "Bytes per value");
  sweep_cmd->add_option("--params", sweep_spec.params_file, "Cost parameter file");
  sweep_cmd->add_option("--output", sweep_spec.output, "Output CSV path (default stdout)");
  sweep_cmd->add_option("--plot-script", sweep_spec.plot_script, "Also write a gnuplot script");
  sweep_cmd->add_option("--variant", variant, "Model columns to fill")->check(variant_check);
  sweep_cmd->add_option("--simulate-limit", sweep_spec.simulate_limit,
                        "Largest p that is simulated; larger points use closed-form counts");
  sweep_cmd->add_option("--jobs", sweep_spec.jobs, "Worker threads");

  auto* selftest_cmd = app.add_subcommand("selftest", "Check every algorithm against the oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kInvalidInput;
  }

  if (*run_cmd) {
    run_spec.algorithm = *parse_algorithm(algorithm);
    run_spec.variant = *cli::parse_variant(variant);
    return cli::cmd_run(run_spec, std::cout, std::cerr);
  }
  if (*sweep_cmd) {
    // Explicit grid flags override the preset's values.
    const auto explicit_ps = sweep_spec.ps;
    const auto explicit_regions = sweep_spec.regions;
    const bool has_sizes = sweep_cmd->count("--region-size") > 0;
    const bool has_ns = sweep_cmd->count("--values-per-rank") > 0;
    const auto sizes = sweep_spec.region_sizes;
    const auto ns = sweep_spec.values_per_rank;
    sweep_spec.apply(*cli::parse_preset(preset));
    if (!explicit_ps.empty()) sweep_spec.ps = explicit_ps;
    if (!explicit_regions.empty()) {
      sweep_spec.regions = explicit_regions;
      if (explicit_ps.empty()) sweep_spec.ps.clear();
    }
    if (has_sizes) sweep_spec.region_sizes = sizes;
    if (has_ns) sweep_spec.values_per_rank = ns;
    if (!sweep_algorithms.empty()) {
      sweep_spec.algorithms.clear();
      for (const auto& a : sweep_algorithms) sweep_spec.algorithms.push_back(*parse_algorithm(a));
    }
    sweep_spec.variant = *cli::parse_variant(variant);
    return cli::cmd_sweep(sweep_spec, std::cout, std::cerr);
  }
  if (*selftest_cmd) return cli::cmd_selftest(std::cout);
  return cli::kInvalidInput;
}
