#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lagather/collectives.hpp"
#include "lagather/core.hpp"
#include "lagather/costmodel.hpp"
#include "lagather/counts.hpp"
#include "lagather/fabric.hpp"
#include "lagather/verify.hpp"

namespace lagather::cli {

enum ExitCode : int { kOk = 0, kSelftestFailed = 1, kInvalidInput = 2, kIoFailure = 3 };

enum class VariantSelection { Both, Paper, Exact };

inline std::optional<VariantSelection> parse_variant(std::string_view s) {
  if (s == "both") return VariantSelection::Both;
  if (s == "paper") return VariantSelection::Paper;
  if (s == "exact") return VariantSelection::Exact;
  return std::nullopt;
}

struct RunSpec {
  AlgorithmId algorithm = AlgorithmId::Bruck;
  int p = 1;
  int region_size = 1;
  int values_per_rank = 1;
  int value_bytes = 4;
  std::optional<std::string> params_file;
  std::optional<std::string> output;       // stdout when empty
  std::optional<std::string> events_file;  // event log export
  VariantSelection variant = VariantSelection::Both;
};

inline constexpr const char* kRowHeader =
    "algorithm,p,region_size,values_per_rank,value_bytes,max_msgs_local,max_msgs_nonlocal,max_bytes_local,"
    "max_bytes_nonlocal,model_paper_s,model_exact_s";

namespace detail {

inline std::string format_seconds(std::optional<double> v) {
  if (!v) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return ec == std::errc{} ? std::string(buf, ptr) : "NA";
}

struct Row {
  AlgorithmId algorithm;
  Topology topo;
  std::optional<RankTally> max;  // NA when the algorithm cannot run here
  std::optional<double> paper;
  std::optional<double> exact;
};

inline std::string format_row(const Row& r) {
  std::ostringstream os;
  os << to_string(r.algorithm) << ',' << r.topo.p() << ',' << r.topo.region_size() << ',' << r.topo.values_per_rank()
     << ',' << r.topo.value_width() << ',';
  if (r.max)
    os << r.max->msgs_local << ',' << r.max->msgs_nonlocal << ',' << r.max->bytes_local << ',' << r.max->bytes_nonlocal;
  else
    os << "NA,NA,NA,NA";
  os << ',' << format_seconds(r.paper) << ',' << format_seconds(r.exact);
  return os.str();
}

inline std::optional<double> try_model(AlgorithmId alg, const Topology& topo, const CostParams& params,
                                       ModelVariant v, VariantSelection sel, std::string* error) {
  if ((v == ModelVariant::Paper && sel == VariantSelection::Exact) ||
      (v == ModelVariant::Exact && sel == VariantSelection::Paper))
    return std::nullopt;
  try {
    return model_cost(alg, topo, params, v);
  } catch (const std::invalid_argument& e) {
    if (error && error->empty()) *error = e.what();
    return std::nullopt;
  }
}

// Loads params, reporting failures on `err`. Returns the exit code on failure.
inline std::optional<int> load_params(const std::optional<std::string>& path, CostParams& out, std::ostream& err) {
  if (!path) {
    out = default_cost_params();
    return std::nullopt;
  }
  try {
    out = load_cost_params(*path);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  for (const auto& w : locality_warnings(out)) err << "warning: " << w << '\n';
  return std::nullopt;
}

// Writes to `path` or falls back to `fallback`.
inline int emit(const std::optional<std::string>& path, const std::string& text, std::ostream& fallback,
                std::ostream& err) {
  if (!path) {
    fallback << text;
    return kOk;
  }
  std::ofstream f(*path, std::ios::binary);
  if (!f || !(f << text)) {
    err << "error: cannot write " << *path << '\n';
    return kIoFailure;
  }
  return kOk;
}

}  // namespace detail

inline int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  CostParams params;
  if (auto code = detail::load_params(spec.params_file, params, err)) return *code;

  std::optional<Topology> topo;
  try {
    topo.emplace(spec.p, spec.region_size, spec.value_bytes, spec.values_per_rank);
  } catch (const std::invalid_argument& e) {
    err << "error: invalid topology: " << e.what() << '\n';
    return kInvalidInput;
  }

  RunResult res;
  try {
    res = run(spec.algorithm, *topo);
  } catch (const std::invalid_argument& e) {
    err << "error: invalid topology: " << e.what() << '\n';
    return kInvalidInput;
  }

  detail::Row row{spec.algorithm, *topo, res.tally.max, {}, {}};
  row.paper = detail::try_model(spec.algorithm, *topo, params, ModelVariant::Paper, spec.variant, nullptr);
  row.exact = detail::try_model(spec.algorithm, *topo, params, ModelVariant::Exact, spec.variant, nullptr);

  if (spec.events_file) {
    std::ostringstream ev;
    write_event_csv(ev, res.events);
    if (int code = detail::emit(spec.events_file, ev.str(), out, err)) return code;
  }
  return detail::emit(spec.output, std::string(kRowHeader) + '\n' + detail::format_row(row) + '\n', out, err);
}

enum class SweepPreset { None, NodeSweep, SizeSweep, Grid };

inline std::optional<SweepPreset> parse_preset(std::string_view s) {
  if (s == "none") return SweepPreset::None;
  if (s == "node-sweep") return SweepPreset::NodeSweep;
  if (s == "size-sweep") return SweepPreset::SizeSweep;
  if (s == "grid") return SweepPreset::Grid;
  return std::nullopt;
}

// A sweep grid. Points come from `ps` (process counts) or, when empty,
// `regions` (node counts) times each region size.
struct SweepSpec {
  std::vector<AlgorithmId> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<int> ps;
  std::vector<int> regions;
  std::vector<int> region_sizes{1};
  std::vector<int> values_per_rank{1};
  int value_bytes = 4;
  std::optional<std::string> params_file;
  std::optional<std::string> output;
  std::optional<std::string> plot_script;
  VariantSelection variant = VariantSelection::Both;
  int simulate_limit = 1024;  // larger p take their counts from the closed forms
  int jobs = 1;

  void apply(SweepPreset preset) {
    switch (preset) {
      case SweepPreset::None: return;
      case SweepPreset::NodeSweep:
        algorithms = {AlgorithmId::Bruck, AlgorithmId::LocalityBruck};
        ps.clear();
        regions = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
        region_sizes = {4, 8, 16};
        values_per_rank = {1};
        return;
      case SweepPreset::SizeSweep:
        algorithms = {AlgorithmId::Bruck, AlgorithmId::LocalityBruck};
        ps.clear();
        regions = {1024};
        region_sizes = {16};
        values_per_rank.clear();
        for (int n = 1; n <= 16384; n *= 2) values_per_rank.push_back(n);  // 4 B .. 64 KiB per rank
        return;
      case SweepPreset::Grid:
        algorithms = {kAllAlgorithms.begin(), kAllAlgorithms.end()};
        ps = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
        regions.clear();
        region_sizes = {1, 2, 4, 8, 16};
        values_per_rank = {1, 3};
        return;
    }
  }
};

namespace detail {

struct SweepPoint {
  AlgorithmId algorithm;
  Topology topo;
};

inline std::vector<SweepPoint> sweep_points(const SweepSpec& spec) {
  std::vector<SweepPoint> out;
  auto add = [&](int p, int pl) {
    if (pl < 1 || p < pl || p % pl != 0) return;
    for (int n : spec.values_per_rank)
      for (AlgorithmId alg : spec.algorithms) out.push_back({alg, Topology(p, pl, spec.value_bytes, n)});
  };
  if (!spec.ps.empty()) {
    for (int p : spec.ps)
      for (int pl : spec.region_sizes) add(p, pl);
  } else {
    for (int r : spec.regions)
      for (int pl : spec.region_sizes) add(r * pl, pl);
  }
  return out;
}

inline Row evaluate(const SweepPoint& pt, const SweepSpec& spec, const CostParams& params, std::string& error) {
  Row row{pt.algorithm, pt.topo, std::nullopt, {}, {}};
  if (supports(pt.algorithm, pt.topo)) {
    if (pt.topo.p() <= spec.simulate_limit) {
      row.max = run(pt.algorithm, pt.topo).tally.max;
    } else {
      const CountPrediction c = counts_for(pt.algorithm, pt.topo);
      const std::int64_t w = pt.topo.value_width();
      row.max = RankTally{c.max_msgs_local, c.max_msgs_nonlocal, c.max_values_local * w, c.max_values_nonlocal * w};
    }
  } else {
    error = std::string(to_string(pt.algorithm)) + " does not support " + describe(pt.topo);
  }
  row.paper = try_model(pt.algorithm, pt.topo, params, ModelVariant::Paper, spec.variant, &error);
  row.exact = try_model(pt.algorithm, pt.topo, params, ModelVariant::Exact, spec.variant, &error);
  return row;
}

inline std::string plot_script(const SweepSpec& spec, const std::string& csv_path) {
  std::ostringstream os;
  const bool by_size = spec.regions.size() == 1 && spec.values_per_rank.size() > 1;
  os << "# gnuplot script for " << csv_path << "\n"
     << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set logscale xy\n"
     << "set ylabel 'modeled cost (model-relative seconds)'\n"
     << (by_size ? "set xlabel 'bytes per rank'\n" : "set xlabel 'regions'\n")
     << "set terminal pngcairo size 900,600\n"
     << "set output '" << csv_path << ".png'\n"
     << "x(p, pl, n, w) = " << (by_size ? "n * w" : "p / pl") << "\n"
     << "plot '" << csv_path << "' using (strcol(1) eq 'bruck' ? x($2,$3,$4,$5) : 1/0):10 with linespoints title 'bruck', \\\n"
     << "     '' using (strcol(1) eq 'locality-bruck' ? x($2,$3,$4,$5) : 1/0):10 with linespoints dashtype 2 title "
        "'locality-bruck'\n";
  return os.str();
}

}  // namespace detail

inline int cmd_sweep(const SweepSpec& spec, std::ostream& out, std::ostream& err) {
  CostParams params;
  if (auto code = detail::load_params(spec.params_file, params, err)) return *code;
  if (spec.value_bytes < 1) {
    err << "error: value bytes must be >= 1\n";
    return kInvalidInput;
  }

  const auto points = detail::sweep_points(spec);
  if (points.empty()) {
    err << "error: sweep grid is empty\n";
    return kInvalidInput;
  }

  std::vector<std::string> rows(points.size());
  std::vector<std::string> errors(points.size());
  const auto jobs = static_cast<std::size_t>(std::max(1, spec.jobs));
  auto worker = [&](std::size_t first) {
    for (std::size_t i = first; i < points.size(); i += jobs)
      rows[i] = detail::format_row(detail::evaluate(points[i], spec, params, errors[i]));
  };
  if (jobs == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker, j);
  }

  std::string text = std::string(kRowHeader) + '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    text += rows[i] + '\n';
    if (!errors[i].empty()) err << "note: row " << i + 1 << ": " << errors[i] << '\n';
  }
  if (int code = detail::emit(spec.output, text, out, err)) return code;
  if (spec.plot_script) {
    if (int code = detail::emit(spec.plot_script, detail::plot_script(spec, spec.output.value_or("sweep.csv")), out,
                                err))
      return code;
  }
  return kOk;
}

// Oracle equivalence, closed-form counts and Exact-model consistency over the
// standard grid, plus the two worked fixtures.
inline int cmd_selftest(std::ostream& out) {
  const CostParams params = default_cost_params();
  struct Property {
    std::string name;
    std::vector<std::string> failures;
  };
  Property oracle{"oracle-equivalence", {}};
  Property counts{"count-equality", {}};
  Property critical{"critical-rank-profile", {}};
  Property exact{"exact-model-consistency", {}};
  Property fixtures{"worked-fixtures", {}};

  for (const auto& point : standard_grid()) {
    const PointReport rep = check_point(point, params);
    if (!rep.oracle) oracle.failures.push_back(describe(point));
    if (!rep.counts) counts.failures.push_back(describe(point));
    if (!rep.critical) critical.failures.push_back(describe(point));
    if (!rep.exact) exact.failures.push_back(describe(point));
  }

  // 16 ranks in regions of 4: Bruck rank 0 sends 4 non-local messages with 15
  // values; locality-aware ranks send one 4-value message, local id 0 none.
  {
    const Topology t(16, 4);
    const auto bruck = run(AlgorithmId::Bruck, t).tally.per_rank;
    if (bruck[0].msgs_nonlocal != 4 || bruck[0].bytes_nonlocal != 60)
      fixtures.failures.push_back("bruck " + describe(t));
    const auto loc = run(AlgorithmId::LocalityBruck, t).tally.per_rank;
    for (Rank k = 0; k < 16; ++k) {
      const bool leader = t.local_id(k) == 0;
      const auto& rt = loc[static_cast<std::size_t>(k)];
      if (rt.msgs_nonlocal != (leader ? 0 : 1) || rt.bytes_nonlocal != (leader ? 0 : 16))
        fixtures.failures.push_back("locality-bruck " + describe(t) + " rank " + std::to_string(k));
    }
  }
  // 64 ranks in regions of 4: two non-local rounds, distances j*4 then j*16.
  {
    const Topology t(64, 4);
    const auto res = run(AlgorithmId::LocalityBruck, t);
    std::vector<int> distances;
    for (const auto& e : res.events)
      if (e.src == 1 && e.locality == Locality::NonLocal) distances.push_back((e.src - e.dst + 64) % 64);
    if (distances != std::vector<int>{4, 16} || res.tally.per_rank[1].bytes_nonlocal != 80)
      fixtures.failures.push_back("locality-bruck " + describe(t));
  }

  int failed = 0;
  for (const Property* prop : {&oracle, &counts, &critical, &exact, &fixtures}) {
    out << (prop->failures.empty() ? "PASS " : "FAIL ") << prop->name << '\n';
    for (const auto& f : prop->failures) out << "  " << f << '\n';
    failed += !prop->failures.empty();
  }
  return failed == 0 ? kOk : kSelftestFailed;
}

}  // namespace lagather::cli
