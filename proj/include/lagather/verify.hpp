#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "lagather/collectives.hpp"
#include "lagather/core.hpp"
#include "lagather/costmodel.hpp"
#include "lagather/counts.hpp"

namespace lagather {

struct GridPoint {
  AlgorithmId algorithm;
  Topology topo;
};

// Every (algorithm, topology) combination the algorithms support, ordered by
// p, region size, values per rank, then algorithm.
inline std::vector<GridPoint> standard_grid(std::initializer_list<int> ps = {2, 4, 8, 16, 32, 64, 128, 256, 512, 1024},
                                            std::initializer_list<int> region_sizes = {1, 2, 4, 8, 16},
                                            std::initializer_list<int> ns = {1, 3}) {
  std::vector<GridPoint> out;
  for (int p : ps)
    for (int pl : region_sizes) {
      if (pl > p || p % pl != 0) continue;
      for (int n : ns) {
        const Topology topo(p, pl, 4, n);
        for (AlgorithmId alg : kAllAlgorithms)
          if (supports(alg, topo)) out.push_back({alg, topo});
      }
    }
  return out;
}

inline bool relative_close(double a, double b, double rel) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 || std::abs(a - b) <= rel * scale;
}

struct PointReport {
  bool oracle = true;    // every rank equals the concatenation oracle
  bool counts = true;    // tally maxima equal the closed forms
  bool critical = true;  // critical rank's tally and message sizes match the prediction
  bool exact = true;     // Exact model equals the locality model on the simulated critical rank
  std::vector<std::string> notes;

  bool ok() const noexcept { return oracle && counts && critical && exact; }
};

inline std::string describe(const GridPoint& g) {
  return std::string(to_string(g.algorithm)) + " " + describe(g.topo);
}

inline PointReport check_point(const GridPoint& point, const CostParams& params, double exact_rel_tol = 1e-12) {
  PointReport rep;
  const Topology& topo = point.topo;
  const RunResult res = run(point.algorithm, topo);

  const auto initial = initial_buffers(topo);
  const Buffer expected = canonical_gather_oracle(initial, topo);
  for (Rank k = 0; k < topo.p(); ++k) {
    if (!(res.buffers[static_cast<std::size_t>(k)] == expected)) {
      rep.oracle = false;
      rep.notes.push_back("rank " + std::to_string(k) + " differs from the oracle");
      break;
    }
  }

  const CountPrediction pred = counts_for(point.algorithm, topo);
  const std::int64_t w = topo.value_width();
  const RankTally& mx = res.tally.max;
  if (mx.msgs_local != pred.max_msgs_local || mx.msgs_nonlocal != pred.max_msgs_nonlocal ||
      mx.bytes_local != pred.max_values_local * w || mx.bytes_nonlocal != pred.max_values_nonlocal * w) {
    rep.counts = false;
    rep.notes.push_back("tally maxima differ from closed forms");
  }

  const Rank crit = res.tally.critical_rank();
  const RankTally& ct = res.tally.per_rank[static_cast<std::size_t>(crit)];
  const RankCounts want = pred.critical;
  const auto profile = critical_profile(point.algorithm, topo);
  std::vector<std::int64_t> simulated_sizes;
  std::vector<std::int64_t> predicted_sizes;
  for (const auto& e : res.events)
    if (e.src == crit) simulated_sizes.push_back(e.locality == Locality::Local ? e.bytes : -e.bytes);
  for (const auto& m : profile) predicted_sizes.push_back(m.locality == Locality::Local ? m.values * w : -m.values * w);
  if (crit != pred.critical_rank || ct.msgs_local != want.msgs_local || ct.msgs_nonlocal != want.msgs_nonlocal ||
      ct.bytes_local != want.values_local * w || ct.bytes_nonlocal != want.values_nonlocal * w ||
      simulated_sizes != predicted_sizes || profile_totals(profile) != want) {
    rep.critical = false;
    rep.notes.push_back("critical rank " + std::to_string(crit) + " differs from prediction");
  }

  const auto model = model_cost(point.algorithm, topo, params, ModelVariant::Exact);
  const double simulated = locality_cost(model_input_for_rank(res.events, crit), params);
  if (!model || !relative_close(*model, simulated, exact_rel_tol)) {
    rep.exact = false;
    rep.notes.push_back("exact model differs from simulated critical-rank cost");
  }
  return rep;
}

}  // namespace lagather
