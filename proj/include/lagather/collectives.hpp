#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lagather/core.hpp"
#include "lagather/fabric.hpp"

namespace lagather {

enum class AlgorithmId { Bruck, LocalityBruck, Ring, Hierarchical };

inline constexpr std::array<AlgorithmId, 4> kAllAlgorithms = {AlgorithmId::Bruck, AlgorithmId::LocalityBruck,
                                                              AlgorithmId::Ring, AlgorithmId::Hierarchical};

inline std::string_view to_string(AlgorithmId a) noexcept {
  switch (a) {
    case AlgorithmId::Bruck: return "bruck";
    case AlgorithmId::LocalityBruck: return "locality-bruck";
    case AlgorithmId::Ring: return "ring";
    case AlgorithmId::Hierarchical: return "hierarchical";
  }
  return "?";
}

inline std::optional<AlgorithmId> parse_algorithm(std::string_view name) noexcept {
  for (auto a : kAllAlgorithms)
    if (to_string(a) == name) return a;
  return std::nullopt;
}

// How a rank's gathered blocks are put into origin order once the schedule
// has run.
enum class FinalOrder { RotateDown, ByOrigin };

struct CollectivePlan {
  Schedule steps;
  FinalOrder final_order = FinalOrder::ByOrigin;
};

namespace detail {

// Origins base + ((offset + t) mod group_len) for t in [0, len), as ranges
// that are contiguous modulo p. group_len <= p.
inline std::vector<BlockRange> group_window(Rank base, int group_len, int offset, int len, int p) {
  offset %= group_len;
  if (group_len == p || offset + len <= group_len) return {BlockRange{(base + offset) % p, len}};
  const int head = group_len - offset;
  return {BlockRange{(base + offset) % p, head}, BlockRange{base % p, len - head}};
}

inline StepPlan& new_step(Schedule& steps, std::string label, const Topology& topo) {
  return steps.emplace_back(std::move(label), topo.p());
}

inline void post(StepPlan& step, Rank src, Rank dst, std::vector<BlockRange> payload, const Topology& topo) {
  step.transfer(src, dst, std::move(payload), topo.values_per_rank());
}

// Bruck allgather inside every region at once, treating each rank's `chunk`
// blocks as one unit. Rank with local id j initially contributes the chunk at
// group offset j*chunk of the region group starting at region_base(rank).
template <typename BaseFn>
void regional_bruck(Schedule& steps, const std::string& label, int chunk, BaseFn region_base, const Topology& topo) {
  const int pl = topo.region_size();
  for (int dist = 1; dist < pl; dist *= 2) {
    StepPlan& step = new_step(steps, label, topo);
    for (Rank g = 0; g < topo.p(); ++g) {
      const int j = topo.local_id(g);
      const Rank region_start = g - j;
      const Rank dst = region_start + ((j - dist) % pl + pl) % pl;
      post(step, g, dst, group_window(region_base(g), pl * chunk, j * chunk, dist * chunk, topo.p()), topo);
    }
  }
}

}  // namespace detail

// Standard Bruck: log2(p) steps; at step i rank k sends its first n*2^i values
// to k - 2^i and appends n*2^i values from k + 2^i (mod p).
inline CollectivePlan bruck_schedule(const Topology& topo) {
  if (!is_power_of_two(static_cast<std::size_t>(topo.p())))
    throw UnsupportedTopology("bruck requires a power-of-2 process count, got p=" + std::to_string(topo.p()));
  CollectivePlan plan{{}, FinalOrder::RotateDown};
  const int p = topo.p();
  for (int dist = 1, i = 0; dist < p; dist *= 2, ++i) {
    StepPlan& step = detail::new_step(plan.steps, "bruck-" + std::to_string(i), topo);
    for (Rank k = 0; k < p; ++k)
      detail::post(step, k, ((k - dist) % p + p) % p, {BlockRange{k, dist}}, topo);
  }
  return plan;
}

// Cyclic right shift by `rank` blocks: a buffer holding all p blocks in cyclic
// order starting at `rank` comes back in origin order.
inline Buffer rotate_down(const Buffer& buffer, Rank rank, const Topology& topo) {
  const auto p = static_cast<std::size_t>(topo.p());
  if (!topo.valid_rank(rank)) throw std::invalid_argument("rank out of range");
  if (buffer.block_count() != p) throw PreconditionError("rotate_down needs a full buffer");
  for (std::size_t pos = 0; pos < p; ++pos)
    if (buffer.origin_at(pos) != static_cast<Rank>((static_cast<std::size_t>(rank) + pos) % p))
      throw PreconditionError("buffer is not in cyclic order starting at rank " + std::to_string(rank));

  std::vector<Value> values(buffer.values().begin(), buffer.values().end());
  const auto shift = static_cast<std::ptrdiff_t>(rank) * buffer.block_size();
  std::ranges::rotate(values, values.end() - shift);

  Buffer out(buffer.block_size());
  for (std::size_t off = 0; off < values.size(); off += static_cast<std::size_t>(buffer.block_size()))
    out.append(std::span<const Value>(values).subspan(off, static_cast<std::size_t>(buffer.block_size())));
  return out;
}

// Number of non-local rounds of the locality-aware Bruck (log_{p_l}(r)), or
// UnsupportedTopology when r is not an integer power of p_l.
inline int locality_rounds(const Topology& topo) {
  require_power_of_two_layout(topo, "locality-bruck");
  const int k = integer_log(static_cast<std::size_t>(topo.region_count()), static_cast<std::size_t>(topo.region_size()));
  if (k < 0)
    throw UnsupportedTopology("locality-bruck requires the region count to be a power of the region size, got r=" +
                              std::to_string(topo.region_count()) + " region_size=" +
                              std::to_string(topo.region_size()) +
                              " (regions counts between powers need idle ranks and are not implemented)");
  return k;
}

// Locality-aware Bruck:
//   local gather:   Bruck inside each region over single blocks.
//   round i:        local id j != 0 sends all n*p_l^(i+1) held values to
//                   g - j*p_l^(i+1) and receives as much from g + j*p_l^(i+1);
//                   local id 0 stays idle.
//                   Then a Bruck inside each region over the chunks received
//                   in round i, local id 0 contributing what it already held.
inline CollectivePlan locality_bruck_schedule(const Topology& topo) {
  const int rounds = locality_rounds(topo);
  const int p = topo.p();
  const int pl = topo.region_size();
  CollectivePlan plan{{}, FinalOrder::ByOrigin};

  auto region_start = [&](Rank g) { return g - topo.local_id(g); };
  detail::regional_bruck(plan.steps, "local-gather-0", 1, region_start, topo);

  int held = pl;  // blocks held per rank entering round i: p_l^(i+1)
  for (int i = 0; i < rounds; ++i) {
    StepPlan& step = detail::new_step(plan.steps, "nonlocal-" + std::to_string(i), topo);
    for (Rank g = 0; g < p; ++g) {
      const int j = topo.local_id(g);
      if (j == 0) continue;
      const Rank dst = ((g - j * held) % p + p) % p;
      detail::post(step, g, dst, {BlockRange{region_start(g), held}}, topo);
    }
    detail::regional_bruck(plan.steps, "local-gather-" + std::to_string(i + 1), held, region_start, topo);
    held *= pl;
  }
  return plan;
}

// Ring: p-1 steps, each rank forwarding the block it received last to k-1.
inline CollectivePlan ring_schedule(const Topology& topo) {
  CollectivePlan plan{{}, FinalOrder::ByOrigin};
  const int p = topo.p();
  for (int i = 0; i + 1 < p; ++i) {
    StepPlan& step = detail::new_step(plan.steps, "ring", topo);
    for (Rank k = 0; k < p; ++k) detail::post(step, k, (k - 1 + p) % p, {BlockRange{(k + i) % p, 1}}, topo);
  }
  return plan;
}

// Single-leader baseline: flat gather to local id 0, Bruck among the leaders
// on whole-region blocks, flat broadcast of the full array back to the region.
inline CollectivePlan hierarchical_schedule(const Topology& topo) {
  require_power_of_two_layout(topo, "hierarchical");
  CollectivePlan plan{{}, FinalOrder::ByOrigin};
  const int p = topo.p();
  const int pl = topo.region_size();
  const int r = topo.region_count();

  for (int t = 1; t < pl; ++t) {
    StepPlan& step = detail::new_step(plan.steps, "leader-gather", topo);
    for (int region = 0; region < r; ++region)
      detail::post(step, region * pl + t, region * pl, {BlockRange{region * pl + t, 1}}, topo);
  }
  for (int dist = 1, i = 0; dist < r; dist *= 2, ++i) {
    StepPlan& step = detail::new_step(plan.steps, "leader-bruck-" + std::to_string(i), topo);
    for (int region = 0; region < r; ++region) {
      const Rank dst = ((region - dist) % r + r) % r * pl;
      detail::post(step, region * pl, dst, {BlockRange{region * pl, dist * pl}}, topo);
    }
  }
  for (int t = 1; t < pl; ++t) {
    StepPlan& step = detail::new_step(plan.steps, "leader-bcast", topo);
    for (int region = 0; region < r; ++region)
      detail::post(step, region * pl, region * pl + t, {BlockRange{region * pl, p}}, topo);
  }
  return plan;
}

inline CollectivePlan schedule_for(AlgorithmId alg, const Topology& topo) {
  switch (alg) {
    case AlgorithmId::Bruck: return bruck_schedule(topo);
    case AlgorithmId::LocalityBruck: return locality_bruck_schedule(topo);
    case AlgorithmId::Ring: return ring_schedule(topo);
    case AlgorithmId::Hierarchical: return hierarchical_schedule(topo);
  }
  throw std::invalid_argument("unknown algorithm");
}

// True when `alg` can run on `topo`.
inline bool supports(AlgorithmId alg, const Topology& topo) {
  try {
    switch (alg) {
      case AlgorithmId::Bruck: return is_power_of_two(static_cast<std::size_t>(topo.p()));
      case AlgorithmId::LocalityBruck: locality_rounds(topo); return true;
      case AlgorithmId::Ring: return true;
      case AlgorithmId::Hierarchical: require_power_of_two_layout(topo, "hierarchical"); return true;
    }
  } catch (const UnsupportedTopology&) {
  }
  return false;
}

struct RunResult {
  std::vector<Buffer> buffers;  // origin order
  Tally tally;
  std::vector<MessageEvent> events;
};

inline RunResult run(AlgorithmId alg, const Topology& topo) {
  const CollectivePlan plan = schedule_for(alg, topo);
  Execution exec = execute(plan.steps, initial_buffers(topo), topo);

  RunResult out;
  out.buffers.reserve(exec.buffers.size());
  for (Rank k = 0; k < topo.p(); ++k) {
    const Buffer& b = exec.buffers[static_cast<std::size_t>(k)];
    out.buffers.push_back(plan.final_order == FinalOrder::RotateDown ? rotate_down(b, k, topo) : b.canonicalized());
  }
  out.tally = aggregate(exec.events, topo);
  out.events = std::move(exec.events);
  return out;
}

}  // namespace lagather
