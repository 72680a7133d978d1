#pragma once

#include <cstdint>
#include <vector>

#include "lagather/collectives.hpp"
#include "lagather/core.hpp"

namespace lagather {

struct RankCounts {
  std::int64_t msgs_local = 0;
  std::int64_t msgs_nonlocal = 0;
  std::int64_t values_local = 0;
  std::int64_t values_nonlocal = 0;

  friend bool operator==(const RankCounts&, const RankCounts&) = default;
};

// Closed-form message and volume counts. The max_* fields are field-wise
// maxima over ranks, so they line up with Tally::max. `critical` is the rank
// that Tally::critical_rank() selects (heaviest non-local load first).
struct CountPrediction {
  std::int64_t max_msgs_local = 0;
  std::int64_t max_msgs_nonlocal = 0;
  std::int64_t max_values_local = 0;
  std::int64_t max_values_nonlocal = 0;
  Rank critical_rank = 0;
  RankCounts critical;

  friend bool operator==(const CountPrediction&, const CountPrediction&) = default;
};

// One message sent by the critical rank, in send order.
struct MessageShape {
  std::int64_t values = 0;
  Locality locality = Locality::Local;

  friend bool operator==(const MessageShape&, const MessageShape&) = default;
};

namespace detail {

inline std::int64_t ipow(std::int64_t base, int exp) {
  std::int64_t out = 1;
  while (exp-- > 0) out *= base;
  return out;
}

}  // namespace detail

inline RankCounts profile_totals(const std::vector<MessageShape>& profile) {
  RankCounts c;
  for (const auto& m : profile) {
    if (m.locality == Locality::Local) {
      ++c.msgs_local;
      c.values_local += m.values;
    } else {
      ++c.msgs_nonlocal;
      c.values_nonlocal += m.values;
    }
  }
  return c;
}

// Standard Bruck. Rank 0 sends all log2(p) messages across regions (when
// there is more than one region) for n*(p-1) values in total; a rank with
// local id j sends its first floor(log2 j)+1 messages inside its region.
// Total volume per rank is n*(p-1) values, not p-1 blocks.
inline CountPrediction bruck_counts(const Topology& topo) {
  if (!is_power_of_two(static_cast<std::size_t>(topo.p())))
    throw UnsupportedTopology("bruck requires a power-of-2 process count, got p=" + std::to_string(topo.p()));
  const std::int64_t n = topo.values_per_rank();
  const std::int64_t p = topo.p();
  const int steps = log2_exact(static_cast<std::size_t>(p));
  const bool multi_region = topo.region_count() > 1;

  CountPrediction c;
  if (multi_region) {
    c.max_msgs_nonlocal = steps;
    c.max_values_nonlocal = n * (p - 1);
    c.max_msgs_local = log2_exact(static_cast<std::size_t>(topo.region_size()));
    c.max_values_local = n * (topo.region_size() - 1);
    c.critical = {0, steps, 0, n * (p - 1)};
  } else {
    c.max_msgs_local = steps;
    c.max_values_local = n * (p - 1);
    c.critical = {steps, 0, n * (p - 1), 0};
  }
  return c;
}

inline std::vector<MessageShape> bruck_profile(const Topology& topo) {
  bruck_counts(topo);
  const auto where = topo.region_count() > 1 ? Locality::NonLocal : Locality::Local;
  std::vector<MessageShape> out;
  for (std::int64_t blocks = 1; blocks < topo.p(); blocks *= 2) out.push_back({blocks * topo.values_per_rank(), where});
  return out;
}

// Locality-aware Bruck with k = log_{p_l}(r) rounds. Every rank sends
// log2(p_l)*(k+1) local messages; every rank except local id 0 sends k
// non-local messages carrying n*p_l^(i+1) values in round i.
inline CountPrediction locality_counts(const Topology& topo) {
  const int k = locality_rounds(topo);
  const std::int64_t n = topo.values_per_rank();
  const std::int64_t pl = topo.region_size();
  const int local_steps = log2_exact(static_cast<std::size_t>(pl));

  std::int64_t nonlocal_values = 0;
  std::int64_t local_values = n * (pl - 1);
  for (int i = 0; i < k; ++i) {
    nonlocal_values += n * detail::ipow(pl, i + 1);
    local_values += n * detail::ipow(pl, i + 1) * (pl - 1);
  }

  CountPrediction c;
  c.max_msgs_nonlocal = k;
  c.max_values_nonlocal = nonlocal_values;
  c.max_msgs_local = static_cast<std::int64_t>(local_steps) * (k + 1);
  c.max_values_local = local_values;
  c.critical_rank = k > 0 ? 1 : 0;
  c.critical = {c.max_msgs_local, c.max_msgs_nonlocal, c.max_values_local, c.max_values_nonlocal};
  return c;
}

inline std::vector<MessageShape> locality_profile(const Topology& topo) {
  const int k = locality_rounds(topo);
  const std::int64_t n = topo.values_per_rank();
  const std::int64_t pl = topo.region_size();
  std::vector<MessageShape> out;
  auto regional = [&](std::int64_t chunk) {
    for (std::int64_t d = 1; d < pl; d *= 2) out.push_back({n * chunk * d, Locality::Local});
  };
  regional(1);
  for (int i = 0; i < k; ++i) {
    const std::int64_t held = detail::ipow(pl, i + 1);
    out.push_back({n * held, Locality::NonLocal});
    regional(held);
  }
  return out;
}

// Ring: every rank sends p-1 single-block messages to its left neighbour,
// which is in another region exactly for the first rank of each region.
inline CountPrediction ring_counts(const Topology& topo) {
  const std::int64_t n = topo.values_per_rank();
  const std::int64_t msgs = topo.p() - 1;
  CountPrediction c;
  if (topo.region_count() > 1) {
    c.max_msgs_nonlocal = msgs;
    c.max_values_nonlocal = n * msgs;
    c.critical = {0, msgs, 0, n * msgs};
  } else {
    c.critical = {msgs, 0, n * msgs, 0};
  }
  if (topo.region_size() > 1) {
    c.max_msgs_local = msgs;
    c.max_values_local = n * msgs;
  }
  return c;
}

inline std::vector<MessageShape> ring_profile(const Topology& topo) {
  const auto where = topo.region_count() > 1 ? Locality::NonLocal : Locality::Local;
  return std::vector<MessageShape>(static_cast<std::size_t>(topo.p() - 1), MessageShape{topo.values_per_rank(), where});
}

// Single-leader hierarchy: each leader takes log2(r) non-local Bruck steps on
// whole-region blocks and p_l - 1 local full-array sends; other ranks send
// one local block.
inline CountPrediction hierarchical_counts(const Topology& topo) {
  require_power_of_two_layout(topo, "hierarchical");
  const std::int64_t n = topo.values_per_rank();
  const std::int64_t p = topo.p();
  const std::int64_t pl = topo.region_size();
  const std::int64_t r = topo.region_count();

  CountPrediction c;
  c.max_msgs_nonlocal = log2_exact(static_cast<std::size_t>(r));
  c.max_values_nonlocal = n * pl * (r - 1);
  if (pl > 1) {
    c.max_msgs_local = pl - 1;
    c.max_values_local = (pl - 1) * n * p;
  }
  c.critical = {c.max_msgs_local, c.max_msgs_nonlocal, c.max_values_local, c.max_values_nonlocal};
  return c;
}

inline std::vector<MessageShape> hierarchical_profile(const Topology& topo) {
  require_power_of_two_layout(topo, "hierarchical");
  const std::int64_t n = topo.values_per_rank();
  std::vector<MessageShape> out;
  for (std::int64_t d = 1; d < topo.region_count(); d *= 2)
    out.push_back({n * topo.region_size() * d, Locality::NonLocal});
  for (int t = 1; t < topo.region_size(); ++t) out.push_back({n * topo.p(), Locality::Local});
  return out;
}

inline CountPrediction counts_for(AlgorithmId alg, const Topology& topo) {
  switch (alg) {
    case AlgorithmId::Bruck: return bruck_counts(topo);
    case AlgorithmId::LocalityBruck: return locality_counts(topo);
    case AlgorithmId::Ring: return ring_counts(topo);
    case AlgorithmId::Hierarchical: return hierarchical_counts(topo);
  }
  throw std::invalid_argument("unknown algorithm");
}

// Messages of the critical rank in send order.
inline std::vector<MessageShape> critical_profile(AlgorithmId alg, const Topology& topo) {
  switch (alg) {
    case AlgorithmId::Bruck: return bruck_profile(topo);
    case AlgorithmId::LocalityBruck: return locality_profile(topo);
    case AlgorithmId::Ring: return ring_profile(topo);
    case AlgorithmId::Hierarchical: return hierarchical_profile(topo);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace lagather
