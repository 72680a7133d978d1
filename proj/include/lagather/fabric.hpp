#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lagather/core.hpp"

namespace lagather {

// A step in which some posted send or receive has no partner.
class DeadlockError : public std::runtime_error {
 public:
  DeadlockError(int step, Rank a, Rank b, const std::string& what)
      : std::runtime_error("deadlock in step " + std::to_string(step) + " between ranks " + std::to_string(a) +
                           " and " + std::to_string(b) + ": " + what),
        step_(step),
        ranks_{a, b} {}

  int step() const noexcept { return step_; }
  std::pair<Rank, Rank> ranks() const noexcept { return ranks_; }

 private:
  int step_;
  std::pair<Rank, Rank> ranks_;
};

// Matched send/receive pairs that disagree on the payload.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `count` consecutive origins starting at `first`, wrapping modulo p.
struct BlockRange {
  Rank first = 0;
  int count = 0;

  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct Send {
  Rank dst = 0;
  std::vector<BlockRange> payload;

  int block_count() const noexcept {
    int total = 0;
    for (const auto& r : payload) total += r.count;
    return total;
  }
};

struct Receive {
  Rank src = 0;
  std::int64_t values = 0;  // expected value count
};

// One synchronous step: every rank posts at most one send and one receive.
struct StepPlan {
  StepPlan() = default;
  StepPlan(std::string phase_label, int p)
      : phase(std::move(phase_label)), sends(static_cast<std::size_t>(p)), receives(static_cast<std::size_t>(p)) {}

  // Posts a matched transfer of `payload` from src to dst.
  void transfer(Rank src, Rank dst, std::vector<BlockRange> payload, int values_per_block) {
    Send send{dst, std::move(payload)};
    receives.at(static_cast<std::size_t>(dst)) =
        Receive{src, static_cast<std::int64_t>(send.block_count()) * values_per_block};
    sends.at(static_cast<std::size_t>(src)) = std::move(send);
  }

  std::string phase;
  std::vector<std::optional<Send>> sends;
  std::vector<std::optional<Receive>> receives;
};

using Schedule = std::vector<StepPlan>;

struct Execution {
  std::vector<Buffer> buffers;
  std::vector<MessageEvent> events;
};

namespace detail {

inline void check_step_shape(const StepPlan& plan, int step, const Topology& topo) {
  const auto p = static_cast<std::size_t>(topo.p());
  if (plan.sends.size() != p || plan.receives.size() != p)
    throw std::invalid_argument("step " + std::to_string(step) + " is not sized for p=" + std::to_string(topo.p()));

  for (Rank k = 0; k < topo.p(); ++k) {
    const auto& send = plan.sends[static_cast<std::size_t>(k)];
    if (!send) continue;
    if (!topo.valid_rank(send->dst))
      throw std::invalid_argument("step " + std::to_string(step) + ": rank " + std::to_string(k) +
                                  " sends to out-of-range rank " + std::to_string(send->dst));
    if (send->dst == k)
      throw std::invalid_argument("step " + std::to_string(step) + ": rank " + std::to_string(k) + " sends to itself");
    if (send->payload.empty() || send->block_count() > topo.p() ||
        std::ranges::any_of(send->payload, [&](const BlockRange& r) { return r.count < 1 || !topo.valid_rank(r.first); }))
      throw ProtocolError("step " + std::to_string(step) + ": rank " + std::to_string(k) + " posts a malformed payload");
    const auto& recv = plan.receives[static_cast<std::size_t>(send->dst)];
    if (!recv || recv->src != k)
      throw DeadlockError(step, k, send->dst, "send has no matching receive");
    const auto sent = static_cast<std::int64_t>(send->block_count()) * topo.values_per_rank();
    if (recv->values != sent)
      throw ProtocolError("step " + std::to_string(step) + ": rank " + std::to_string(send->dst) + " expects " +
                          std::to_string(recv->values) + " values from rank " + std::to_string(k) + ", payload has " +
                          std::to_string(sent));
  }
  for (Rank k = 0; k < topo.p(); ++k) {
    const auto& recv = plan.receives[static_cast<std::size_t>(k)];
    if (!recv) continue;
    if (!topo.valid_rank(recv->src))
      throw std::invalid_argument("step " + std::to_string(step) + ": rank " + std::to_string(k) +
                                  " receives from out-of-range rank " + std::to_string(recv->src));
    const auto& send = plan.sends[static_cast<std::size_t>(recv->src)];
    if (!send || send->dst != k) throw DeadlockError(step, recv->src, k, "receive has no matching send");
  }
}

}  // namespace detail

// Runs a schedule step by step. All sends of a step read the state left by
// the previous step; received blocks are appended in payload order.
inline Execution execute(std::span<const StepPlan> schedule, std::vector<Buffer> initial, const Topology& topo) {
  if (initial.size() != static_cast<std::size_t>(topo.p()))
    throw std::invalid_argument("expected " + std::to_string(topo.p()) + " initial buffers");
  for (const auto& b : initial)
    if (b.block_size() != topo.values_per_rank()) throw std::invalid_argument("initial buffer has wrong block size");

  Execution out{std::move(initial), {}};
  const auto n = static_cast<std::size_t>(topo.values_per_rank());
  std::vector<std::vector<Value>> payloads(static_cast<std::size_t>(topo.p()));

  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const StepPlan& plan = schedule[s];
    const int step = static_cast<int>(s);
    detail::check_step_shape(plan, step, topo);

    for (Rank k = 0; k < topo.p(); ++k) {
      auto& payload = payloads[static_cast<std::size_t>(k)];
      payload.clear();
      const auto& send = plan.sends[static_cast<std::size_t>(k)];
      if (!send) continue;
      const Buffer& src = out.buffers[static_cast<std::size_t>(k)];
      payload.reserve(static_cast<std::size_t>(send->block_count()) * n);
      for (const auto& range : send->payload) {
        for (int b = 0; b < range.count; ++b) {
          const Rank origin = (range.first + b) % topo.p();
          if (!src.contains(origin))
            throw ProtocolError("step " + std::to_string(step) + ": rank " + std::to_string(k) +
                                " sends block of origin " + std::to_string(origin) + " it does not hold");
          const auto block = src.block_of(origin);
          payload.insert(payload.end(), block.begin(), block.end());
        }
      }
    }

    for (Rank k = 0; k < topo.p(); ++k) {
      const auto& send = plan.sends[static_cast<std::size_t>(k)];
      if (!send) continue;
      const auto& payload = payloads[static_cast<std::size_t>(k)];
      Buffer& dst = out.buffers[static_cast<std::size_t>(send->dst)];
      for (std::size_t off = 0; off < payload.size(); off += n) {
        try {
          dst.append(std::span<const Value>(payload).subspan(off, n));
        } catch (const std::invalid_argument& e) {
          throw ProtocolError("step " + std::to_string(step) + ": delivery to rank " + std::to_string(send->dst) +
                              " failed: " + e.what());
        }
      }
      out.events.push_back(MessageEvent{step, plan.phase, k, send->dst,
                                        static_cast<std::int64_t>(payload.size()) * topo.value_width(),
                                        classify(k, send->dst, topo)});
    }
  }
  return out;
}

struct RankTally {
  std::int64_t msgs_local = 0;
  std::int64_t msgs_nonlocal = 0;
  std::int64_t bytes_local = 0;
  std::int64_t bytes_nonlocal = 0;

  friend bool operator==(const RankTally&, const RankTally&) = default;
};

// Send-side message and byte counts per rank.
struct Tally {
  std::vector<RankTally> per_rank;
  RankTally max;  // field-wise maximum over ranks

  // The rank with the heaviest non-local load: largest (msgs_nonlocal,
  // bytes_nonlocal, msgs_local, bytes_local), lowest rank on ties.
  Rank critical_rank() const noexcept {
    Rank best = 0;
    auto key = [](const RankTally& t) {
      return std::tuple(t.msgs_nonlocal, t.bytes_nonlocal, t.msgs_local, t.bytes_local);
    };
    for (std::size_t r = 1; r < per_rank.size(); ++r)
      if (key(per_rank[r]) > key(per_rank[static_cast<std::size_t>(best)])) best = static_cast<Rank>(r);
    return best;
  }
};

inline Tally aggregate(std::span<const MessageEvent> events, const Topology& topo) {
  Tally t;
  t.per_rank.resize(static_cast<std::size_t>(topo.p()));
  for (const auto& e : events) {
    auto& rt = t.per_rank.at(static_cast<std::size_t>(e.src));
    if (classify(e.src, e.dst, topo) == Locality::Local) {
      ++rt.msgs_local;
      rt.bytes_local += e.bytes;
    } else {
      ++rt.msgs_nonlocal;
      rt.bytes_nonlocal += e.bytes;
    }
  }
  for (const auto& rt : t.per_rank) {
    t.max.msgs_local = std::max(t.max.msgs_local, rt.msgs_local);
    t.max.msgs_nonlocal = std::max(t.max.msgs_nonlocal, rt.msgs_nonlocal);
    t.max.bytes_local = std::max(t.max.bytes_local, rt.bytes_local);
    t.max.bytes_nonlocal = std::max(t.max.bytes_nonlocal, rt.bytes_nonlocal);
  }
  return t;
}

// CSV export: step,phase,src,dst,bytes,locality
inline void write_event_csv(std::ostream& os, std::span<const MessageEvent> events) {
  os << "step,phase,src,dst,bytes,locality\n";
  for (const auto& e : events)
    os << e.step << ',' << e.phase << ',' << e.src << ',' << e.dst << ',' << e.bytes << ',' << to_string(e.locality)
       << '\n';
}

}  // namespace lagather
