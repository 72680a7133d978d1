#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lagather {

using Rank = int;

// Thrown when a topology is well-formed but an algorithm cannot run on it
// (non-power-of-two process counts, region counts that are not a power of
// the region size, ...).
class UnsupportedTopology : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller handed an operation data that violates its documented contract.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline bool is_power_of_two(std::size_t x) noexcept { return std::has_single_bit(x); }

// log2 of a power of two.
inline int log2_exact(std::size_t x) noexcept { return std::countr_zero(x); }

// Largest k with base^k == x, or -1 when x is not an integer power of base.
inline int integer_log(std::size_t x, std::size_t base) noexcept {
  if (x == 0) return -1;
  if (base <= 1) return x == 1 ? 0 : -1;
  int k = 0;
  while (x % base == 0) {
    x /= base;
    ++k;
  }
  return x == 1 ? k : -1;
}

// Process layout: p ranks split into contiguous regions of region_size ranks.
class Topology {
 public:
  Topology(int p, int region_size, int value_width = 4, int values_per_rank = 1)
      : p_(p), region_size_(region_size), value_width_(value_width), values_per_rank_(values_per_rank) {
    if (p < 1) throw std::invalid_argument("process count must be >= 1, got " + std::to_string(p));
    if (region_size < 1)
      throw std::invalid_argument("region size must be >= 1, got " + std::to_string(region_size));
    if (p % region_size != 0)
      throw std::invalid_argument("process count " + std::to_string(p) + " is not a multiple of region size " +
                                  std::to_string(region_size));
    if (value_width < 1) throw std::invalid_argument("value width must be >= 1 byte");
    if (values_per_rank < 1) throw std::invalid_argument("values per rank must be >= 1");
  }

  int p() const noexcept { return p_; }
  int region_size() const noexcept { return region_size_; }
  int region_count() const noexcept { return p_ / region_size_; }
  int value_width() const noexcept { return value_width_; }
  int values_per_rank() const noexcept { return values_per_rank_; }

  bool valid_rank(Rank r) const noexcept { return r >= 0 && r < p_; }
  int local_id(Rank r) const noexcept { return r % region_size_; }

  // Both p and region_size are powers of two (and so is the region count).
  bool power_of_two_layout() const noexcept {
    return is_power_of_two(static_cast<std::size_t>(p_)) && is_power_of_two(static_cast<std::size_t>(region_size_));
  }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  int p_;
  int region_size_;
  int value_width_;
  int values_per_rank_;
};

inline std::string describe(const Topology& t) {
  return "p=" + std::to_string(t.p()) + " region_size=" + std::to_string(t.region_size()) +
         " n=" + std::to_string(t.values_per_rank());
}

inline void require_power_of_two_layout(const Topology& t, const char* algorithm) {
  if (!is_power_of_two(static_cast<std::size_t>(t.p())))
    throw UnsupportedTopology(std::string(algorithm) + " requires a power-of-2 process count, got p=" +
                              std::to_string(t.p()));
  if (!is_power_of_two(static_cast<std::size_t>(t.region_size())))
    throw UnsupportedTopology(std::string(algorithm) + " requires a power-of-2 region size, got " +
                              std::to_string(t.region_size()));
}

inline int region_of(Rank rank, const Topology& topo) {
  if (!topo.valid_rank(rank))
    throw std::invalid_argument("rank " + std::to_string(rank) + " out of range for p=" + std::to_string(topo.p()));
  return rank / topo.region_size();
}

enum class Locality { Local, NonLocal };

inline const char* to_string(Locality l) noexcept { return l == Locality::Local ? "local" : "nonlocal"; }

inline Locality classify(Rank src, Rank dst, const Topology& topo) {
  if (src == dst) throw std::invalid_argument("self-message from rank " + std::to_string(src) + " is not a transfer");
  return region_of(src, topo) == region_of(dst, topo) ? Locality::Local : Locality::NonLocal;
}

// One gathered value. The tag is simulation metadata; only value_width bytes
// are charged per value.
struct Value {
  std::int32_t origin_rank = 0;
  std::int32_t index = 0;

  friend bool operator==(const Value&, const Value&) = default;
};

// Ordered, origin-tagged blocks of block_size values each. Blocks keep their
// insertion order; an origin is stored at most once.
class Buffer {
 public:
  explicit Buffer(int block_size = 1) : block_size_(block_size) {
    if (block_size < 1) throw std::invalid_argument("block size must be >= 1");
  }

  // The initial contents of `rank`: values (rank, 0..n-1).
  static Buffer initial(Rank rank, int values_per_rank) {
    Buffer b(values_per_rank);
    std::vector<Value> block(static_cast<std::size_t>(values_per_rank));
    for (int i = 0; i < values_per_rank; ++i) block[static_cast<std::size_t>(i)] = Value{rank, i};
    b.append(block);
    return b;
  }

  int block_size() const noexcept { return block_size_; }
  std::size_t block_count() const noexcept { return origins_.size(); }
  std::size_t value_count() const noexcept { return values_.size(); }
  bool empty() const noexcept { return origins_.empty(); }

  std::span<const Value> values() const noexcept { return values_; }
  std::span<const Rank> origins() const noexcept { return origins_; }

  Rank origin_at(std::size_t pos) const { return origins_.at(pos); }

  std::span<const Value> block_at(std::size_t pos) const {
    if (pos >= origins_.size()) throw std::out_of_range("block position out of range");
    return std::span<const Value>(values_).subspan(pos * static_cast<std::size_t>(block_size_),
                                                   static_cast<std::size_t>(block_size_));
  }

  bool contains(Rank origin) const noexcept { return slot_of(origin) >= 0; }

  // Block held for `origin`; throws if absent.
  std::span<const Value> block_of(Rank origin) const {
    const auto slot = slot_of(origin);
    if (slot < 0) throw std::out_of_range("origin " + std::to_string(origin) + " not held");
    return block_at(static_cast<std::size_t>(slot));
  }

  // Appends a block, or checks it against the copy already held. Returns true
  // when the block was new. A duplicate that differs from the held copy, or a
  // block that is not a well-formed (origin, 0..n-1) run, throws.
  bool append(std::span<const Value> block) {
    check_block(block);
    const Rank origin = block.front().origin_rank;
    const auto slot = slot_of(origin);
    if (slot >= 0) {
      if (!std::ranges::equal(block, block_at(static_cast<std::size_t>(slot))))
        throw std::invalid_argument("duplicate block for origin " + std::to_string(origin) + " differs from held copy");
      return false;
    }
    if (static_cast<std::size_t>(origin) >= slots_.size()) slots_.resize(static_cast<std::size_t>(origin) + 1, -1);
    slots_[static_cast<std::size_t>(origin)] = static_cast<std::int32_t>(origins_.size());
    origins_.push_back(origin);
    values_.insert(values_.end(), block.begin(), block.end());
    return true;
  }

  // Same blocks, ordered by origin rank.
  Buffer canonicalized() const {
    std::vector<Rank> order(origins_);
    std::ranges::sort(order);
    return reordered(order);
  }

  // Same blocks in the given origin order; `order` must be a permutation of the
  // held origins.
  Buffer reordered(std::span<const Rank> order) const {
    if (order.size() != origins_.size()) throw PreconditionError("reorder must name every held block exactly once");
    Buffer out(block_size_);
    out.values_.reserve(values_.size());
    out.origins_.reserve(origins_.size());
    for (Rank o : order) {
      if (out.contains(o)) throw PreconditionError("reorder names origin " + std::to_string(o) + " twice");
      out.append(block_of(o));
    }
    return out;
  }

  friend bool operator==(const Buffer& a, const Buffer& b) {
    return a.block_size_ == b.block_size_ && a.origins_ == b.origins_ && a.values_ == b.values_;
  }

 private:
  std::int32_t slot_of(Rank origin) const noexcept {
    if (origin < 0 || static_cast<std::size_t>(origin) >= slots_.size()) return -1;
    return slots_[static_cast<std::size_t>(origin)];
  }

  void check_block(std::span<const Value> block) const {
    if (block.size() != static_cast<std::size_t>(block_size_))
      throw std::invalid_argument("block has " + std::to_string(block.size()) + " values, expected " +
                                  std::to_string(block_size_));
    const Rank origin = block.front().origin_rank;
    if (origin < 0) throw std::invalid_argument("negative origin rank");
    for (std::size_t i = 0; i < block.size(); ++i) {
      if (block[i].origin_rank != origin || block[i].index != static_cast<std::int32_t>(i))
        throw std::invalid_argument("block for origin " + std::to_string(origin) + " is not in index order");
    }
  }

  int block_size_;
  std::vector<Value> values_;
  std::vector<Rank> origins_;
  std::vector<std::int32_t> slots_;  // origin -> block position, -1 if absent
};

struct MessageEvent {
  int step = 0;
  std::string phase;
  Rank src = 0;
  Rank dst = 0;
  std::int64_t bytes = 0;
  Locality locality = Locality::Local;

  friend bool operator==(const MessageEvent&, const MessageEvent&) = default;
};

// Ground truth for every allgather: all ranks' blocks in origin order.
inline Buffer canonical_gather_oracle(std::span<const Buffer> initial, const Topology& topo) {
  if (initial.size() != static_cast<std::size_t>(topo.p()))
    throw std::invalid_argument("expected " + std::to_string(topo.p()) + " initial buffers, got " +
                                std::to_string(initial.size()));
  Buffer out(topo.values_per_rank());
  for (Rank r = 0; r < topo.p(); ++r) {
    const Buffer& b = initial[static_cast<std::size_t>(r)];
    if (b.block_size() != topo.values_per_rank() || b.block_count() != 1 || b.origin_at(0) != r)
      throw std::invalid_argument("initial buffer of rank " + std::to_string(r) + " must hold exactly its own block");
    out.append(b.block_at(0));
  }
  return out;
}

inline std::vector<Buffer> initial_buffers(const Topology& topo) {
  std::vector<Buffer> out;
  out.reserve(static_cast<std::size_t>(topo.p()));
  for (Rank r = 0; r < topo.p(); ++r) out.push_back(Buffer::initial(r, topo.values_per_rank()));
  return out;
}

}  // namespace lagather
