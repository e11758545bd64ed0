// Copyright 2026 The DIPS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Bucket/chunk size reduction.
//
// Members are grouped into buckets B_j = {v : b^j < w(v) <= b^(j+1)} and
// buckets into chunks C_t = {B_j : floor(j / L) = t}, with L = ceil(log_b n0)
// frozen at the last rebuild. Within a chunk, bucket weights rescaled by
// b^(-tL) land in (1, n0 b^L], which turns every chunk into a small PPS
// instance over bucket IDs. That instance is handed to an injected inner
// solver. Only the three highest nonempty chunks are sampled through the
// hierarchy; everything lighter goes through one filtered jump over the
// whole member array, which costs O(1/n) expected.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dips/core.hpp"
#include "dips/jump_sampler.hpp"

namespace dips {

// ---------------------------------------------------------------------------
// Bucket arithmetic

namespace detail {

/// s with b == 2^s, or 0 if b is not a power of two.
constexpr int log2_if_power_of_two(int b) noexcept {
  if (b < 2 || (b & (b - 1)) != 0) return 0;
  int s = 0;
  while ((1 << s) != b) ++s;
  return s;
}

constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) noexcept {
  return -floor_div(-a, b);
}

}  // namespace detail

/// b^k. Exact when b is a power of two (barring overflow to inf or
/// underflow to 0).
inline double power_of_base(int b, std::int64_t k) {
  if (const int s = detail::log2_if_power_of_two(b)) {
    const std::int64_t e = k * s;
    if (e > 4096) return HUGE_VAL;
    if (e < -4096) return 0.0;
    return std::ldexp(1.0, static_cast<int>(e));
  }
  return std::pow(static_cast<double>(b), static_cast<double>(k));
}

/// The unique j with b^j < w <= b^(j+1).
inline BucketIndex assign_bucket(double w, int b) {
  if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("assign_bucket: weight must be positive and finite");
  if (b < 2) throw DomainError("assign_bucket: base must be at least 2");
  int e = 0;
  const double mantissa = std::frexp(w, &e);
  // ceil(log2 w), exact.
  const std::int64_t ceil_log2 = mantissa == 0.5 ? e - 1 : e;
  if (const int s = detail::log2_if_power_of_two(b)) {
    return static_cast<BucketIndex>(detail::ceil_div(ceil_log2, s) - 1);
  }
  auto j = static_cast<std::int64_t>(
      std::floor(static_cast<double>(ceil_log2 - 1) / std::log2(static_cast<double>(b))));
  while (power_of_base(b, j) >= w) --j;
  while (power_of_base(b, j + 1) < w) ++j;
  return static_cast<BucketIndex>(j);
}

/// floor(j / L).
constexpr ChunkIndex assign_chunk(BucketIndex j, int L) noexcept {
  return static_cast<ChunkIndex>(detail::floor_div(j, L));
}

/// w_B * b^(-t L).
inline double normalized_weight(double bucket_weight, ChunkIndex t, int L, int b) {
  if (!(bucket_weight > 0.0)) throw DomainError("normalized_weight: weight must be positive");
  const std::int64_t shift = static_cast<std::int64_t>(t) * L;
  double out;
  if (const int s = detail::log2_if_power_of_two(b)) {
    const std::int64_t e = -shift * s;
    if (e > 4096 || e < -4096) throw RangeError("normalized_weight: exponent out of range");
    out = std::ldexp(bucket_weight, static_cast<int>(e));
  } else {
    out = bucket_weight / std::pow(static_cast<double>(b), static_cast<double>(shift));
  }
  if (!std::isnormal(out)) throw RangeError("normalized_weight: result not representable");
  return out;
}

/// Smallest L >= 1 with b^L >= n.
inline int chunk_width(std::size_t n, int b) noexcept {
  int L = 1;
  long double reach = b;
  while (reach < static_cast<long double>(n)) {
    reach *= b;
    ++L;
  }
  return L;
}

// ---------------------------------------------------------------------------
// Inner solver contract

/// A solver for one chunk's instance over bucket IDs: each present ID j is
/// returned with probability w(j) / denominator, where the parent supplies
/// the denominator at query time.
template <class S>
concept ChunkSolver = requires(S s, const S cs, BucketIndex j, double w, RandomSource& rng) {
  s.insert(j, w);
  s.erase(j);
  s.change_weight(j, w);
  s.query(w, rng, [](BucketIndex) {});
  { cs.size() } -> std::convertible_to<std::size_t>;
  { cs.weight(j) } -> std::convertible_to<double>;
  { cs.memory_bytes() } -> std::convertible_to<std::size_t>;
  cs.check_invariants();
};

/// Builds chunk solvers: make(t, L, members, counter) for the chunk with
/// index t, members being (bucket ID, normalized weight) pairs.
template <class F>
concept ChunkSolverFactory =
    ChunkSolver<typename F::solver_type> &&
    requires(const F f, ChunkIndex t, int L, std::span<const std::pair<BucketIndex, double>> m,
             WorkCounter* wc) {
      { f.make(t, L, m, wc) } -> std::same_as<typename F::solver_type>;
    };

struct SizeReductionConfig {
  int base = 4;                // b
  std::size_t scan_below = 4;  // instances smaller than this are sampled by a scan
  std::size_t sizing_floor = 0;  // L is computed from max(n, sizing_floor)
};

struct Occupancy {
  std::size_t elements = 0;
  std::size_t buckets = 0;
  std::size_t chunks = 0;
};

template <class Key, ChunkSolverFactory Factory>
class SizeReductionIndex {
 public:
  using Inner = typename Factory::solver_type;
  using Member = std::pair<Key, double>;

  struct Chunk {
    CompensatedSum weight;      // w(C_t)
    std::size_t buckets = 0;    // nonempty buckets
    Inner inner;
  };

  SizeReductionIndex(double c, Factory factory, SizeReductionConfig config = {},
                     WorkCounter* counter = nullptr)
      : c_(c), factory_(std::move(factory)), config_(config), counter_(counter) {
    require_valid_c(c, "SizeReductionIndex");
    if (config.base < 2) throw DomainError("SizeReductionIndex: base must be at least 2");
    global_ = JumpSampler<Key>(HUGE_VAL, c_, counter_);
  }

  SizeReductionIndex(std::span<const Member> members, double c, Factory factory,
                     SizeReductionConfig config = {}, WorkCounter* counter = nullptr)
      : SizeReductionIndex(c, std::move(factory), config, counter) {
    build(members);
  }

  /// Discards the current contents and builds from members in O(n).
  void build(std::span<const Member> members) {
    for (const auto& [id, w] : members) require_valid_weight(w, "SizeReductionIndex::build");
    buckets_.clear();
    chunks_.clear();
    nonempty_.clear();
    global_ = JumpSampler<Key>(HUGE_VAL, c_, counter_);
    old_size_ = members.size();
    L_ = ::dips::chunk_width(std::max(old_size_, config_.sizing_floor), config_.base);
    total_.reset();

    for (const auto& [id, w] : members) {
      global_.insert(id, w);
      const BucketIndex j = assign_bucket(w, config_.base);
      bucket_for(j).insert(id, w);
      total_.add(w);
    }
    std::unordered_map<ChunkIndex, std::vector<std::pair<BucketIndex, double>>> grouped;
    std::unordered_map<ChunkIndex, double> chunk_weight;
    for (const auto& [j, bucket] : buckets_) {
      const ChunkIndex t = assign_chunk(j, L_);
      grouped[t].emplace_back(j, normalized_bucket_weight(bucket.total_weight(), t));
      chunk_weight[t] += bucket.total_weight();
    }
    for (auto& [t, ids] : grouped) {
      std::sort(ids.begin(), ids.end());
      Chunk chunk{CompensatedSum(chunk_weight[t]), ids.size(),
                  factory_.make(t, L_, ids, counter_)};
      chunks_.emplace(t, std::move(chunk));
      nonempty_.insert(t);
    }
    count(&WorkCounter::rebuild, counter_, members.size());
    count(&WorkCounter::update, counter_, members.size());
  }

  double c() const noexcept { return c_; }
  int base() const noexcept { return config_.base; }
  int chunk_width() const noexcept { return L_; }
  std::size_t size() const noexcept { return global_.size(); }
  bool empty() const noexcept { return global_.empty(); }
  std::size_t old_size() const noexcept { return old_size_; }
  double total_weight() const noexcept { return total_.value(); }
  bool contains(const Key& id) const { return global_.contains(id); }
  double weight(const Key& id) const { return global_.weight(id); }
  const std::unordered_map<BucketIndex, JumpSampler<Key>>& buckets() const noexcept {
    return buckets_;
  }
  const std::unordered_map<ChunkIndex, Chunk>& chunks() const noexcept { return chunks_; }
  const JumpSampler<Key>& members() const noexcept { return global_; }

  Occupancy occupancy() const noexcept { return {size(), buckets_.size(), chunks_.size()}; }

  void insert(const Key& id, double w) {
    require_valid_weight(w, "SizeReductionIndex::insert");
    if (global_.contains(id)) throw DuplicateError("SizeReductionIndex::insert: element already present");
    if (old_size_ == 0 || size() + 1 >= 2 * old_size_) {
      global_.insert(id, w);
      rebuild();
      return;
    }
    add(id, w);
    total_.add(w);
  }

  void erase(const Key& id) {
    const double w = global_.weight(id);
    if (2 * (size() - 1) <= old_size_) {
      global_.erase(id);
      rebuild();
      return;
    }
    remove(id, w);
    total_.subtract(w);
    if (empty()) total_.reset();
  }

  void change_weight(const Key& id, double w) {
    require_valid_weight(w, "SizeReductionIndex::change_weight");
    const double old = global_.weight(id);
    const BucketIndex j_old = assign_bucket(old, config_.base);
    const BucketIndex j_new = assign_bucket(w, config_.base);
    if (j_old == j_new) {
      global_.change_weight(id, w);
      JumpSampler<Key>& bucket = buckets_.at(j_old);
      bucket.change_weight(id, w);
      const ChunkIndex t = assign_chunk(j_old, L_);
      Chunk& chunk = chunks_.at(t);
      chunk.weight.subtract(old);
      chunk.weight.add(w);
      if (chunk.buckets == 1) chunk.weight.reset(bucket.total_weight());
      chunk.inner.change_weight(j_old, normalized_bucket_weight(bucket.total_weight(), t));
      count(&WorkCounter::update, counter_);
    } else {
      remove(id, old);
      add(id, w);
    }
    total_.subtract(old);
    total_.add(w);
    if (size() == 1) total_.reset(w);
  }

  /// Highest nonempty chunk index, found by probing downward from
  /// floor(ceil(log_b W) / L).
  ChunkIndex top_chunk() const {
    if (empty()) throw EmptyIndexError("SizeReductionIndex::top_chunk: index is empty");
    const std::int64_t ceil_log = static_cast<std::int64_t>(assign_bucket(total_.value(), config_.base)) + 1;
    const auto x = static_cast<ChunkIndex>(detail::floor_div(ceil_log, L_));
    ChunkIndex r = x;
    bool found = false;
    for (int step = 0; step < 4; ++step, --r) {
      count(&WorkCounter::query, counter_);
      if (chunks_.count(r) != 0) {
        found = true;
        break;
      }
    }
    // Rounding in W can push the probe window off by one; the ordered set
    // is authoritative.
    if (!found || r != *nonempty_.rbegin()) {
      DIPS_DEBUG_CHECK(false, "SizeReductionIndex: top chunk outside the probe window");
      r = *nonempty_.rbegin();
    }
    return r;
  }

  /// Includes each member v independently with probability
  /// c * w(v) / denominator; denominator must be at least total_weight().
  template <class Sink>
  void query(double denominator, RandomSource& rng, Sink&& sink) {
    count(&WorkCounter::query, counter_);
    if (empty()) return;
    if (!(denominator > 0.0) || denominator < total_.value() * (1.0 - 1e-9)) {
      throw DomainError("SizeReductionIndex::query: denominator below total weight");
    }
    if (size() < config_.scan_below) {
      const double scale = c_ / denominator;
      for (const auto& e : global_.entries()) {
        count(&WorkCounter::query, counter_);
        if (rng.next_unit() < scale * e.weight) sink(e.id);
      }
      return;
    }

    // Significant chunks. A bucket B of chunk C must be reached with
    // probability at least h, the chance that its jump scan with bound
    // p = c * min(b^(j+1), w(B)) / den finds a candidate; h < b c w(B) / den.
    // Run k rounds of the inner solver, each selecting B with probability
    // y = beta w(B) / den, beta = b c / k. Then B is selected with
    // probability g = 1 - (1 - y)^k >= h whenever k <= b, is kept with
    // probability h / g, and is scanned conditioned on a candidate. The
    // inner solver needs den / beta >= w(C), hence k = ceil(b c w(C) / den).
    const ChunkIndex r = top_chunk();
    const double boost = config_.base * c_;
    for (ChunkIndex i = r; i >= r - 2; --i) {
      auto it = chunks_.find(i);
      if (it == chunks_.end()) continue;
      Chunk& chunk = it->second;
      const int rounds = std::max(1, static_cast<int>(std::ceil(boost * chunk.weight.value() / denominator - 1e-12)));
      const double beta = boost / rounds;
      const double inner_denominator = scaled_to_chunk(denominator / beta, i);
      scratch_.clear();
      for (int round = 0; round < rounds; ++round) {
        chunk.inner.query(inner_denominator, rng, [this](BucketIndex j) { scratch_.push_back(j); });
      }
      if (rounds > 1 && scratch_.size() > 1) {
        std::sort(scratch_.begin(), scratch_.end());
        scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
      }
      for (BucketIndex j : scratch_) {
        const JumpSampler<Key>& bucket = buckets_.find(j)->second;
        const double bucket_weight = bucket.total_weight();
        const double y = std::min(1.0, beta * bucket_weight / denominator);
        const double selected = rounds == 1 ? y : -std::expm1(rounds * std::log1p(-y));
        const double bound = std::min(bucket.weight_bound(), bucket_weight);
        const double hit = bucket.any_candidate_probability(denominator, bound);
        DIPS_DEBUG_CHECK(hit <= selected * (1.0 + 1e-9),
                         "SizeReductionIndex: bucket selection below its hit probability");
        count(&WorkCounter::query, counter_);
        if (!(rng.next_unit() * selected < hit)) continue;
        bucket.query_given_candidate(denominator, bound, rng, sink);
      }
    }

    const ChunkIndex cut = r - 2;
    if (*nonempty_.begin() < cut) {
      const double bound = power_of_base(config_.base, static_cast<std::int64_t>(cut) * L_);
      global_.query_filtered(
          denominator, bound,
          [this, cut](const Key&, double w) {
            return assign_chunk(assign_bucket(w, config_.base), L_) < cut;
          },
          rng, sink);
    }
  }

  std::vector<Key> query(double denominator, RandomSource& rng) {
    std::vector<Key> out;
    query(denominator, rng, [&](const Key& k) { out.push_back(k); });
    return out;
  }

  std::size_t memory_bytes() const noexcept {
    std::size_t bytes = sizeof(*this) + global_.memory_bytes() + hash_map_bytes(buckets_) +
                        hash_map_bytes(chunks_) + vector_bytes(scratch_) +
                        nonempty_.size() * 48;
    for (const auto& [j, bucket] : buckets_) bytes += bucket.memory_bytes() - sizeof(bucket);
    for (const auto& [t, chunk] : chunks_) bytes += chunk.inner.memory_bytes() - sizeof(Inner);
    return bytes;
  }

  template <class Fn>
  void for_each_chunk_solver(Fn&& fn) const {
    for (const auto& [t, chunk] : chunks_) fn(t, chunk.inner);
  }

  void check_invariants() const {
    global_.check_invariants();
    const int b = config_.base;
    if (old_size_ > 0 && (2 * size() < old_size_ || size() > 2 * old_size_)) {
      throw InvariantError("SizeReductionIndex: size left [old/2, 2 old] without rebuild");
    }
    std::size_t in_buckets = 0;
    for (const auto& [j, bucket] : buckets_) {
      bucket.check_invariants();
      if (bucket.empty()) throw InvariantError("SizeReductionIndex: empty bucket retained");
      in_buckets += bucket.size();
      for (const auto& e : bucket.entries()) {
        if (!(power_of_base(b, j) < e.weight && e.weight <= power_of_base(b, j + 1))) {
          throw InvariantError("SizeReductionIndex: element in the wrong bucket");
        }
        if (!global_.contains(e.id) || global_.weight(e.id) != e.weight) {
          throw InvariantError("SizeReductionIndex: bucket member missing from member array");
        }
      }
    }
    if (in_buckets != size()) throw InvariantError("SizeReductionIndex: bucket sizes do not add up");

    CompensatedSum total;
    std::set<ChunkIndex> keys;
    for (const auto& [t, chunk] : chunks_) {
      keys.insert(t);
      chunk.inner.check_invariants();
      if (chunk.inner.size() != chunk.buckets || chunk.buckets == 0) {
        throw InvariantError("SizeReductionIndex: chunk bucket count out of sync");
      }
      CompensatedSum chunk_total;
      std::size_t seen = 0;
      for (const auto& [j, bucket] : buckets_) {
        if (assign_chunk(j, L_) != t) continue;
        ++seen;
        chunk_total.add(bucket.total_weight());
        const double nw = normalized_bucket_weight(bucket.total_weight(), t);
        if (!close(chunk.inner.weight(j), nw)) {
          throw InvariantError("SizeReductionIndex: inner solver holds a stale bucket weight");
        }
        if (!(nw > 1.0)) throw InvariantError("SizeReductionIndex: normalized weight not above one");
      }
      if (seen != chunk.buckets) throw InvariantError("SizeReductionIndex: chunk membership out of sync");
      if (!close(chunk_total.value(), chunk.weight.value())) {
        throw InvariantError("SizeReductionIndex: chunk weight drifted");
      }
      const double lower = power_of_base(b, static_cast<std::int64_t>(t) * L_);
      const double upper = static_cast<double>(size()) *
                           power_of_base(b, static_cast<std::int64_t>(t + 1) * L_);
      if (!(chunk.weight.value() > lower * (1.0 - 1e-12)) ||
          chunk.weight.value() > upper * (1.0 + 1e-12)) {
        throw InvariantError("SizeReductionIndex: chunk weight outside its bounds");
      }
      total.add(chunk.weight.value());
    }
    if (keys != nonempty_) throw InvariantError("SizeReductionIndex: nonempty chunk set out of sync");
    for (const auto& [j, bucket] : buckets_) {
      if (chunks_.count(assign_chunk(j, L_)) == 0) {
        throw InvariantError("SizeReductionIndex: bucket without a chunk");
      }
    }
    if (!close(total.value(), total_.value())) throw InvariantError("SizeReductionIndex: total weight drifted");
    if (!empty()) {
      const ChunkIndex r = top_chunk();
      if (r != *nonempty_.rbegin()) throw InvariantError("SizeReductionIndex: top chunk mismatch");
      const double bound = power_of_base(b, static_cast<std::int64_t>(r - 2) * L_);
      for (const auto& e : global_.entries()) {
        const ChunkIndex t = assign_chunk(assign_bucket(e.weight, b), L_);
        if (t < r - 2 && e.weight > bound) {
          throw InvariantError("SizeReductionIndex: non-significant element above its bound");
        }
      }
    }
  }

 private:
  static bool close(double a, double b) noexcept {
    return std::abs(a - b) <= 1e-9 * std::max({1e-300, std::abs(a), std::abs(b)});
  }

  double normalized_bucket_weight(double bucket_weight, ChunkIndex t) const {
    // Incremental totals can round to exactly one in the lowest bucket of a
    // chunk; keep the inner instance's strict lower bound.
    static const double kAboveOne = std::nextafter(1.0, 2.0);
    return std::max(kAboveOne, normalized_weight(bucket_weight, t, L_, config_.base));
  }

  double scaled_to_chunk(double value, ChunkIndex t) const {
    return normalized_weight(value, t, L_, config_.base);
  }

  JumpSampler<Key>& bucket_for(BucketIndex j) {
    auto it = buckets_.find(j);
    if (it == buckets_.end()) {
      it = buckets_.emplace(j, JumpSampler<Key>(power_of_base(config_.base, j + 1), c_, counter_)).first;
    }
    return it->second;
  }

  void rebuild() {
    std::vector<Member> members;
    members.reserve(global_.size());
    for (const auto& e : global_.entries()) members.emplace_back(e.id, e.weight);
    build(members);
  }

  void add(const Key& id, double w) {
    global_.insert(id, w);
    const BucketIndex j = assign_bucket(w, config_.base);
    JumpSampler<Key>& bucket = bucket_for(j);
    const bool fresh = bucket.empty();
    bucket.insert(id, w);
    const ChunkIndex t = assign_chunk(j, L_);
    const double nw = normalized_bucket_weight(bucket.total_weight(), t);
    auto it = chunks_.find(t);
    if (it == chunks_.end()) {
      const std::pair<BucketIndex, double> only{j, nw};
      chunks_.emplace(t, Chunk{CompensatedSum(w), 1,
                               factory_.make(t, L_, std::span(&only, 1), counter_)});
      nonempty_.insert(t);
    } else {
      Chunk& chunk = it->second;
      chunk.weight.add(w);
      if (fresh) {
        chunk.inner.insert(j, nw);
        ++chunk.buckets;
      } else {
        chunk.inner.change_weight(j, nw);
      }
      if (chunk.buckets == 1) chunk.weight.reset(bucket.total_weight());
    }
    count(&WorkCounter::update, counter_);
  }

  void remove(const Key& id, double w) {
    global_.erase(id);
    const BucketIndex j = assign_bucket(w, config_.base);
    auto bit = buckets_.find(j);
    bit->second.erase(id);
    const bool gone = bit->second.empty();
    const double bucket_weight = bit->second.total_weight();
    if (gone) buckets_.erase(bit);
    const ChunkIndex t = assign_chunk(j, L_);
    auto cit = chunks_.find(t);
    Chunk& chunk = cit->second;
    if (gone) {
      if (--chunk.buckets == 0) {
        chunks_.erase(cit);
        nonempty_.erase(t);
        count(&WorkCounter::update, counter_);
        return;
      }
      chunk.inner.erase(j);
    } else {
      chunk.inner.change_weight(j, normalized_bucket_weight(bucket_weight, t));
    }
    chunk.weight.subtract(w);
    count(&WorkCounter::update, counter_);
  }

  double c_;
  Factory factory_;
  SizeReductionConfig config_;
  WorkCounter* counter_;
  int L_ = 1;
  std::size_t old_size_ = 0;
  CompensatedSum total_;
  JumpSampler<Key> global_;
  std::unordered_map<BucketIndex, JumpSampler<Key>> buckets_;
  std::unordered_map<ChunkIndex, Chunk> chunks_;
  std::set<ChunkIndex> nonempty_;
  std::vector<BucketIndex> scratch_;
};

}  // namespace dips
