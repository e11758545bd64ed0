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

// The top-level dynamic index: size reduction over elements, size
// reduction again over each chunk's bucket IDs, and lookup instances over
// the second-level chunks. Zero-weight elements are kept aside and never
// sampled.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dips/core.hpp"
#include "dips/lookup_table.hpp"
#include "dips/size_reduction.hpp"

namespace dips {

struct DipsConfig {
  int base = 4;
  std::size_t scan_below = 4;
  int lookup_d = 3;
  std::uint64_t max_table_entries = 4096;
  std::size_t table_budget_bytes = std::size_t{64} << 20;
};

/// Lookup instance addressed by bucket ID; slot = j - offset.
class LookupChunkSolver {
 public:
  LookupChunkSolver(BucketIndex offset, LookupInstance instance)
      : offset_(offset), instance_(std::move(instance)) {}

  void insert(BucketIndex j, double w) { instance_.insert(slot(j), w); }
  void erase(BucketIndex j) { instance_.erase(slot(j)); }
  void change_weight(BucketIndex j, double w) { instance_.change_weight(slot(j), w); }
  double weight(BucketIndex j) const { return instance_.weight(slot(j)); }
  std::size_t size() const noexcept { return instance_.size(); }
  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) - sizeof(instance_) + instance_.memory_bytes();
  }
  void check_invariants() const { instance_.check_invariants(); }
  const LookupInstance& instance() const noexcept { return instance_; }

  template <class Sink>
  void query(double denominator, RandomSource& rng, Sink&& sink) {
    instance_.query(denominator, rng,
                    [&](std::size_t v) { sink(offset_ + static_cast<BucketIndex>(v)); });
  }

 private:
  std::size_t slot(BucketIndex j) const {
    if (j < offset_) throw DomainError("LookupChunkSolver: bucket below the chunk");
    return static_cast<std::size_t>(j - offset_);
  }

  BucketIndex offset_;
  LookupInstance instance_;
};

struct LookupChunkFactory {
  using solver_type = LookupChunkSolver;

  LookupConfig config;
  std::shared_ptr<TableCache> cache;

  LookupChunkSolver make(ChunkIndex t, int L, std::span<const std::pair<BucketIndex, double>> members,
                         WorkCounter* counter) const {
    const BucketIndex offset = t * L;
    LookupChunkSolver solver(offset,
                             LookupInstance(static_cast<std::size_t>(L), 1.0, config, cache, counter));
    for (const auto& [j, w] : members) solver.insert(j, w);
    return solver;
  }
};

using SecondLevelIndex = SizeReductionIndex<BucketIndex, LookupChunkFactory>;

struct SecondLevelFactory {
  using solver_type = SecondLevelIndex;

  LookupChunkFactory lookup;
  SizeReductionConfig config;

  SecondLevelIndex make(ChunkIndex, int, std::span<const std::pair<BucketIndex, double>> members,
                        WorkCounter* counter) const {
    return SecondLevelIndex(members, 1.0, lookup, config, counter);
  }
};

using FirstLevelIndex = SizeReductionIndex<ElementId, SecondLevelFactory>;

struct LevelOccupancy {
  std::size_t instances = 0;
  std::size_t elements = 0;
  std::size_t buckets = 0;
  std::size_t chunks = 0;
};

struct DipsStats {
  std::size_t n = 0;           // members, zero weights included
  std::size_t zero_weight = 0;
  double total_weight = 0.0;
  std::size_t memory_bytes = 0;
  std::size_t table_cache_bytes = 0;
  LevelOccupancy levels[3];    // element level, bucket-ID level, lookup level
};

class DipsIndex {
 public:
  explicit DipsIndex(double c = 1.0, DipsConfig config = {})
      : c_(c),
        config_(config),
        counter_(std::make_unique<WorkCounter>()),
        cache_(std::make_shared<TableCache>(config.table_budget_bytes)),
        level0_(checked_c(c), make_factory(config, cache_), {config.base, config.scan_below},
                counter_.get()) {}

  DipsIndex(std::span<const std::pair<ElementId, double>> members, double c = 1.0,
            DipsConfig config = {})
      : DipsIndex(c, config) {
    init(members);
  }

  /// Replaces the contents with members in O(n).
  void init(std::span<const std::pair<ElementId, double>> members) {
    zero_.clear();
    std::vector<std::pair<ElementId, double>> positive;
    positive.reserve(members.size());
    std::unordered_set<ElementId> seen;
    seen.reserve(members.size());
    for (const auto& [id, w] : members) {
      require_valid_public_weight(w, "DipsIndex::init");
      if (!seen.insert(id).second) throw DuplicateError("DipsIndex::init: duplicate element");
      if (w == 0.0) {
        zero_.insert(id);
      } else {
        positive.emplace_back(id, w);
      }
    }
    level0_.build(positive);
  }

  double c() const noexcept { return c_; }
  const DipsConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return level0_.size() + zero_.size(); }
  bool empty() const noexcept { return size() == 0; }
  double total_weight() const noexcept { return level0_.total_weight(); }
  bool contains(ElementId id) const { return level0_.contains(id) || zero_.count(id) != 0; }
  const FirstLevelIndex& first_level() const noexcept { return level0_; }
  const std::unordered_set<ElementId>& zero_weight_members() const noexcept { return zero_; }

  double weight(ElementId id) const {
    if (zero_.count(id) != 0) return 0.0;
    return level0_.weight(id);
  }

  /// c * w(v) / W, or 0 when W is 0.
  double probability(ElementId id) const {
    const double w = weight(id);
    const double total = total_weight();
    return total > 0.0 ? std::min(1.0, c_ * w / total) : 0.0;
  }

  void insert(ElementId id, double w) {
    require_valid_public_weight(w, "DipsIndex::insert");
    if (contains(id)) throw DuplicateError("DipsIndex::insert: element already present");
    if (w == 0.0) {
      zero_.insert(id);
      count(&WorkCounter::update, counter_.get());
    } else {
      level0_.insert(id, w);
    }
  }

  void erase(ElementId id) {
    if (zero_.erase(id) != 0) {
      count(&WorkCounter::update, counter_.get());
      return;
    }
    level0_.erase(id);
  }

  void change_weight(ElementId id, double w) {
    require_valid_public_weight(w, "DipsIndex::change_weight");
    if (zero_.count(id) != 0) {
      if (w == 0.0) return;
      zero_.erase(id);
      level0_.insert(id, w);
      return;
    }
    if (w == 0.0) {
      level0_.erase(id);
      zero_.insert(id);
      return;
    }
    level0_.change_weight(id, w);
  }

  /// Calls sink(id) for each element of one Poisson sample: every member v
  /// independently with probability c * w(v) / W.
  template <class Sink>
  void query(RandomSource& rng, Sink&& sink) {
    if (level0_.empty()) return;
    level0_.query(level0_.total_weight(), rng, sink);
  }

  SampleSubset query(RandomSource& rng) {
    SampleSubset out;
    query(rng, [&](ElementId id) { out.push_back(id); });
    return out;
  }

  WorkCounter& counters() noexcept { return *counter_; }
  const WorkCounter& counters() const noexcept { return *counter_; }

  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) + level0_.memory_bytes() - sizeof(level0_) + hash_set_bytes() +
           cache_->bytes();
  }

  DipsStats stats() const {
    DipsStats s;
    s.n = size();
    s.zero_weight = zero_.size();
    s.total_weight = total_weight();
    s.memory_bytes = memory_bytes();
    s.table_cache_bytes = cache_->bytes();
    const Occupancy top = level0_.occupancy();
    s.levels[0] = {1, top.elements, top.buckets, top.chunks};
    level0_.for_each_chunk_solver([&](ChunkIndex, const SecondLevelIndex& inner) {
      const Occupancy o = inner.occupancy();
      ++s.levels[1].instances;
      s.levels[1].elements += o.elements;
      s.levels[1].buckets += o.buckets;
      s.levels[1].chunks += o.chunks;
      inner.for_each_chunk_solver([&](ChunkIndex, const LookupChunkSolver& leaf) {
        ++s.levels[2].instances;
        s.levels[2].elements += leaf.size();
      });
    });
    return s;
  }

  void check_invariants() const {
    level0_.check_invariants();
    for (ElementId id : zero_) {
      if (level0_.contains(id)) throw InvariantError("DipsIndex: zero-weight element also in the index");
    }
    const std::size_t outer_width = static_cast<std::size_t>(level0_.chunk_width());
    const auto m_bound = static_cast<std::size_t>(chunk_width(outer_width, config_.base));
    level0_.for_each_chunk_solver([&](ChunkIndex, const SecondLevelIndex& inner) {
      inner.for_each_chunk_solver([&](ChunkIndex, const LookupChunkSolver& leaf) {
        const LookupInstance& inst = leaf.instance();
        if (inst.universe() > m_bound) throw InvariantError("DipsIndex: lookup universe too large");
        const double cap = power_of_base(config_.base, 3 * static_cast<std::int64_t>(inst.universe()));
        for (std::size_t v = 0; v < inst.universe(); ++v) {
          if (inst.contains(v) && inst.weight(v) > cap) {
            throw InvariantError("DipsIndex: lookup weight above b^(3m)");
          }
        }
      });
    });
    if (cache_->bytes() > cache_->budget_bytes()) throw InvariantError("DipsIndex: table cache over budget");
  }

 private:
  static double checked_c(double c) {
    require_valid_c(c, "DipsIndex");
    return c;
  }

  static SecondLevelFactory make_factory(const DipsConfig& config,
                                         std::shared_ptr<TableCache> cache) {
    LookupConfig lookup{config.base, config.lookup_d, config.max_table_entries,
                        config.table_budget_bytes};
    return SecondLevelFactory{LookupChunkFactory{lookup, std::move(cache)},
                              SizeReductionConfig{config.base, config.scan_below}};
  }

  std::size_t hash_set_bytes() const noexcept {
    return zero_.bucket_count() * sizeof(void*) + zero_.size() * 32;
  }

  double c_;
  DipsConfig config_;
  std::unique_ptr<WorkCounter> counter_;
  std::shared_ptr<TableCache> cache_;
  FirstLevelIndex level0_;
  std::unordered_set<ElementId> zero_;
};

}  // namespace dips
