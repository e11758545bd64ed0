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

// Comparison samplers with the same interface as DipsIndex. NaiveSampler
// flips one coin per element. RebuildReductionSampler answers queries from
// a static table of probabilities and rebuilds that table on every update.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dips/core.hpp"
#include "dips/jump_sampler.hpp"

namespace dips {

namespace detail {

/// Dense member array with swap-remove and an id -> position map.
class MemberArray {
 public:
  struct Entry {
    ElementId id;
    double weight;
  };

  std::size_t size() const noexcept { return entries_.size(); }
  bool contains(ElementId id) const { return position_.count(id) != 0; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  double total_weight() const noexcept { return total_.value(); }

  double weight(ElementId id) const { return entries_[find(id)].weight; }

  void reserve(std::size_t n) {
    entries_.reserve(n);
    position_.reserve(n);
  }

  void insert(ElementId id, double w, const char* where) {
    require_valid_public_weight(w, where);
    if (!position_.emplace(id, entries_.size()).second) {
      throw DuplicateError(std::string(where) + ": element already present");
    }
    entries_.push_back({id, w});
    total_.add(w);
  }

  void erase(ElementId id) {
    const std::size_t i = find(id);
    total_.subtract(entries_[i].weight);
    if (i + 1 != entries_.size()) {
      entries_[i] = entries_.back();
      position_[entries_[i].id] = i;
    }
    entries_.pop_back();
    position_.erase(id);
    if (entries_.empty()) total_ = CompensatedSum{};
  }

  void change_weight(ElementId id, double w, const char* where) {
    require_valid_public_weight(w, where);
    Entry& e = entries_[find(id)];
    total_.subtract(e.weight);
    total_.add(w);
    e.weight = w;
  }

  std::size_t memory_bytes() const noexcept {
    return vector_bytes(entries_) + hash_map_bytes(position_);
  }

  void check_invariants(const char* where) const {
    if (position_.size() != entries_.size()) throw InvariantError(std::string(where) + ": map size");
    CompensatedSum exact;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      auto it = position_.find(entries_[i].id);
      if (it == position_.end() || it->second != i) {
        throw InvariantError(std::string(where) + ": position map out of sync");
      }
      exact.add(entries_[i].weight);
    }
    if (std::abs(exact.value() - total_.value()) > 1e-9 * std::max(1.0, exact.value())) {
      throw InvariantError(std::string(where) + ": total weight drifted");
    }
  }

 private:
  std::size_t find(ElementId id) const {
    auto it = position_.find(id);
    if (it == position_.end()) throw NotFoundError("unknown element");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::unordered_map<ElementId, std::size_t> position_;
  CompensatedSum total_;
};

}  // namespace detail

/// Brute-force scan: one coin per element per query.
class NaiveSampler {
 public:
  explicit NaiveSampler(double c = 1.0) : c_(checked(c)), counter_(std::make_unique<WorkCounter>()) {}

  NaiveSampler(std::span<const std::pair<ElementId, double>> members, double c = 1.0)
      : NaiveSampler(c) {
    members_.reserve(members.size());
    for (const auto& [id, w] : members) members_.insert(id, w, "NaiveSampler");
  }

  double c() const noexcept { return c_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.size() == 0; }
  double total_weight() const noexcept { return members_.total_weight(); }
  bool contains(ElementId id) const { return members_.contains(id); }
  double weight(ElementId id) const { return members_.weight(id); }

  double probability(ElementId id) const {
    const double total = total_weight();
    return total > 0.0 ? std::min(1.0, c_ * weight(id) / total) : 0.0;
  }

  void insert(ElementId id, double w) {
    members_.insert(id, w, "NaiveSampler::insert");
    count(&WorkCounter::update, counter_.get());
  }

  void erase(ElementId id) {
    members_.erase(id);
    count(&WorkCounter::update, counter_.get());
  }

  void change_weight(ElementId id, double w) {
    members_.change_weight(id, w, "NaiveSampler::change_weight");
    count(&WorkCounter::update, counter_.get());
  }

  template <class Sink>
  void query(RandomSource& rng, Sink&& sink) {
    const double total = total_weight();
    if (!(total > 0.0)) return;
    const double scale = c_ / total;
    for (const auto& e : members_.entries()) {
      if (rng.next_unit() < e.weight * scale) sink(e.id);
    }
    count(&WorkCounter::query, counter_.get(), members_.size());
  }

  SampleSubset query(RandomSource& rng) {
    SampleSubset out;
    query(rng, [&](ElementId id) { out.push_back(id); });
    return out;
  }

  WorkCounter& counters() noexcept { return *counter_; }
  const WorkCounter& counters() const noexcept { return *counter_; }
  std::size_t memory_bytes() const noexcept { return sizeof(*this) + members_.memory_bytes(); }
  void check_invariants() const { members_.check_invariants("NaiveSampler"); }

 private:
  static double checked(double c) {
    require_valid_c(c, "NaiveSampler");
    return c;
  }

  double c_;
  detail::MemberArray members_;
  std::unique_ptr<WorkCounter> counter_;
};

/// Static probability table p(v) = c w(v) / W split into groups with
/// p in (2^-(g+1), 2^-g]; a query jump-scans each group against its upper
/// threshold. Every update, a no-op weight change included, rebuilds the
/// whole table.
class RebuildReductionSampler {
 public:
  struct Slot {
    ElementId id;
    double p;
  };

  explicit RebuildReductionSampler(double c = 1.0)
      : c_(checked(c)), counter_(std::make_unique<WorkCounter>()) {}

  RebuildReductionSampler(std::span<const std::pair<ElementId, double>> members, double c = 1.0)
      : RebuildReductionSampler(c) {
    members_.reserve(members.size());
    for (const auto& [id, w] : members) members_.insert(id, w, "RebuildReductionSampler");
    rebuild();
  }

  double c() const noexcept { return c_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.size() == 0; }
  double total_weight() const noexcept { return members_.total_weight(); }
  bool contains(ElementId id) const { return members_.contains(id); }
  double weight(ElementId id) const { return members_.weight(id); }
  std::size_t group_count() const noexcept { return group_start_.empty() ? 0 : group_start_.size() - 1; }

  double probability(ElementId id) const {
    const double total = total_weight();
    return total > 0.0 ? std::min(1.0, c_ * weight(id) / total) : 0.0;
  }

  void insert(ElementId id, double w) {
    members_.insert(id, w, "RebuildReductionSampler::insert");
    rebuild();
  }

  void erase(ElementId id) {
    members_.erase(id);
    rebuild();
  }

  void change_weight(ElementId id, double w) {
    members_.change_weight(id, w, "RebuildReductionSampler::change_weight");
    rebuild();
  }

  template <class Sink>
  void query(RandomSource& rng, Sink&& sink) {
    for (std::size_t g = 0; g + 1 < group_start_.size(); ++g) {
      const std::size_t begin = group_start_[g];
      const std::size_t t = group_start_[g + 1] - begin;
      count(&WorkCounter::query, counter_.get());
      if (t == 0) continue;
      const double bound = group_bound(g);
      visit_jump_candidates(t, bound, rng, [&](std::size_t i) {
        const Slot& s = slots_[begin + i];
        count(&WorkCounter::query, counter_.get());
        if (rng.next_unit() * bound < s.p) sink(s.id);
      });
    }
  }

  SampleSubset query(RandomSource& rng) {
    SampleSubset out;
    query(rng, [&](ElementId id) { out.push_back(id); });
    return out;
  }

  WorkCounter& counters() noexcept { return *counter_; }
  const WorkCounter& counters() const noexcept { return *counter_; }

  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) + members_.memory_bytes() + vector_bytes(slots_) +
           vector_bytes(group_start_);
  }

  void check_invariants() const {
    members_.check_invariants("RebuildReductionSampler");
    if (slots_.size() != members_.size()) throw InvariantError("RebuildReductionSampler: stale table");
    if (slots_.empty()) return;
    CompensatedSum sum;
    for (std::size_t g = 0; g + 1 < group_start_.size(); ++g) {
      for (std::size_t i = group_start_[g]; i < group_start_[g + 1]; ++i) {
        const double p = slots_[i].p;
        if (group_of(p) != g) throw InvariantError("RebuildReductionSampler: slot in wrong group");
        if (p != probability(slots_[i].id)) throw InvariantError("RebuildReductionSampler: stale probability");
        sum.add(p);
      }
    }
    if (total_weight() > 0.0 && std::abs(sum.value() - c_) > 1e-9) throw InvariantError("RebuildReductionSampler: probabilities do not sum to c");
  }

 private:
  static double checked(double c) {
    require_valid_c(c, "RebuildReductionSampler");
    return c;
  }

  // Group g holds p in (2^-(g+1), 2^-g]; the last group takes everything
  // at or below its threshold, which is at most 1/n.
  double group_bound(std::size_t g) const { return std::ldexp(1.0, -static_cast<int>(g)); }

  std::size_t group_of(double p) const noexcept {
    if (!(p > 0.0)) return last_group_;
    int e = 0;
    const double m = std::frexp(p, &e);  // p = m 2^e, m in [0.5, 1)
    const int g = m == 0.5 ? 1 - e : -e;
    return std::min(static_cast<std::size_t>(std::max(g, 0)), last_group_);
  }

  void rebuild() {
    const std::size_t n = members_.size();
    count(&WorkCounter::update, counter_.get(), n + 1);
    count(&WorkCounter::rebuild, counter_.get(), n);
    slots_.clear();
    group_start_.clear();
    if (n == 0) return;
    last_group_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
    std::vector<std::size_t> fill(last_group_ + 2, 0);
    const double total = total_weight();
    std::vector<Slot> unsorted;
    unsorted.reserve(n);
    for (const auto& e : members_.entries()) {
      const double p = total > 0.0 ? std::min(1.0, c_ * e.weight / total) : 0.0;
      unsorted.push_back({e.id, p});
      ++fill[group_of(p) + 1];
    }
    for (std::size_t g = 1; g < fill.size(); ++g) fill[g] += fill[g - 1];
    group_start_ = fill;
    slots_.resize(n);
    for (const Slot& s : unsorted) slots_[fill[group_of(s.p)]++] = s;
  }

  double c_;
  detail::MemberArray members_;
  std::vector<Slot> slots_;
  std::vector<std::size_t> group_start_;
  std::size_t last_group_ = 0;
  std::unique_ptr<WorkCounter> counter_;
};

}  // namespace dips
