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

// Overestimate-and-jump sampler for a member set whose weights share a
// common upper bound. Candidates are located with geometric skips under an
// overestimated per-element probability and then thinned by rejection.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dips/core.hpp"

namespace dips {

enum class JumpScheme {
  // First candidate from an untruncated geometric, later ones at
  // j + 1 + Geometric. Every position is a candidate with probability p.
  kExact,
  // Gate the whole scan by one coin with q = 1 - (1 - p)^t and draw the
  // first candidate from the geometric truncated to [0, t). Same law as
  // kExact, one fewer logarithm when the scan is usually empty.
  kGated,
};

/// Probability that at least one of t positions is a candidate when each
/// is one independently with probability p: 1 - (1 - p)^t.
inline double any_candidate_probability(std::size_t t, double p) {
  if (t == 0 || !(p > 0.0)) return 0.0;
  if (p >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(t) * std::log1p(-p));
}

namespace detail {

template <class Fn>
void continue_jumps(double j, double limit, double log_fail, RandomSource& rng, Fn& fn) {
  while (j < limit) {
    fn(static_cast<std::size_t>(j));
    j += 1.0 + std::floor(std::log1p(-rng.next_unit()) / log_fail);
  }
}

}  // namespace detail

/// Calls fn(i) for each candidate position among t, conditioned on there
/// being at least one. The first position comes from the geometric law
/// truncated to [0, t), the rest from ordinary jumps.
template <class Fn>
void visit_jump_candidates_given_any(std::size_t t, double p, RandomSource& rng, Fn&& fn) {
  if (t == 0 || !(p > 0.0)) return;
  if (p >= 1.0) {
    for (std::size_t i = 0; i < t; ++i) fn(i);
    return;
  }
  const double limit = static_cast<double>(t);
  const double log_fail = std::log1p(-p);
  const double q = any_candidate_probability(t, p);
  const double first = std::min(truncated_geometric_from_unit(p, q, rng.next_unit()), limit - 1.0);
  detail::continue_jumps(first, limit, log_fail, rng, fn);
}

/// Calls fn(i) for every candidate position i in [0, t), where each
/// position is a candidate independently with probability p.
template <class Fn>
void visit_jump_candidates(std::size_t t, double p, RandomSource& rng, Fn&& fn,
                           JumpScheme scheme = JumpScheme::kExact) {
  if (t == 0 || !(p > 0.0)) return;
  if (p >= 1.0) {
    for (std::size_t i = 0; i < t; ++i) fn(i);
    return;
  }
  if (scheme == JumpScheme::kGated) {
    if (rng.next_unit() < any_candidate_probability(t, p)) {
      visit_jump_candidates_given_any(t, p, rng, fn);
    }
    return;
  }
  const double log_fail = std::log1p(-p);
  const double first = std::floor(std::log1p(-rng.next_unit()) / log_fail);
  detail::continue_jumps(first, static_cast<double>(t), log_fail, rng, fn);
}

template <class Key>
class JumpSampler {
 public:
  struct Entry {
    Key id;
    double weight;
  };

  JumpSampler() = default;

  /// weight_bound may be +infinity for a sampler that is only queried
  /// through query_filtered with an explicit bound.
  JumpSampler(double weight_bound, double c, WorkCounter* counter = nullptr)
      : bound_(weight_bound), c_(c), counter_(counter) {
    require_valid_c(c, "JumpSampler");
    if (!(weight_bound > 0.0)) throw DomainError("JumpSampler: weight bound must be positive");
  }

  JumpSampler(std::span<const std::pair<Key, double>> members, double weight_bound,
              double c, WorkCounter* counter = nullptr)
      : JumpSampler(weight_bound, c, counter) {
    entries_.reserve(members.size());
    position_.reserve(members.size());
    for (const auto& [id, w] : members) insert(id, w);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  double total_weight() const noexcept { return total_.value(); }
  double weight_bound() const noexcept { return bound_; }
  double c() const noexcept { return c_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  void set_counter(WorkCounter* counter) noexcept { counter_ = counter; }

  bool contains(const Key& id) const { return position_.count(id) != 0; }

  double weight(const Key& id) const { return entries_[position_of(id)].weight; }

  /// Position of id in the backing array.
  std::size_t position_of(const Key& id) const {
    auto it = position_.find(id);
    if (it == position_.end()) throw NotFoundError("JumpSampler: unknown element");
    return it->second;
  }

  void insert(const Key& id, double w) {
    require_valid_weight(w, "JumpSampler::insert");
    if (w > bound_) throw DomainError("JumpSampler::insert: weight exceeds bound");
    auto [it, fresh] = position_.try_emplace(id, entries_.size());
    if (!fresh) throw DuplicateError("JumpSampler::insert: element already present");
    entries_.push_back({id, w});
    total_.add(w);
    count(&WorkCounter::update, counter_);
  }

  void erase(const Key& id) {
    auto it = position_.find(id);
    if (it == position_.end()) throw NotFoundError("JumpSampler::erase: unknown element");
    const std::size_t i = it->second;
    total_.subtract(entries_[i].weight);
    position_.erase(it);
    if (i + 1 != entries_.size()) {
      entries_[i] = entries_.back();
      position_[entries_[i].id] = i;
    }
    entries_.pop_back();
    if (entries_.empty()) total_.reset();
    if (entries_.capacity() > 16 && entries_.size() * 4 < entries_.capacity()) {
      entries_.shrink_to_fit();
    }
    count(&WorkCounter::update, counter_);
  }

  void change_weight(const Key& id, double w) {
    require_valid_weight(w, "JumpSampler::change_weight");
    if (w > bound_) throw DomainError("JumpSampler::change_weight: weight exceeds bound");
    Entry& e = entries_[position_of(id)];
    total_.subtract(e.weight);
    total_.add(w);
    e.weight = w;
    if (entries_.size() == 1) total_.reset(w);
    count(&WorkCounter::update, counter_);
  }

  /// Includes each member v independently with probability
  /// c * w(v) / denominator. Requires denominator >= total_weight().
  template <class Sink>
  void query(double denominator, RandomSource& rng, Sink&& sink,
             JumpScheme scheme = JumpScheme::kExact) const {
    if (!std::isfinite(bound_)) {
      throw DomainError("JumpSampler::query: unbounded sampler needs query_filtered");
    }
    sample(denominator, bound_, [](const Key&, double) { return true; }, rng, sink, scheme);
  }

  std::vector<Key> query(double denominator, RandomSource& rng,
                         JumpScheme scheme = JumpScheme::kExact) const {
    std::vector<Key> out;
    query(denominator, rng, [&](const Key& k) { out.push_back(k); }, scheme);
    return out;
  }

  /// As query, restricted to members with keep(id, weight). Every kept
  /// member must weigh at most candidate_bound; the rest are discarded at
  /// the rejection step.
  template <class Keep, class Sink>
  void query_filtered(double denominator, double candidate_bound, Keep&& keep,
                      RandomSource& rng, Sink&& sink,
                      JumpScheme scheme = JumpScheme::kExact) const {
    sample(denominator, candidate_bound, keep, rng, sink, scheme);
  }

  template <class Keep>
  std::vector<Key> query_filtered(double denominator, double candidate_bound, Keep&& keep,
                                  RandomSource& rng) const {
    std::vector<Key> out;
    query_filtered(denominator, candidate_bound, keep, rng,
                   [&](const Key& k) { out.push_back(k); });
    return out;
  }

  /// Probability that query(denominator) with this candidate bound sees at
  /// least one candidate.
  double any_candidate_probability(double denominator, double candidate_bound) const {
    return ::dips::any_candidate_probability(entries_.size(), candidate_probability(denominator, candidate_bound));
  }

  /// The query law conditioned on at least one candidate. Running it after
  /// an independent coin of probability any_candidate_probability() gives
  /// exactly the law of query(); a caller holding a coarser coin of
  /// probability g >= any_candidate_probability() thins it first.
  template <class Sink>
  void query_given_candidate(double denominator, double candidate_bound, RandomSource& rng,
                             Sink&& sink) const {
    count(&WorkCounter::query, counter_);
    if (entries_.empty()) return;
    check_denominator(denominator);
    const double p_bar = candidate_probability(denominator, candidate_bound);
    const double scale = c_ / denominator;
    visit_jump_candidates_given_any(entries_.size(), p_bar, rng, [&](std::size_t i) {
      count(&WorkCounter::query, counter_);
      const Entry& e = entries_[i];
      DIPS_DEBUG_CHECK(e.weight <= candidate_bound * (1.0 + 1e-12),
                       "JumpSampler: member above candidate bound");
      if (p_bar * rng.next_unit() < scale * e.weight) sink(e.id);
    });
  }

  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) + vector_bytes(entries_) + hash_map_bytes(position_);
  }

  void check_invariants() const {
    if (position_.size() != entries_.size()) {
      throw InvariantError("JumpSampler: position map and array sizes differ");
    }
    CompensatedSum s;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const Entry& e = entries_[i];
      auto it = position_.find(e.id);
      if (it == position_.end() || it->second != i) {
        throw InvariantError("JumpSampler: position map disagrees with array");
      }
      if (e.weight > bound_) throw InvariantError("JumpSampler: weight above bound");
      s.add(e.weight);
    }
    const double expect = s.value();
    if (std::abs(expect - total_.value()) > 1e-9 * std::max(1.0, std::abs(expect))) {
      throw InvariantError("JumpSampler: total weight drifted");
    }
  }

 private:
  template <class Keep, class Sink>
  void sample(double denominator, double candidate_bound, Keep&& keep, RandomSource& rng,
              Sink& sink, JumpScheme scheme) const {
    count(&WorkCounter::query, counter_);
    if (entries_.empty()) return;
    check_denominator(denominator);
    const double p_bar = candidate_probability(denominator, candidate_bound);
    const double scale = c_ / denominator;
    visit_jump_candidates(
        entries_.size(), p_bar, rng,
        [&](std::size_t i) {
          count(&WorkCounter::query, counter_);
          const Entry& e = entries_[i];
          if (!keep(e.id, e.weight)) return;
          DIPS_DEBUG_CHECK(e.weight <= candidate_bound * (1.0 + 1e-12),
                           "JumpSampler: kept member above candidate bound");
          if (p_bar * rng.next_unit() < scale * e.weight) sink(e.id);
        },
        scheme);
  }

  void check_denominator(double denominator) const {
    if (!(denominator > 0.0) || denominator < total_.value() * (1.0 - 1e-9)) {
      throw DomainError("JumpSampler::query: denominator below member total");
    }
  }

  double candidate_probability(double denominator, double candidate_bound) const {
    return std::min(1.0, c_ * candidate_bound / denominator);
  }

  std::vector<Entry> entries_;
  std::unordered_map<Key, std::size_t> position_;
  CompensatedSum total_;
  double bound_ = std::numeric_limits<double>::infinity();
  double c_ = 1.0;
  WorkCounter* counter_ = nullptr;
};

}  // namespace dips
