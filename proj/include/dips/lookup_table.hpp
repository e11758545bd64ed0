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

// Table-lookup solver for small fixed universes. Weights above one are
// ceiled, the ceilings are packed into one radix-R integer (lambda), and a
// table A_lambda of subsets realizes the overestimated product law
//
//   p(T) = prod_{v in T} ceil_v / D * prod_{u not in T} (D - ceil_u) / D,
//   D = sum(ceil) - m_active,
//
// after which a per-element coin thins every v to c * w(v) / W exactly.
//
// Slot weight 0 marks an absent slot. Absent slots carry digit 0 and are
// left out of D, m_active and every subset, which gives the instance
// insert and delete on top of weight changes.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <list>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dips/core.hpp"

namespace dips {

using Lambda = unsigned __int128;

namespace detail {

inline std::optional<Lambda> checked_mul(Lambda a, Lambda b) {
  if (a != 0 && b > static_cast<Lambda>(-1) / a) return std::nullopt;
  return a * b;
}

inline std::optional<Lambda> checked_pow(Lambda base, std::size_t e) {
  Lambda r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    auto next = checked_mul(r, base);
    if (!next) return std::nullopt;
    r = *next;
  }
  return r;
}

}  // namespace detail

/// Positional radix encoding; digits[0] is the least significant digit.
inline Lambda encode_digits(std::span<const std::uint64_t> digits, std::uint64_t radix) {
  if (radix < 2) throw DomainError("encode_digits: radix must be at least 2");
  Lambda lambda = 0;
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (digits[i] >= radix) throw DomainError("encode_digits: digit out of range");
    auto shifted = detail::checked_mul(lambda, radix);
    if (!shifted || *shifted > static_cast<Lambda>(-1) - digits[i]) {
      throw RangeError("encode_digits: value exceeds 128 bits");
    }
    lambda = *shifted + digits[i];
  }
  return lambda;
}

inline std::vector<std::uint64_t> decode_digits(Lambda lambda, std::size_t m,
                                                std::uint64_t radix) {
  std::vector<std::uint64_t> digits(m);
  for (std::size_t i = 0; i < m; ++i) {
    digits[i] = static_cast<std::uint64_t>(lambda % radix);
    lambda /= radix;
  }
  return digits;
}

/// Replaces digit `index` (0 = least significant) of lambda in O(1)
/// arithmetic: floor(l / R^(i+1)) R^(i+1) + digit R^i + l mod R^i.
inline Lambda update_digit(Lambda lambda, std::size_t index, std::uint64_t digit,
                           std::uint64_t radix) {
  if (radix < 2 || digit >= radix) throw DomainError("update_digit: digit out of range");
  const auto low_pow = detail::checked_pow(radix, index);
  if (!low_pow) throw DomainError("update_digit: position out of range");
  const auto high_pow = detail::checked_mul(*low_pow, radix);
  const Lambda low = lambda % *low_pow;
  const Lambda high = high_pow ? (lambda / *high_pow) * *high_pow : 0;
  return high + static_cast<Lambda>(digit) * *low_pow + low;
}

/// Length of A_lambda, (sum(ceil) - m_active)^m_active, or nullopt when it
/// exceeds max_entries.
inline std::optional<std::uint64_t> subset_table_size(std::span<const std::uint64_t> ceil_digits,
                                                      std::uint64_t max_entries) {
  std::uint64_t total = 0;
  std::uint64_t active = 0;
  for (std::uint64_t d : ceil_digits) {
    if (d != 0) {
      total += d;
      ++active;
    }
  }
  const std::uint64_t base = total - active;
  std::uint64_t size = 1;
  for (std::uint64_t i = 0; i < active; ++i) {
    if (base != 0 && size > max_entries / base) return std::nullopt;
    size *= base;
  }
  if (size > max_entries) return std::nullopt;
  return size;
}

/// A_lambda as an array of subset bitmasks (bit v = slot v). Subset T
/// occupies exactly prod_{v in T} ceil_v * prod_{u not in T} (D - ceil_u)
/// consecutive entries; subsets appear in increasing bitmask order.
struct SubsetTable {
  std::vector<std::uint32_t> entries;

  std::size_t memory_bytes() const noexcept { return sizeof(*this) + vector_bytes(entries); }
};

inline std::optional<SubsetTable> build_subset_table(std::span<const std::uint64_t> ceil_digits,
                                                     std::uint64_t max_entries) {
  if (ceil_digits.size() > 32) return std::nullopt;
  std::uint32_t active_mask = 0;
  std::uint64_t total = 0;
  std::uint64_t active = 0;
  for (std::size_t v = 0; v < ceil_digits.size(); ++v) {
    if (ceil_digits[v] != 0) {
      active_mask |= std::uint32_t{1} << v;
      total += ceil_digits[v];
      ++active;
    }
  }
  if (active < 2) return std::nullopt;
  const auto size = subset_table_size(ceil_digits, max_entries);
  if (!size) return std::nullopt;
  const std::uint64_t base = total - active;

  SubsetTable table;
  table.entries.reserve(*size);
  // Walk the submasks of active_mask in increasing order.
  std::uint32_t mask = 0;
  while (true) {
    std::uint64_t entries = 1;
    for (std::size_t v = 0; v < ceil_digits.size(); ++v) {
      if ((active_mask >> v & 1U) == 0) continue;
      entries *= (mask >> v & 1U) ? ceil_digits[v] : base - ceil_digits[v];
    }
    table.entries.insert(table.entries.end(), entries, mask);
    if (mask == active_mask) break;
    mask = (mask - active_mask) & active_mask;
  }
  if (table.entries.size() != *size) {
    throw InvariantError("build_subset_table: entry counts do not sum to table size");
  }
  return table;
}

/// Least-recently-used cache of materialized tables under a byte budget.
/// Tables are shared by every lookup instance with the same (lambda, m,
/// radix); a cache is single-threaded.
class TableCache {
 public:
  struct Key {
    Lambda lambda;
    std::uint32_t m;
    std::uint64_t radix;
    bool operator==(const Key&) const = default;
  };

  explicit TableCache(std::size_t budget_bytes = std::size_t{64} << 20) : budget_(budget_bytes) {}

  std::size_t budget_bytes() const noexcept { return budget_; }
  std::size_t bytes() const noexcept { return bytes_; }
  std::size_t tables() const noexcept { return index_.size(); }

  std::shared_ptr<const SubsetTable> find(const Key& key) {
    auto it = index_.find(key);
    if (it == index_.end()) return nullptr;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->table;
  }

  /// Stores a freshly built table, evicting from the cold end. Returns
  /// nullptr if the table alone is over budget.
  std::shared_ptr<const SubsetTable> store(const Key& key, SubsetTable table) {
    const std::size_t size = table.memory_bytes();
    if (size > budget_) return nullptr;
    auto shared = std::make_shared<const SubsetTable>(std::move(table));
    lru_.push_front({key, shared, size});
    index_[key] = lru_.begin();
    bytes_ += size;
    while (bytes_ > budget_) {
      const Node& victim = lru_.back();
      bytes_ -= victim.bytes;
      index_.erase(victim.key);
      lru_.pop_back();
    }
    return shared;
  }

 private:
  struct Node {
    Key key;
    std::shared_ptr<const SubsetTable> table;
    std::size_t bytes;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      const auto lo = static_cast<std::uint64_t>(k.lambda);
      const auto hi = static_cast<std::uint64_t>(k.lambda >> 64);
      std::size_t h = std::hash<std::uint64_t>{}(lo);
      h ^= std::hash<std::uint64_t>{}(hi) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      h ^= std::hash<std::uint64_t>{}(k.radix * 31 + k.m) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      return h;
    }
  };

  std::size_t budget_;
  std::size_t bytes_ = 0;
  std::list<Node> lru_;
  std::unordered_map<Key, std::list<Node>::iterator, KeyHash> index_;
};

struct LookupConfig {
  int base = 2;                             // b
  int d = 3;                                // radix exponent factor: R = b^(d m)
  std::uint64_t max_table_entries = 4096;   // larger tables use the Bernoulli path
  std::size_t cache_budget_bytes = std::size_t{64} << 20;  // for an owned cache
};

class LookupInstance {
 public:
  enum class Path { kEmpty, kDirect, kFallback, kTable };
  enum class PathPolicy { kAuto, kForceFallback, kIgnoreBaseRule };

  LookupInstance() = default;

  LookupInstance(std::size_t m, double c, LookupConfig config = {},
                 std::shared_ptr<TableCache> cache = nullptr, WorkCounter* counter = nullptr)
      : m_(m),
        c_(c),
        config_(config),
        slots_(m, 0.0),
        ceil_(m, 0),
        cache_(std::move(cache)),
        counter_(counter) {
    require_valid_c(c, "LookupInstance");
    if (m == 0) throw DomainError("LookupInstance: universe must be nonempty");
    if (config.base < 2 || config.d < 1) throw DomainError("LookupInstance: bad b or d");
    const double exponent = static_cast<double>(config.d) * static_cast<double>(m);
    const auto radix = detail::checked_pow(static_cast<Lambda>(config.base),
                                           static_cast<std::size_t>(exponent));
    if (radix && *radix < (Lambda{1} << 62)) {
      radix_ = static_cast<std::uint64_t>(*radix);
      max_weight_ = static_cast<double>(radix_ - 1);
      lambda_valid_ = detail::checked_pow(static_cast<Lambda>(radix_), m).has_value();
    } else {
      radix_ = 0;
      // Ceilings must stay exact integers in a uint64 sum.
      max_weight_ = std::min(std::pow(static_cast<double>(config.base), exponent) - 1.0, 0x1.0p52);
      lambda_valid_ = false;
    }
  }

  std::size_t universe() const noexcept { return m_; }
  std::size_t size() const noexcept { return active_; }
  bool empty() const noexcept { return active_ == 0; }
  double c() const noexcept { return c_; }
  std::uint64_t radix() const noexcept { return radix_; }
  bool lambda_valid() const noexcept { return lambda_valid_; }
  Lambda lambda() const noexcept { return lambda_; }
  double max_weight() const noexcept { return max_weight_; }
  double total_weight() const noexcept { return total_.value(); }
  std::uint64_t ceiled_total() const noexcept { return ceil_total_; }
  std::span<const std::uint64_t> ceilings() const noexcept { return ceil_; }
  void set_path_policy(PathPolicy p) noexcept { policy_ = p; }
  void set_counter(WorkCounter* counter) noexcept { counter_ = counter; }

  bool contains(std::size_t slot) const { return slot < m_ && slots_[slot] != 0.0; }

  double weight(std::size_t slot) const {
    if (!contains(slot)) throw NotFoundError("LookupInstance: slot is absent");
    return slots_[slot];
  }

  void insert(std::size_t slot, double w) {
    check_slot(slot);
    if (slots_[slot] != 0.0) throw DuplicateError("LookupInstance::insert: slot occupied");
    check_weight(w);
    ++active_;
    assign(slot, w);
  }

  void erase(std::size_t slot) {
    if (!contains(slot)) throw NotFoundError("LookupInstance::erase: slot is absent");
    --active_;
    total_.subtract(slots_[slot]);
    ceil_total_ -= ceil_[slot];
    slots_[slot] = 0.0;
    set_digit(slot, 0);
    if (active_ == 0) total_.reset();
    count(&WorkCounter::update, counter_);
  }

  void change_weight(std::size_t slot, double w) {
    if (!contains(slot)) throw NotFoundError("LookupInstance::change_weight: slot is absent");
    check_weight(w);
    total_.subtract(slots_[slot]);
    ceil_total_ -= ceil_[slot];
    assign(slot, w);
  }

  /// Path the next query takes.
  Path path() const {
    if (active_ == 0) return Path::kEmpty;
    if (active_ == 1) return Path::kDirect;
    if (policy_ == PathPolicy::kForceFallback || !lambda_valid_ || m_ > 32) return Path::kFallback;
    if (policy_ == PathPolicy::kAuto && active_ < static_cast<std::size_t>(config_.base)) {
      return Path::kFallback;
    }
    const auto size = subset_table_size(ceil_, config_.max_table_entries);
    if (!size) return Path::kFallback;
    const std::size_t budget = cache_ ? cache_->budget_bytes() : config_.cache_budget_bytes;
    if (*size * sizeof(std::uint32_t) > budget) return Path::kFallback;
    return Path::kTable;
  }

  /// Calls sink(slot) for every slot in the sample. Each present slot v is
  /// included independently with probability c * w(v) / denominator.
  template <class Sink>
  void query(double denominator, RandomSource& rng, Sink&& sink) {
    count(&WorkCounter::query, counter_);
    if (active_ == 0) return;
    if (!(denominator > 0.0) || denominator < total_.value() * (1.0 - 1e-9)) {
      throw DomainError("LookupInstance::query: denominator below total weight");
    }
    const Path p = path();
    const double spread = static_cast<double>(ceil_total_ - active_);
    const double thin = c_ * spread / denominator;
    // thin > 1 would push the correction coin above one; scan instead.
    if (p == Path::kDirect || thin > 1.0) {
      for (std::size_t v = 0; v < m_; ++v) {
        if (slots_[v] == 0.0) continue;
        count(&WorkCounter::query, counter_);
        if (rng.next_unit() * denominator < c_ * slots_[v]) sink(v);
      }
      return;
    }
    if (p == Path::kTable) {
      const SubsetTable& table = current_table();
      const std::uint32_t mask = table.entries[rng.next_below(table.entries.size())];
      for (std::uint32_t bits = mask; bits != 0; bits &= bits - 1) {
        const auto v = static_cast<std::size_t>(std::countr_zero(bits));
        count(&WorkCounter::query, counter_);
        if (rng.next_unit() * static_cast<double>(ceil_[v]) < thin * slots_[v]) sink(v);
      }
      return;
    }
    for (std::size_t v = 0; v < m_; ++v) {
      if (slots_[v] == 0.0) continue;
      count(&WorkCounter::query, counter_);
      if (!(rng.next_unit() * spread < static_cast<double>(ceil_[v]))) continue;
      if (rng.next_unit() * static_cast<double>(ceil_[v]) < thin * slots_[v]) sink(v);
    }
  }

  std::vector<std::size_t> query(double denominator, RandomSource& rng) {
    std::vector<std::size_t> out;
    query(denominator, rng, [&](std::size_t v) { out.push_back(v); });
    return out;
  }

  /// The materialized A_lambda for the current ceilings, building it if
  /// needed. Only valid when path() == Path::kTable.
  const SubsetTable& current_table() {
    if (table_ && table_lambda_ == lambda_) return *table_;
    if (!cache_) cache_ = std::make_shared<TableCache>(config_.cache_budget_bytes);
    const TableCache::Key key{lambda_, static_cast<std::uint32_t>(m_), radix_};
    table_ = cache_->find(key);
    if (!table_) {
      auto built = build_subset_table(ceil_, config_.max_table_entries);
      if (!built) throw InvariantError("LookupInstance: table requested off the table path");
      count(&WorkCounter::table_build, counter_, built->entries.size());
      auto stored = cache_->store(key, *built);
      table_ = stored ? std::move(stored)
                      : std::make_shared<const SubsetTable>(std::move(*built));
    }
    table_lambda_ = lambda_;
    return *table_;
  }

  std::size_t memory_bytes() const noexcept {
    return sizeof(*this) + vector_bytes(slots_) + vector_bytes(ceil_);
  }

  void check_invariants() const {
    std::size_t active = 0;
    std::uint64_t ceil_total = 0;
    CompensatedSum total;
    for (std::size_t v = 0; v < m_; ++v) {
      if (slots_[v] == 0.0) {
        if (ceil_[v] != 0) throw InvariantError("LookupInstance: absent slot with nonzero digit");
        continue;
      }
      ++active;
      if (!(slots_[v] > 1.0) || slots_[v] > max_weight_) {
        throw InvariantError("LookupInstance: weight outside (1, R - 1]");
      }
      if (ceil_[v] != static_cast<std::uint64_t>(std::ceil(slots_[v]))) {
        throw InvariantError("LookupInstance: stale ceiling");
      }
      ceil_total += ceil_[v];
      total.add(slots_[v]);
    }
    if (active != active_ || ceil_total != ceil_total_) {
      throw InvariantError("LookupInstance: counts or ceiled total out of sync");
    }
    if (std::abs(total.value() - total_.value()) > 1e-9 * std::max(1.0, total.value())) {
      throw InvariantError("LookupInstance: total weight drifted");
    }
    if (lambda_valid_ && encode_digits(ceil_, radix_) != lambda_) {
      throw InvariantError("LookupInstance: lambda does not encode the ceilings");
    }
    if (active_ >= 2) {
      for (std::size_t v = 0; v < m_; ++v) {
        if (ceil_[v] > ceil_total_ - active_) {
          throw InvariantError("LookupInstance: overestimated probability above one");
        }
      }
    }
  }

 private:
  void check_slot(std::size_t slot) const {
    if (slot >= m_) throw DomainError("LookupInstance: slot outside the universe");
  }

  void check_weight(double w) const {
    if (!(w > 1.0) || !(w <= max_weight_) || !std::isfinite(w)) {
      throw DomainError("LookupInstance: weight must lie in (1, R - 1]");
    }
  }

  void assign(std::size_t slot, double w) {
    slots_[slot] = w;
    const auto digit = static_cast<std::uint64_t>(std::ceil(w));
    total_.add(w);
    ceil_total_ += digit;
    set_digit(slot, digit);
    if (active_ == 1) total_.reset(w);
    count(&WorkCounter::update, counter_);
  }

  void set_digit(std::size_t slot, std::uint64_t digit) {
    if (ceil_[slot] == digit) return;
    ceil_[slot] = digit;
    if (lambda_valid_) lambda_ = update_digit(lambda_, slot, digit, radix_);
  }

  std::size_t m_ = 0;
  double c_ = 1.0;
  LookupConfig config_{};
  std::vector<double> slots_;
  std::vector<std::uint64_t> ceil_;
  std::size_t active_ = 0;
  CompensatedSum total_;
  std::uint64_t ceil_total_ = 0;
  std::uint64_t radix_ = 0;
  double max_weight_ = 0.0;
  bool lambda_valid_ = false;
  Lambda lambda_ = 0;
  PathPolicy policy_ = PathPolicy::kAuto;
  std::shared_ptr<TableCache> cache_;
  std::shared_ptr<const SubsetTable> table_;
  Lambda table_lambda_ = 0;
  WorkCounter* counter_ = nullptr;
};

}  // namespace dips
