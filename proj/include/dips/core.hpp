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

// Shared vocabulary for the dips library: identifiers, weights, errors,
// randomness, and the two elementary sampling formulas every layer uses.

#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#ifdef DIPS_CHECKED
#define DIPS_DEBUG_CHECK(cond, msg)                                   \
  do {                                                                \
    if (!(cond)) throw ::dips::InvariantError(std::string(msg));      \
  } while (false)
#else
#define DIPS_DEBUG_CHECK(cond, msg) \
  do {                              \
  } while (false)
#endif

namespace dips {

using ElementId = std::uint64_t;
using BucketIndex = std::int32_t;
using ChunkIndex = std::int32_t;

/// A sampled subset. Never contains duplicates.
using SampleSubset = std::vector<ElementId>;

// ---------------------------------------------------------------------------
// Errors

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

class DuplicateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyIndexError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Weights

/// True for weights the samplers accept: positive, finite, not subnormal.
inline bool is_valid_weight(double w) noexcept {
  return std::isnormal(w) && w > 0.0;
}

inline void require_valid_weight(double w, const char* where) {
  if (!is_valid_weight(w)) {
    throw DomainError(std::string(where) +
                      ": weight must be positive, finite and normal");
  }
}

/// Weights accepted at the public index boundary, where zero is allowed.
inline void require_valid_public_weight(double w, const char* where) {
  if (w != 0.0) require_valid_weight(w, where);
}

inline void require_valid_c(double c, const char* where) {
  if (!(c > 0.0 && c <= 1.0)) {
    throw DomainError(std::string(where) + ": c must lie in (0, 1]");
  }
}

/// Neumaier-compensated running sum. Supports subtraction by adding the
/// negated value, which keeps long insert/delete sequences close to the
/// exactly recomputed total.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double v) : sum_(v) {}

  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void subtract(double x) noexcept { add(-x); }
  void reset(double v = 0.0) noexcept {
    sum_ = v;
    comp_ = 0.0;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Randomness

/// Seedable 64-bit generator. Also a UniformRandomBitGenerator, so standard
/// distributions can draw from it.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed = 0x5eed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1).
  double next_open_unit() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) {
    return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(engine_);
  }

  void seed(std::uint64_t s) { engine_.seed(s); }

 private:
  std::mt19937_64 engine_;
};

/// Truncated geometric variate floor(log(1 - q*u) / log(1 - p)) for a
/// given uniform u in [0, 1). With q = 1 this is the number of failures
/// before the first success of Bernoulli(p) trials.
inline double truncated_geometric_from_unit(double p, double q, double u) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("truncated_geometric: p must lie in (0, 1)");
  }
  if (!(q > 0.0 && q <= 1.0)) {
    throw DomainError("truncated_geometric: q must lie in (0, 1]");
  }
  return std::floor(std::log1p(-q * u) / std::log1p(-p));
}

inline std::uint64_t truncated_geometric(double p, double q, RandomSource& rng) {
  const double g = truncated_geometric_from_unit(p, q, rng.next_unit());
  constexpr double kCap = 0x1.0p63;
  return g >= kCap ? std::numeric_limits<std::uint64_t>::max()
                   : static_cast<std::uint64_t>(g);
}

// ---------------------------------------------------------------------------
// Problem instances

/// A plain weighted set together with c and its total weight.
struct PpsInstance {
  std::vector<std::pair<ElementId, double>> members;
  double c = 1.0;

  PpsInstance() = default;
  PpsInstance(std::vector<std::pair<ElementId, double>> m, double c_value)
      : members(std::move(m)), c(c_value) {
    require_valid_c(c, "PpsInstance");
    for (const auto& [id, w] : members) {
      require_valid_public_weight(w, "PpsInstance");
    }
  }

  std::size_t size() const noexcept { return members.size(); }

  double total_weight() const noexcept {
    CompensatedSum s;
    for (const auto& [id, w] : members) s.add(w);
    return s.value();
  }
};

/// c * w(v) / W for a member v.
inline double inclusion_probability(const PpsInstance& instance, ElementId v) {
  const double total = instance.total_weight();
  for (const auto& [id, w] : instance.members) {
    if (id == v) {
      if (!(total > 0.0)) throw DomainError("inclusion_probability: W is zero");
      return std::min(1.0, instance.c * w / total);
    }
  }
  throw NotFoundError("inclusion_probability: unknown element");
}

// ---------------------------------------------------------------------------
// Instrumentation

/// Deterministic work tallies. Every structure increments the counter it
/// was handed; a null pointer disables counting.
struct WorkCounter {
  std::uint64_t query = 0;        // candidates, coins and probes during queries
  std::uint64_t update = 0;       // structural touches during updates, rebuilds included
  std::uint64_t rebuild = 0;      // elements processed by rebuilds
  std::uint64_t table_build = 0;  // lookup-table entries materialized

  void reset() noexcept { *this = WorkCounter{}; }
};

inline void count(std::uint64_t WorkCounter::*field, WorkCounter* wc,
                  std::uint64_t n = 1) noexcept {
  if (wc != nullptr) wc->*field += n;
}

// ---------------------------------------------------------------------------
// Memory accounting helpers (estimates of heap bytes)

template <class T>
std::size_t vector_bytes(const std::vector<T>& v) noexcept {
  return v.capacity() * sizeof(T);
}

template <class K, class V, class H, class E, class A>
std::size_t hash_map_bytes(const std::unordered_map<K, V, H, E, A>& m) noexcept {
  // One bucket pointer per bucket plus one node (next pointer and value,
  // rounded up to the allocator's 16-byte granularity) per entry.
  const std::size_t node = ((sizeof(void*) + sizeof(std::pair<const K, V>) + 15) / 16) * 16;
  return m.bucket_count() * sizeof(void*) + m.size() * node;
}

}  // namespace dips
