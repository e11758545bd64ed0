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

// Benchmark drivers: weight generators, weights files, and the runs behind
// the dips_bench tool. Every run is deterministic given its config except
// for the wall-clock columns.

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <vector>

#include "dips/baselines.hpp"
#include "dips/core.hpp"
#include "dips/dips_index.hpp"
#include "dips/stats_verify.hpp"

namespace dips::bench {

enum class Distribution { kExp, kNormal, kHalfNormal, kLogNormal };
enum class Method { kDips, kNaive, kRebuildReduction };

inline constexpr Distribution kAllDistributions[] = {Distribution::kExp, Distribution::kNormal,
                                                     Distribution::kHalfNormal,
                                                     Distribution::kLogNormal};

inline std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::kExp: return "exp";
    case Distribution::kNormal: return "normal";
    case Distribution::kHalfNormal: return "halfnormal";
    case Distribution::kLogNormal: return "lognormal";
  }
  return "?";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kDips: return "dips";
    case Method::kNaive: return "naive";
    case Method::kRebuildReduction: return "rebuild-reduction";
  }
  return "?";
}

inline Distribution parse_distribution(std::string_view s) {
  for (Distribution d : kAllDistributions) {
    if (s == to_string(d)) return d;
  }
  throw DomainError("unknown distribution '" + std::string(s) +
                    "' (expected exp, normal, halfnormal or lognormal)");
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::kDips, Method::kNaive, Method::kRebuildReduction}) {
    if (s == to_string(m)) return m;
  }
  throw DomainError("unknown method '" + std::string(s) +
                    "' (expected dips, naive or rebuild-reduction)");
}

// ---------------------------------------------------------------------------
// Weights

/// One weight from d. Exponential has rate 1; normal and half-normal have
/// sigma sqrt(10) around 0; log-normal has mu 0 and sigma sqrt(ln 2).
/// Normal draws are repeated until positive, as are the rare draws of
/// other laws that are not valid weights (zero or subnormal).
template <class Engine>
double draw_weight(Distribution d, Engine& eng) {
  static const double kSigma = std::sqrt(10.0);
  static const double kLogSigma = std::sqrt(std::log(2.0));
  for (;;) {
    double w = 0.0;
    switch (d) {
      case Distribution::kExp: w = std::exponential_distribution<double>(1.0)(eng); break;
      case Distribution::kNormal: w = std::normal_distribution<double>(0.0, kSigma)(eng); break;
      case Distribution::kHalfNormal: w = std::abs(std::normal_distribution<double>(0.0, kSigma)(eng)); break;
      case Distribution::kLogNormal: w = std::lognormal_distribution<double>(0.0, kLogSigma)(eng); break;
    }
    if (is_valid_weight(w)) return w;
  }
}

inline std::vector<double> gen_weights(Distribution d, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("gen_weights: n must be at least 1");
  std::mt19937_64 eng(seed);
  std::vector<double> w(n);
  for (auto& x : w) x = draw_weight(d, eng);
  return w;
}

inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline void write_weights(std::ostream& out, std::span<const double> weights) {
  for (double w : weights) out << format_double(w) << '\n';
}

inline void write_weights(const std::string& path, std::span<const double> weights) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_weights(out, weights);
  if (!out) throw std::runtime_error(path + ": write failed");
}

/// One decimal weight per line. Blank lines, trailing garbage and invalid
/// weights are rejected with the line number.
inline std::vector<double> read_weights(std::istream& in, const std::string& name = "<input>") {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view s(line);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    double w = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), w);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected one decimal weight, got '" +
                       line + "'");
    }
    if (!is_valid_weight(w)) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": weight must be positive and finite");
    }
    out.push_back(w);
  }
  return out;
}

inline std::vector<double> read_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  return read_weights(in, path);
}

// ---------------------------------------------------------------------------
// Runs

struct BenchConfig {
  Method method = Method::kDips;
  Distribution dist = Distribution::kExp;
  std::size_t n = 10'000;
  double c = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t queries = 1'000'000;
  std::uint64_t updates = 1'000;
  std::vector<double> weights;  // initial weights; generated from dist when empty

  void validate() const {
    if (n == 0 && weights.empty()) throw DomainError("n must be at least 1");
    require_valid_c(c, "BenchConfig");
  }

  std::vector<double> initial_weights() const {
    return weights.empty() ? gen_weights(dist, n, seed) : weights;
  }
};

struct CorrectnessRow {
  std::uint64_t queries = 0;
  double max_abs_error = 0.0;
};

struct TradeoffRow {
  Method method = Method::kDips;
  double query_ns = 0.0;
  double update_ns = 0.0;
  double query_work = 0.0;
  double update_work = 0.0;
};

struct ScaleRow {
  Method method = Method::kDips;
  std::size_t n = 0;
  double ns_per_op = 0.0;
  double work_per_op = 0.0;
};

struct MemoryRow {
  Method method = Method::kDips;
  std::size_t n = 0;
  std::size_t bytes = 0;
  double bytes_per_element = 0.0;
};

using Members = std::vector<std::pair<ElementId, double>>;

inline Members as_members(std::span<const double> weights) {
  Members m;
  m.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) m.emplace_back(i, weights[i]);
  return m;
}

/// Calls fn(std::type_identity<Sampler>{}) for the sampler type of m.
template <class Fn>
void with_sampler_type(Method m, Fn&& fn) {
  switch (m) {
    case Method::kDips: fn(std::type_identity<DipsIndex>{}); return;
    case Method::kNaive: fn(std::type_identity<NaiveSampler>{}); return;
    case Method::kRebuildReduction: fn(std::type_identity<RebuildReductionSampler>{}); return;
  }
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ns(Clock::time_point start) {
  return std::chrono::duration<double, std::nano>(Clock::now() - start).count();
}

// Insert/delete workload over a live member list. Inserts take fresh ids
// above every existing one; deletes pick a uniform live member.
class Workload {
 public:
  Workload(Members members, Distribution dist, std::uint64_t seed)
      : members_(std::move(members)), dist_(dist), eng_(seed) {
    for (const auto& [id, w] : members_) next_id_ = std::max(next_id_, id + 1);
  }

  const Members& members() const noexcept { return members_; }

  template <class Sampler>
  void insert(Sampler& s) {
    const double w = draw_weight(dist_, eng_);
    s.insert(next_id_, w);
    members_.emplace_back(next_id_++, w);
  }

  template <class Sampler>
  void erase(Sampler& s) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, members_.size() - 1)(eng_);
    s.erase(members_[i].first);
    members_[i] = members_.back();
    members_.pop_back();
  }

  /// Alternates insertions and deletions, starting with an insertion.
  template <class Sampler>
  void mixed(Sampler& s, std::uint64_t ops) {
    for (std::uint64_t k = 0; k < ops; ++k) {
      if (k % 2 == 0 || members_.empty()) {
        insert(s);
      } else {
        erase(s);
      }
    }
  }

 private:
  Members members_;
  Distribution dist_;
  std::mt19937_64 eng_;
  ElementId next_id_ = 0;
};

inline std::vector<std::uint64_t> query_grid(std::uint64_t max_queries) {
  std::vector<std::uint64_t> grid;
  for (std::uint64_t q = 1000; q < max_queries; q *= 10) grid.push_back(q);
  grid.push_back(max_queries);
  return grid;
}

}  // namespace detail

/// Maximum absolute error against the exact probabilities after
/// updates/2 insertions followed by updates/2 deletions, at Q = 10^3,
/// 10^4, ... up to config.queries.
inline std::vector<CorrectnessRow> run_correctness(const BenchConfig& config) {
  config.validate();
  std::vector<CorrectnessRow> rows;
  with_sampler_type(config.method, [&]<class Sampler>(std::type_identity<Sampler>) {
    detail::Workload load(as_members(config.initial_weights()), config.dist, config.seed + 1);
    Sampler s(load.members(), config.c);
    for (std::uint64_t k = 0; k < config.updates / 2; ++k) load.insert(s);
    for (std::uint64_t k = 0; k < config.updates / 2 && !load.members().empty(); ++k) load.erase(s);
    const PpsInstance instance(load.members(), config.c);
    RandomSource rng(config.seed + 2);
    for (std::uint64_t q : detail::query_grid(config.queries)) {
      rows.push_back({q, max_abs_error(s, instance, q, rng).max_abs_error});
    }
  });
  return rows;
}

/// Mean cost of one query and of one update (alternating insert and
/// delete) for config.method at config.n.
inline TradeoffRow run_tradeoff(const BenchConfig& config) {
  config.validate();
  TradeoffRow row;
  row.method = config.method;
  with_sampler_type(config.method, [&]<class Sampler>(std::type_identity<Sampler>) {
    detail::Workload load(as_members(config.initial_weights()), config.dist, config.seed + 1);
    Sampler s(load.members(), config.c);
    RandomSource rng(config.seed + 2);
    s.counters().reset();
    auto start = detail::Clock::now();
    std::uint64_t sink_total = 0;
    for (std::uint64_t q = 0; q < config.queries; ++q) s.query(rng, [&](ElementId) { ++sink_total; });
    row.query_ns = config.queries ? detail::elapsed_ns(start) / config.queries : 0.0;
    row.query_work = config.queries ? double(s.counters().query) / config.queries : 0.0;
    s.counters().reset();
    start = detail::Clock::now();
    load.mixed(s, config.updates);
    row.update_ns = config.updates ? detail::elapsed_ns(start) / config.updates : 0.0;
    row.update_work = config.updates ? double(s.counters().update) / config.updates : 0.0;
  });
  return row;
}

/// Query cost per operation for each n.
inline std::vector<ScaleRow> run_scale_query(const BenchConfig& config, std::span<const std::size_t> sizes) {
  std::vector<ScaleRow> rows;
  for (std::size_t n : sizes) {
    BenchConfig at = config;
    at.n = n;
    at.weights.clear();
    at.updates = 0;
    const TradeoffRow t = run_tradeoff(at);
    rows.push_back({config.method, n, t.query_ns, t.query_work});
  }
  return rows;
}

/// Update cost per operation (alternating insert and delete) for each n.
inline std::vector<ScaleRow> run_scale_update(const BenchConfig& config, std::span<const std::size_t> sizes) {
  std::vector<ScaleRow> rows;
  for (std::size_t n : sizes) {
    BenchConfig at = config;
    at.n = n;
    at.weights.clear();
    at.queries = 0;
    const TradeoffRow t = run_tradeoff(at);
    rows.push_back({config.method, n, t.update_ns, t.update_work});
  }
  return rows;
}

/// Structure size right after building over n generated weights.
inline std::vector<MemoryRow> run_memory(const BenchConfig& config, std::span<const std::size_t> sizes) {
  std::vector<MemoryRow> rows;
  for (std::size_t n : sizes) {
    BenchConfig at = config;
    at.n = n;
    at.weights.clear();
    at.validate();
    with_sampler_type(config.method, [&]<class Sampler>(std::type_identity<Sampler>) {
      const Members m = as_members(gen_weights(at.dist, n, at.seed));
      const Sampler s(m, at.c);
      const std::size_t bytes = s.memory_bytes();
      rows.push_back({config.method, n, bytes, double(bytes) / double(n)});
    });
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

inline void write_csv(std::ostream& out, std::span<const CorrectnessRow> rows) {
  out << "queries,max_abs_error\n";
  for (const auto& r : rows) out << r.queries << ',' << format_double(r.max_abs_error) << '\n';
}

inline void write_csv(std::ostream& out, std::span<const TradeoffRow> rows) {
  out << "method,query_ns,update_ns,query_work,update_work\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << format_double(r.query_ns) << ',' << format_double(r.update_ns)
        << ',' << format_double(r.query_work) << ',' << format_double(r.update_work) << '\n';
  }
}

inline void write_csv(std::ostream& out, std::span<const ScaleRow> rows) {
  out << "method,n,ns_per_op,work_per_op\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.n << ',' << format_double(r.ns_per_op) << ','
        << format_double(r.work_per_op) << '\n';
  }
}

inline void write_csv(std::ostream& out, std::span<const MemoryRow> rows) {
  out << "method,n,bytes,bytes_per_element\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.n << ',' << r.bytes << ','
        << format_double(r.bytes_per_element) << '\n';
  }
}

}  // namespace dips::bench
