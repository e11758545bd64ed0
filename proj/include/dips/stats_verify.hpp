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

// Empirical checks of a sampler against exact inclusion probabilities:
// per-element frequencies, the maximum absolute error, and a chi-square
// test over the full subset distribution of small instances.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "dips/core.hpp"

namespace dips {

struct FrequencyTable {
  std::vector<ElementId> ids;
  std::vector<std::uint64_t> counts;  // parallel to ids
  std::uint64_t queries = 0;

  double frequency(std::size_t i) const {
    return queries == 0 ? 0.0 : static_cast<double>(counts[i]) / static_cast<double>(queries);
  }
};

struct ErrorReport {
  std::uint64_t queries = 0;
  double max_abs_error = 0.0;
};

/// Exact c * w / W for every member, in member order.
inline std::vector<double> exact_probabilities(const PpsInstance& instance) {
  const double total = instance.total_weight();
  std::vector<double> p;
  p.reserve(instance.size());
  for (const auto& [id, w] : instance.members) {
    p.push_back(total > 0.0 ? std::min(1.0, instance.c * w / total) : 0.0);
  }
  return p;
}

/// Probability of each subset of a small instance; bit i of the index
/// stands for member i.
inline std::vector<double> exact_subset_probabilities(std::span<const double> p) {
  if (p.size() > 20) throw DomainError("exact_subset_probabilities: too many elements");
  std::vector<double> law(std::size_t{1} << p.size());
  for (std::size_t mask = 0; mask < law.size(); ++mask) {
    double pr = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) pr *= (mask >> i & 1) ? p[i] : 1.0 - p[i];
    law[mask] = pr;
  }
  return law;
}

/// Runs `queries` draws of draw(sink) and counts each member's appearances.
/// Ids outside `ids` are counted nowhere.
template <class Draw>
FrequencyTable tally(Draw&& draw, std::span<const ElementId> ids, std::uint64_t queries) {
  FrequencyTable table;
  table.ids.assign(ids.begin(), ids.end());
  table.counts.assign(ids.size(), 0);
  std::unordered_map<ElementId, std::size_t> index;
  index.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  for (std::uint64_t q = 0; q < queries; ++q) {
    draw([&](ElementId id) {
      auto it = index.find(id);
      if (it != index.end()) ++table.counts[it->second];
    });
  }
  table.queries = queries;
  return table;
}

inline ErrorReport max_abs_error(const FrequencyTable& table, std::span<const double> truth) {
  if (truth.size() != table.counts.size()) throw DomainError("max_abs_error: size mismatch");
  ErrorReport report{table.queries, 0.0};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    report.max_abs_error = std::max(report.max_abs_error, std::abs(table.frequency(i) - truth[i]));
  }
  return report;
}

/// Runs Q queries of sampler.query(rng, sink) and reports the largest
/// deviation of an empirical inclusion frequency from c * w / W.
template <class Sampler>
ErrorReport max_abs_error(Sampler& sampler, const PpsInstance& instance, std::uint64_t queries,
                          RandomSource& rng) {
  if (queries == 0) throw DomainError("max_abs_error: need at least one query");
  std::vector<ElementId> ids;
  for (const auto& [id, w] : instance.members) ids.push_back(id);
  const FrequencyTable table =
      tally([&](auto&& sink) { sampler.query(rng, sink); }, ids, queries);
  return max_abs_error(table, exact_probabilities(instance));
}

/// Upper tail of the chi-square distribution.
inline double chi_square_survival(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

/// Pearson chi-square p-value of observed subset counts against exact
/// probabilities. Cells with probability zero must stay empty and do not
/// count towards the degrees of freedom.
inline double chi_square_p_value(std::span<const std::uint64_t> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw DomainError("chi_square_p_value: size mismatch");
  std::uint64_t total = 0;
  for (auto o : observed) total += o;
  double statistic = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(total);
    if (probs[i] <= 0.0) {
      if (observed[i] != 0) return 0.0;
      continue;
    }
    if (expected < 5.0) {
      throw DomainError("chi_square_p_value: expected count " + std::to_string(expected) +
                        " below 5 in cell " + std::to_string(i));
    }
    const double diff = static_cast<double>(observed[i]) - expected;
    statistic += diff * diff / expected;
    ++cells;
  }
  return chi_square_survival(statistic, cells - 1);
}

/// Subset counts for `trials` draws; draws that contain foreign or
/// repeated ids land in the extra last cell.
template <class Draw>
std::vector<std::uint64_t> subset_counts(Draw&& draw, std::span<const ElementId> ids,
                                         std::uint64_t trials) {
  if (ids.size() > 16) throw DomainError("subset_counts: at most 16 elements");
  const std::size_t cells = std::size_t{1} << ids.size();
  std::vector<std::uint64_t> counts(cells + 1, 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::size_t mask = 0;
    bool bad = false;
    draw([&](ElementId id) {
      const auto it = std::find(ids.begin(), ids.end(), id);
      if (it == ids.end()) {
        bad = true;
        return;
      }
      const std::size_t bit = std::size_t{1} << (it - ids.begin());
      bad |= (mask & bit) != 0;
      mask |= bit;
    });
    ++counts[bad ? cells : mask];
  }
  return counts;
}

/// Chi-square p-value of a sampler's subset distribution on an instance
/// of at most 4 members.
template <class Sampler>
double subset_chi_square(Sampler& sampler, const PpsInstance& instance, std::uint64_t trials,
                         RandomSource& rng) {
  if (instance.size() > 4) throw DomainError("subset_chi_square: at most 4 members");
  std::vector<ElementId> ids;
  for (const auto& [id, w] : instance.members) ids.push_back(id);
  const std::vector<double> p = exact_probabilities(instance);
  std::vector<double> law = exact_subset_probabilities(p);
  law.push_back(0.0);  // malformed draws
  const auto counts =
      subset_counts([&](auto&& sink) { sampler.query(rng, sink); }, ids, trials);
  return chi_square_p_value(counts, law);
}

struct SeedSweep {
  int runs = 0;
  int failures = 0;
};

/// Calls run(seed) for seeds first..first+runs-1 and counts p-values at or
/// below the threshold.
inline SeedSweep sweep_seeds(const std::function<double(std::uint64_t)>& run, int runs,
                             std::uint64_t first_seed = 1, double threshold = 0.001) {
  SeedSweep sweep;
  for (int i = 0; i < runs; ++i) {
    ++sweep.runs;
    if (!(run(first_seed + static_cast<std::uint64_t>(i)) > threshold)) ++sweep.failures;
  }
  return sweep;
}

}  // namespace dips
