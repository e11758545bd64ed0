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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dips/dips_index.hpp"
#include "dips/stats_verify.hpp"
#include "oracles.hpp"

namespace {

using dips::DipsIndex;
using dips::RandomSource;
using Members = std::vector<std::pair<dips::ElementId, double>>;

constexpr int kTrials = 1'000'000;

std::vector<double> exponential_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::exponential_distribution<double> dist(1.0);
  std::vector<double> w(n);
  for (auto& x : w) {
    do x = dist(eng);
    while (!dips::is_valid_weight(x));
  }
  return w;
}

Members as_members(const std::vector<double>& w) {
  Members m;
  for (std::size_t i = 0; i < w.size(); ++i) m.emplace_back(i, w[i]);
  return m;
}

TEST(Dips, EmptyIndex) {
  DipsIndex idx;
  RandomSource rng(1);
  EXPECT_TRUE(idx.query(rng).empty());
  const auto s = idx.stats();
  EXPECT_EQ(s.n, 0u);
  EXPECT_EQ(s.total_weight, 0.0);
  idx.check_invariants();
}

TEST(Dips, RejectsBadInput) {
  EXPECT_THROW(DipsIndex(0.0), dips::DomainError);
  EXPECT_THROW(DipsIndex(1.1), dips::DomainError);
  DipsIndex idx;
  EXPECT_THROW(idx.insert(1, -1.0), dips::DomainError);
  EXPECT_THROW(idx.insert(1, NAN), dips::DomainError);
  idx.insert(1, 2.0);
  EXPECT_THROW(idx.insert(1, 3.0), dips::DuplicateError);
  EXPECT_THROW(idx.erase(2), dips::NotFoundError);
  EXPECT_THROW(idx.change_weight(2, 1.0), dips::NotFoundError);
  const Members dup{{1, 1.0}, {1, 2.0}};
  EXPECT_THROW(idx.init(dup), dips::DuplicateError);
}

TEST(Dips, ZeroWeightNeverSampled) {
  const Members m{{5, 0.0}};
  DipsIndex idx(m);
  EXPECT_EQ(idx.size(), 1u);
  EXPECT_EQ(idx.stats().zero_weight, 1u);
  RandomSource rng(2);
  for (int i = 0; i < kTrials; ++i) ASSERT_TRUE(idx.query(rng).empty());

  idx.insert(6, 1.0);
  std::uint64_t zero_hits = 0;
  for (int i = 0; i < 100'000; ++i) {
    idx.query(rng, [&](dips::ElementId id) { zero_hits += id == 5; });
  }
  EXPECT_EQ(zero_hits, 0u);
  idx.check_invariants();
}

TEST(Dips, SingleElementAlwaysSampled) {
  DipsIndex idx;
  idx.insert(42, 3.7);
  RandomSource rng(3);
  for (int i = 0; i < 10'000; ++i) ASSERT_EQ(idx.query(rng), dips::SampleSubset{42});
}

TEST(Dips, ThreeElementSubsetLaw) {
  for (std::size_t scan_below : {0u, 4u}) {
    dips::DipsConfig config;
    config.scan_below = scan_below;
    DipsIndex idx(Members{{1, 1.0}, {2, 2.0}, {3, 3.0}}, 1.0, config);
    RandomSource rng(4);
    dips::PpsInstance inst({{1, 1.0}, {2, 2.0}, {3, 3.0}}, 1.0);
    EXPECT_GT(dips::subset_chi_square(idx, inst, kTrials, rng), 0.001) << scan_below;
  }
}

TEST(Dips, WorkedWeightsMarginal) {
  dips::DipsConfig config;
  config.scan_below = 0;
  DipsIndex idx(Members{{1, 2.9}, {2, 7.0}, {3, 3.1}, {4, 4.7}}, 1.0, config);
  RandomSource rng(5);
  const std::vector<dips::ElementId> ids{1, 2, 3, 4};
  const auto table = dips::tally([&](auto&& sink) { idx.query(rng, sink); }, ids, kTrials);
  EXPECT_TRUE(dips_oracle::within_sigmas(table.frequency(0), 2.9 / 17.7, kTrials, 3.5));
}

TEST(Dips, HeavyInsertion) {
  const std::size_t n = 100;
  const double c = 0.6;
  Members m;
  for (std::size_t i = 1; i <= n; ++i) m.emplace_back(i, static_cast<double>(i));
  DipsIndex idx(m, c);
  const double heavy = std::pow(static_cast<double>(n), 3);
  idx.insert(0, heavy);
  const double expect = c * heavy / (n * (n + 1) / 2.0 + heavy);
  EXPECT_NEAR(idx.probability(0), expect, 1e-15);
  RandomSource rng(6);
  const std::vector<dips::ElementId> ids{0, 1, n};
  const auto table = dips::tally([&](auto&& sink) { idx.query(rng, sink); }, ids, kTrials);
  EXPECT_TRUE(dips_oracle::within_sigmas(table.frequency(0), expect, kTrials, 3.5));
  const double light = c * n / (n * (n + 1) / 2.0 + heavy);
  EXPECT_TRUE(dips_oracle::within_sigmas(table.frequency(2), light, kTrials, 3.5));
  idx.check_invariants();
}

TEST(Dips, ZeroAndBackRestoresLaw) {
  DipsIndex idx(Members{{1, 1.0}, {2, 2.0}, {3, 3.0}});
  idx.change_weight(2, 0.0);
  EXPECT_EQ(idx.stats().zero_weight, 1u);
  RandomSource rng(7);
  dips::PpsInstance without({{1, 1.0}, {2, 0.0}, {3, 3.0}}, 1.0);
  EXPECT_GT(dips::subset_chi_square(idx, without, kTrials, rng), 0.001);
  idx.change_weight(2, 2.0);
  dips::PpsInstance with({{1, 1.0}, {2, 2.0}, {3, 3.0}}, 1.0);
  EXPECT_GT(dips::subset_chi_square(idx, with, kTrials, rng), 0.001);
  idx.check_invariants();
}

TEST(Dips, PairwiseIndependence) {
  const std::vector<double> w{1.0, 2.5, 4.0, 7.5, 11.0};
  DipsIndex idx(as_members(w));
  const auto p = dips_oracle::inclusion_probabilities(w, 1.0);
  RandomSource rng(8);
  std::vector<std::vector<int>> both(5, std::vector<int>(5, 0));
  std::vector<dips::ElementId> got;
  for (int q = 0; q < kTrials; ++q) {
    got.clear();
    idx.query(rng, [&](dips::ElementId id) { got.push_back(id); });
    for (auto a : got)
      for (auto b : got)
        if (a < b) ++both[a][b];
  }
  for (int a = 0; a < 5; ++a) {
    for (int b = a + 1; b < 5; ++b) {
      const double pab = double(p[a] * p[b]);
      EXPECT_TRUE(dips_oracle::within_sigmas(both[a][b] / double(kTrials), pab, kTrials, 4.0))
          << a << "," << b;
    }
  }
}

TEST(Dips, MarginalsAfterUpdates) {
  auto w = exponential_weights(1000, 9);
  DipsIndex idx(as_members(w), 0.8);
  RandomSource rng(10);
  for (int i = 0; i < 300; ++i) {
    const auto v = rng.next_below(w.size());
    w[v] = std::exp(20.0 * rng.next_unit() - 10.0);
    idx.change_weight(v, w[v]);
  }
  idx.check_invariants();
  const auto p = dips_oracle::inclusion_probabilities(w, 0.8);
  std::vector<dips::ElementId> ids;
  for (std::size_t i = 0; i < w.size(); ++i) ids.push_back(i);
  const int Q = 300'000;
  const auto table = dips::tally([&](auto&& sink) { idx.query(rng, sink); }, ids, Q);
  for (std::size_t i = 0; i < w.size(); ++i) {
    // Bonferroni-sized band for 1000 simultaneous checks.
    ASSERT_TRUE(dips_oracle::within_band(table.frequency(i), double(p[i]), Q, 4.5)) << i;
  }
}

TEST(Dips, FuzzMixedUpdates) {
  auto w = exponential_weights(10'000, 11);
  DipsIndex idx(as_members(w));
  RandomSource rng(12);
  std::vector<dips::ElementId> live;
  for (std::size_t i = 0; i < w.size(); ++i) live.push_back(i);
  dips::ElementId next = w.size();
  for (int op = 0; op < 100'000; ++op) {
    const auto kind = rng.next_below(4);
    const double weight = rng.next_below(50) == 0 ? 0.0 : std::exp(30.0 * rng.next_unit() - 15.0);
    if (kind == 0 || live.empty()) {
      idx.insert(next, weight);
      live.push_back(next++);
    } else if (kind == 1) {
      const auto k = rng.next_below(live.size());
      idx.erase(live[k]);
      live[k] = live.back();
      live.pop_back();
    } else if (kind == 2) {
      idx.change_weight(live[rng.next_below(live.size())], weight);
    } else {
      idx.query(rng, [](dips::ElementId) {});
    }
    if (op % 5000 == 0) idx.check_invariants();
  }
  idx.check_invariants();
  EXPECT_EQ(idx.size(), live.size());
}

TEST(Dips, SmallFuzzEveryOperation) {
  RandomSource rng(13);
  DipsIndex idx(1.0, dips::DipsConfig{2});
  std::vector<dips::ElementId> live;
  dips::ElementId next = 0;
  for (int op = 0; op < 20'000; ++op) {
    const auto kind = rng.next_below(3);
    const double weight = std::exp(40.0 * rng.next_unit() - 20.0);
    if (kind == 0 || live.size() < 2) {
      idx.insert(next, weight);
      live.push_back(next++);
    } else if (kind == 1 || live.size() > 200) {
      const auto k = rng.next_below(live.size());
      idx.erase(live[k]);
      live[k] = live.back();
      live.pop_back();
    } else {
      idx.change_weight(live[rng.next_below(live.size())], weight);
    }
    idx.check_invariants();
  }
}

TEST(Dips, StatsAfterDeleteAll) {
  auto w = exponential_weights(500, 14);
  DipsIndex idx(as_members(w));
  auto s = idx.stats();
  EXPECT_EQ(s.n, 500u);
  EXPECT_GT(s.levels[0].buckets, 0u);
  EXPECT_GT(s.levels[1].instances, 0u);
  EXPECT_GT(s.levels[2].instances, 0u);
  for (std::size_t i = 0; i < w.size(); ++i) idx.erase(i);
  s = idx.stats();
  EXPECT_EQ(s.n, 0u);
  EXPECT_EQ(s.total_weight, 0.0);
  for (const auto& level : s.levels) {
    EXPECT_EQ(level.elements, 0u);
    EXPECT_EQ(level.buckets, 0u);
    EXPECT_EQ(level.chunks, 0u);
  }
  idx.check_invariants();
}

TEST(Dips, MemoryPerElementRoughlyConstant) {
  DipsIndex small(as_members(exponential_weights(10'000, 15)));
  DipsIndex large(as_members(exponential_weights(100'000, 16)));
  const double per_small = small.memory_bytes() / 1e4;
  const double per_large = large.memory_bytes() / 1e5;
  EXPECT_LE(per_large, 2.0 * per_small);
  EXPECT_LE(per_small, 2.0 * per_large);
}

TEST(Dips, MovedIndexKeepsWorking) {
  DipsIndex a(Members{{1, 1.0}, {2, 2.0}, {3, 5.0}, {4, 9.0}, {5, 0.5}});
  DipsIndex b = std::move(a);
  b.insert(6, 3.0);
  b.erase(1);
  RandomSource rng(17);
  b.query(rng);
  EXPECT_GT(b.counters().query, 0u);
  b.check_invariants();
}

}  // namespace
