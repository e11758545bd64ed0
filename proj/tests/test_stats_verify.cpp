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

#include "dips/baselines.hpp"
#include "dips/dips_index.hpp"
#include "dips/stats_verify.hpp"

namespace {

using dips::RandomSource;
using Members = std::vector<std::pair<dips::ElementId, double>>;

// Returns every member on every query.
struct EverythingSampler {
  std::vector<dips::ElementId> ids;
  template <class Sink>
  void query(RandomSource&, Sink&& sink) {
    for (auto id : ids) sink(id);
  }
};

// Two members with fixed marginals, one of them shifted by a relative bias.
struct BiasedPair {
  double p0;
  double p1;
  template <class Sink>
  void query(RandomSource& rng, Sink&& sink) {
    if (rng.next_unit() < p0) sink(1);
    if (rng.next_unit() < p1) sink(2);
  }
};

TEST(StatsVerify, ExactProbabilities) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 3.0}}, 0.8);
  const auto p = dips::exact_probabilities(inst);
  EXPECT_DOUBLE_EQ(p[0], 0.2);
  EXPECT_DOUBLE_EQ(p[1], 0.6);
  const auto law = dips::exact_subset_probabilities(p);
  EXPECT_DOUBLE_EQ(law[0], 0.8 * 0.4);
  EXPECT_DOUBLE_EQ(law[1], 0.2 * 0.4);
  EXPECT_DOUBLE_EQ(law[2], 0.8 * 0.6);
  EXPECT_DOUBLE_EQ(law[3], 0.2 * 0.6);
}

TEST(StatsVerify, DeterministicSamplerHasNoError) {
  const dips::PpsInstance all({{4, 2.0}}, 1.0);
  EverythingSampler s{{4}};
  RandomSource rng(1);
  const auto report = dips::max_abs_error(s, all, 1000, rng);
  EXPECT_EQ(report.queries, 1000u);
  EXPECT_EQ(report.max_abs_error, 0.0);
  // Two equal members have p = 1/2 each.
  const dips::PpsInstance inst({{1, 1.0}, {2, 1.0}}, 1.0);
  EverythingSampler both{{1, 2}};
  EXPECT_DOUBLE_EQ(dips::max_abs_error(both, inst, 10, rng).max_abs_error, 0.5);
}

TEST(StatsVerify, RejectsZeroQueries) {
  const dips::PpsInstance inst({{1, 1.0}}, 1.0);
  EverythingSampler s{{1}};
  RandomSource rng(2);
  EXPECT_THROW(dips::max_abs_error(s, inst, 0, rng), dips::DomainError);
}

TEST(StatsVerify, TallyIgnoresForeignIds) {
  EverythingSampler s{{1, 99}};
  RandomSource rng(3);
  const std::vector<dips::ElementId> ids{1, 2};
  const auto t = dips::tally([&](auto&& sink) { s.query(rng, sink); }, ids, 5);
  EXPECT_EQ(t.counts[0], 5u);
  EXPECT_EQ(t.counts[1], 0u);
}

TEST(StatsVerify, SingleCertainElementPasses) {
  const dips::PpsInstance inst({{1, 5.0}}, 1.0);
  dips::DipsIndex idx(inst.members, 1.0);
  RandomSource rng(4);
  EXPECT_EQ(dips::subset_chi_square(idx, inst, 1000, rng), 1.0);
}

TEST(StatsVerify, SparseCellsRejected) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 1e6}}, 1.0);
  dips::NaiveSampler s(inst.members, 1.0);
  RandomSource rng(5);
  EXPECT_THROW(dips::subset_chi_square(s, inst, 1000, rng), dips::DomainError);
}

TEST(StatsVerify, MalformedDrawsFail) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 1.0}}, 1.0);
  EverythingSampler s{{1, 1}};
  RandomSource rng(6);
  EXPECT_EQ(dips::subset_chi_square(s, inst, 1000, rng), 0.0);
}

TEST(StatsVerify, FairPairAcrossSeeds) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 1.0}}, 1.0);
  const auto sweep = dips::sweep_seeds(
      [&](std::uint64_t seed) {
        dips::NaiveSampler s(inst.members, 1.0);
        RandomSource rng(seed);
        return dips::subset_chi_square(s, inst, 100'000, rng);
      },
      100);
  EXPECT_EQ(sweep.runs, 100);
  EXPECT_LE(sweep.failures, 1);
}

TEST(StatsVerify, BiasedMockRejected) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 1.0}}, 1.0);
  BiasedPair s{0.5, 0.55};
  RandomSource rng(7);
  EXPECT_LT(dips::subset_chi_square(s, inst, 1'000'000, rng), 1e-6);
}

TEST(StatsVerify, DetectsOnePercentBias) {
  const dips::PpsInstance inst({{1, 1.0}, {2, 1.0}}, 1.0);
  BiasedPair s{0.5, 0.5 * 1.01};
  RandomSource rng(8);
  EXPECT_LT(dips::subset_chi_square(s, inst, 1'000'000, rng), 0.001);
}

TEST(StatsVerify, ChiSquareSurvivalValues) {
  // Upper 5% points of chi-square with 1 and 3 degrees of freedom.
  EXPECT_NEAR(dips::chi_square_survival(3.841458820694124, 1), 0.05, 1e-9);
  EXPECT_NEAR(dips::chi_square_survival(7.814727903251178, 3), 0.05, 1e-9);
  EXPECT_EQ(dips::chi_square_survival(0.0, 3), 1.0);
}

TEST(StatsVerify, DipsErrorWithinConcentrationBound) {
  std::mt19937_64 eng(9);
  std::exponential_distribution<double> dist(1.0);
  Members m;
  for (int i = 0; i < 1000; ++i) m.emplace_back(i, dist(eng) + 1e-9);
  const dips::PpsInstance inst(m, 1.0);
  dips::DipsIndex idx(m, 1.0);
  double p_max = 0.0;
  for (double p : dips::exact_probabilities(inst)) p_max = std::max(p_max, p);
  RandomSource rng(10);
  const std::uint64_t Q = 200'000;
  const auto report = dips::max_abs_error(idx, inst, Q, rng);
  EXPECT_LE(report.max_abs_error, 4.0 * std::sqrt(p_max * (1.0 - p_max) / Q) + 1.0 / Q);
}

TEST(StatsVerify, ErrorShrinksWithQueries) {
  // Error at 100x the queries is about a tenth.
  std::mt19937_64 eng(11);
  std::exponential_distribution<double> dist(1.0);
  Members m;
  for (int i = 0; i < 100; ++i) m.emplace_back(i, dist(eng) + 1e-9);
  const dips::PpsInstance inst(m, 1.0);
  dips::DipsIndex idx(m, 1.0);
  RandomSource rng(12);
  const double small = dips::max_abs_error(idx, inst, 2'000, rng).max_abs_error;
  const double large = dips::max_abs_error(idx, inst, 200'000, rng).max_abs_error;
  EXPECT_GE(large / small, 1.0 / 30.0);
  EXPECT_LE(large / small, 1.0 / 3.0);
}

}  // namespace
