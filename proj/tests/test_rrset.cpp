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

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dips/baselines.hpp"
#include "dips/rrset.hpp"
#include "dips/stats_verify.hpp"
#include "oracles.hpp"

namespace {

using dips::RandomSource;
using dips::rrset::DynamicGraph;
using dips::rrset::EdgeWeights;
using dips::rrset::Vertex;

constexpr int kSets = 1'000'000;

// Fraction of RR sets rooted at target that contain each probe vertex.
std::vector<double> containment(DynamicGraph<>& g, Vertex target, const std::vector<Vertex>& probes, int sets,
                                RandomSource& rng) {
  std::vector<double> hits(probes.size(), 0.0);
  for (int k = 0; k < sets; ++k) {
    const auto rr = g.sample_from(target, rng);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      if (std::find(rr.visited.begin(), rr.visited.end(), probes[i]) != rr.visited.end()) hits[i] += 1.0;
    }
  }
  for (auto& h : hits) h /= sets;
  return hits;
}

// Center 0 with in-edges from leaves 1, 2, 3 of weights 1, 1, 2.
DynamicGraph<> star() {
  DynamicGraph<> g;
  g.insert_edge(1, 0, 1.0);
  g.insert_edge(2, 0, 1.0);
  g.insert_edge(3, 0, 2.0);
  return g;
}

TEST(RrSet, EmptyFileEmptyGraph) {
  std::istringstream in("");
  const auto g = dips::rrset::make_graph(dips::rrset::read_edge_list(in), EdgeWeights::kExp, 1);
  EXPECT_EQ(g.vertex_count(), 0u);
  EXPECT_EQ(g.edge_count(), 0u);
  RandomSource rng(1);
  DynamicGraph<> empty;
  EXPECT_THROW(empty.sample(rng), dips::EmptyIndexError);
}

TEST(RrSet, EdgeListParsing) {
  std::istringstream in("# comment\n0 1\n\n2\t1\r\n  3 1  \n");
  const auto edges = dips::rrset::read_edge_list(in);
  ASSERT_EQ(edges.size(), 3u);
  EXPECT_EQ(edges[1], (std::pair<Vertex, Vertex>{2, 1}));
  for (const char* bad : {"0 1\n1\n", "0 1\n1 x\n", "0 1\n1 2 3\n", "-1 2\n", "1.5 2\n"}) {
    std::istringstream b(bad);
    EXPECT_THROW(dips::rrset::read_edge_list(b, "g.txt"), dips::ParseError) << bad;
  }
  std::istringstream b("0 1\n0 2\nfoo\n");
  try {
    dips::rrset::read_edge_list(b, "g.txt");
    FAIL();
  } catch (const dips::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("g.txt:3"), std::string::npos) << e.what();
  }
}

TEST(RrSet, DuplicateEdgeRejected) {
  std::istringstream in("0 1\n2 1\n0 1\n");
  EXPECT_THROW(dips::rrset::make_graph(dips::rrset::read_edge_list(in), EdgeWeights::kExp, 1),
               dips::DuplicateError);
  auto g = star();
  EXPECT_THROW(g.insert_edge(1, 0, 5.0), dips::DuplicateError);
  EXPECT_THROW(g.delete_edge(0, 1), dips::NotFoundError);
  EXPECT_THROW(g.insert_edge(4, 0, 0.0), dips::DomainError);
}

TEST(RrSet, StarIndexProbabilities) {
  std::istringstream in("1 0\n2 0\n3 0\n");
  const auto g = dips::rrset::make_graph(dips::rrset::read_edge_list(in), EdgeWeights::kExp, 2);
  g.check_invariants();
  const auto* idx = g.in_index(0);
  ASSERT_NE(idx, nullptr);
  EXPECT_EQ(idx->size(), 3u);
  const double W = g.edge_weight(1, 0) + g.edge_weight(2, 0) + g.edge_weight(3, 0);
  for (Vertex u = 1; u <= 3; ++u) EXPECT_DOUBLE_EQ(idx->probability(u), g.edge_weight(u, 0) / W);
  EXPECT_EQ(g.in_index(1), nullptr);
}

TEST(RrSet, IsolatedTarget) {
  auto g = star();
  RandomSource rng(3);
  for (Vertex t = 1; t <= 3; ++t) {
    const auto rr = g.sample_from(t, rng);
    EXPECT_EQ(rr.target, t);
    EXPECT_EQ(rr.visited, std::vector<Vertex>{t});
  }
}

TEST(RrSet, StarLeafFrequencies) {
  auto g = star();
  RandomSource rng(4);
  const auto f = containment(g, 0, {1, 2, 3}, kSets, rng);
  EXPECT_TRUE(dips_oracle::within_sigmas(f[0], 0.25, kSets, 3.0)) << f[0];
  EXPECT_TRUE(dips_oracle::within_sigmas(f[1], 0.25, kSets, 3.0)) << f[1];
  EXPECT_TRUE(dips_oracle::within_sigmas(f[2], 0.5, kSets, 3.0)) << f[2];
}

TEST(RrSet, PathIsCertain) {
  DynamicGraph<> g;
  g.insert_edge(0, 1, 1.0);  // a -> b
  g.insert_edge(1, 2, 1.0);  // b -> c
  RandomSource rng(5);
  for (int k = 0; k < 10'000; ++k) {
    const auto rr = g.sample_from(2, rng);
    ASSERT_EQ(rr.visited, (std::vector<Vertex>{2, 1, 0}));
  }
}

TEST(RrSet, EachVertexQueriedOnce) {
  // A 2-cycle with certain edges: the BFS must stop after both vertices.
  DynamicGraph<> g;
  g.insert_edge(0, 1, 1.0);
  g.insert_edge(1, 0, 1.0);
  RandomSource rng(6);
  std::uint64_t work = 0;
  const auto rr = g.sample_from(0, rng, &work);
  EXPECT_EQ(rr.visited, (std::vector<Vertex>{0, 1}));
  EXPECT_GT(work, 0u);
}

TEST(RrSet, SmallRandomGraphIndexMarginals) {
  std::mt19937_64 eng(7);
  DynamicGraph<> g(30);
  for (int k = 0; k < 200; ++k) {
    const Vertex u = eng() % 30, v = eng() % 30;
    if (u != v && !g.has_edge(u, v)) g.insert_edge(u, v, dips::rrset::draw_edge_weight(EdgeWeights::kWeibull, eng));
  }
  g.check_invariants();
  RandomSource rng(8);
  for (Vertex v = 0; v < 30; ++v) {
    auto* idx = g.in_index(v);
    if (idx == nullptr || idx->size() == 0) continue;
    std::vector<dips::ElementId> ids;
    double W = 0.0;
    for (const auto& [u, w] : g.in_edges(v)) {
      ids.push_back(u);
      W += w;
    }
    const auto t = dips::tally([&](auto&& sink) { idx->query(rng, sink); }, ids, 50'000);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      EXPECT_TRUE(dips_oracle::within_band(t.frequency(i), g.edge_weight(ids[i], v) / W, 50'000, 4.5));
    }
  }
}

TEST(RrSet, InsertThenDeleteRestores) {
  auto g = star();
  g.insert_edge(4, 0, 3.0);
  g.delete_edge(4, 0);
  g.check_invariants();
  RandomSource rng(9);
  const auto f = containment(g, 0, {1, 3}, 200'000, rng);
  EXPECT_TRUE(dips_oracle::within_sigmas(f[0], 0.25, 200'000, 4.0));
  EXPECT_TRUE(dips_oracle::within_sigmas(f[1], 0.5, 200'000, 4.0));
}

TEST(RrSet, HeavyEdgeDominates) {
  auto g = star();
  g.insert_edge(4, 0, 1e6);
  RandomSource rng(10);
  const auto f = containment(g, 0, {4, 3}, 200'000, rng);
  EXPECT_TRUE(dips_oracle::within_sigmas(f[0], 1e6 / (1e6 + 4), 200'000, 4.0)) << f[0];
  EXPECT_TRUE(dips_oracle::within_sigmas(f[1], 2 / (1e6 + 4), 200'000, 4.0)) << f[1];
}

TEST(RrSet, UpdateTouchesOneIndex) {
  std::mt19937_64 eng(11);
  DynamicGraph<> g(50);
  for (int k = 0; k < 400; ++k) {
    const Vertex u = eng() % 50, v = eng() % 50;
    if (!g.has_edge(u, v)) g.insert_edge(u, v, 1.0 + eng() % 7);
  }
  for (int k = 0; k < 200; ++k) {
    const Vertex u = eng() % 50, v = eng() % 50;
    std::vector<std::uint64_t> before(50);
    for (Vertex x = 0; x < 50; ++x) before[x] = g.vertex_work(x);
    if (g.has_edge(u, v)) {
      g.delete_edge(u, v);
    } else {
      g.insert_edge(u, v, 2.0);
    }
    for (Vertex x = 0; x < 50; ++x) {
      if (x != v) {
        ASSERT_EQ(g.vertex_work(x), before[x]) << x;
      }
    }
    ASSERT_GT(g.vertex_work(v), before[v]);
  }
  g.check_invariants();
}

TEST(RrSet, BenchSmoke) {
  std::mt19937_64 eng(12);
  std::ostringstream file;
  DynamicGraph<> seen(2000);
  int edges = 0;
  while (edges < 10'000) {
    const Vertex u = eng() % 2000, v = eng() % 2000;
    if (u == v || seen.has_edge(u, v)) continue;
    seen.insert_edge(u, v, 1.0);
    file << u << ' ' << v << '\n';
    ++edges;
  }
  std::istringstream in(file.str());
  auto g = dips::rrset::make_graph(dips::rrset::read_edge_list(in), EdgeWeights::kWeibull, 13);
  EXPECT_EQ(g.edge_count(), 10'000u);
  RandomSource rng(14);
  const auto row = dips::rrset::bench_rr(g, 10'000, rng);
  EXPECT_EQ(row.sets, 10'000u);
  EXPECT_GE(row.mean_size, 1.0);
  const auto rows = dips::rrset::bench_updates(g, 500, 15);
  ASSERT_EQ(rows.size(), 1000u);
  EXPECT_EQ(g.edge_count(), 10'000u);
  g.check_invariants();
  std::ostringstream csv;
  dips::rrset::write_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, 20), "op,kind,u,v,work,ns\n");
}

TEST(RrSet, EmptyUpdateBench) {
  auto g = star();
  const auto rows = dips::rrset::bench_updates(g, 0, 1);
  std::ostringstream csv;
  dips::rrset::write_csv(csv, rows);
  EXPECT_EQ(csv.str(), "op,kind,u,v,work,ns\n");
  std::ostringstream rr;
  dips::rrset::write_csv(rr, std::span<const dips::rrset::RrBenchRow>{});
  EXPECT_EQ(rr.str(), "sets,mean_size,work_per_set,ns_per_set\n");
}

TEST(RrSet, UpdateWorkAgainstRebuildIndex) {
  // A vertex with in-degree 10^5: one edge operation on the DIPS-backed
  // graph costs at most 1/100 of the rebuild-backed one.
  dips::rrset::EdgeList edges;
  for (Vertex u = 1; u <= 100'000; ++u) edges.emplace_back(u, 0);
  auto fast = dips::rrset::make_graph(edges, EdgeWeights::kExp, 16);
  auto slow = dips::rrset::make_graph<dips::RebuildReductionSampler>(edges, EdgeWeights::kExp, 16);
  const auto a = dips::rrset::bench_updates(fast, 50, 17);
  const auto b = dips::rrset::bench_updates(slow, 50, 17);
  std::uint64_t wa = 0, wb = 0;
  for (const auto& r : a) wa += r.work;
  for (const auto& r : b) wb += r.work;
  EXPECT_LE(100 * wa, wb);
}

TEST(RrSet, WeightDraws) {
  std::mt19937_64 eng(18);
  double sum = 0.0;
  for (int k = 0; k < 200'000; ++k) {
    const double w = dips::rrset::draw_edge_weight(EdgeWeights::kExp, eng);
    ASSERT_TRUE(dips::is_valid_weight(w));
    sum += w;
  }
  EXPECT_NEAR(sum / 200'000, 1.0, 0.01);
  for (int k = 0; k < 200'000; ++k) {
    ASSERT_TRUE(dips::is_valid_weight(dips::rrset::draw_edge_weight(EdgeWeights::kWeibull, eng)));
  }
  EXPECT_EQ(dips::rrset::parse_edge_weights("weibull"), EdgeWeights::kWeibull);
  EXPECT_THROW(dips::rrset::parse_edge_weights("normal"), dips::DomainError);
}

}  // namespace
