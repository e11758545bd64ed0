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

// Reverse-reachable sets under the weighted cascade model on a graph that
// changes edge by edge. Vertex v keeps one sampler over its in-neighbors
// with c = 1, so in-neighbor u is drawn with probability w(u,v) / W_in(v).

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dips/core.hpp"
#include "dips/dips_index.hpp"

namespace dips::rrset {

using Vertex = std::uint64_t;

enum class EdgeWeights { kExp, kWeibull };

inline EdgeWeights parse_edge_weights(std::string_view s) {
  if (s == "exp") return EdgeWeights::kExp;
  if (s == "weibull") return EdgeWeights::kWeibull;
  throw DomainError("unknown edge weight distribution '" + std::string(s) + "' (expected exp or weibull)");
}

/// Exponential with rate 1, or Weibull whose scale and shape are drawn
/// per edge from U[0, 10]. Draws that are not valid weights are repeated.
template <class Engine>
double draw_edge_weight(EdgeWeights d, Engine& eng) {
  std::uniform_real_distribution<double> param(0.0, 10.0);
  for (;;) {
    double w = 0.0;
    if (d == EdgeWeights::kExp) {
      w = std::exponential_distribution<double>(1.0)(eng);
    } else {
      const double scale = param(eng);
      const double shape = param(eng);
      if (!(scale > 0.0 && shape > 0.0)) continue;
      w = std::weibull_distribution<double>(shape, scale)(eng);
    }
    if (is_valid_weight(w)) return w;
  }
}

struct RrSet {
  Vertex target = 0;
  std::vector<Vertex> visited;  // target first, then discovery order
};

template <class Sampler = DipsIndex>
class DynamicGraph {
 public:
  explicit DynamicGraph(std::size_t vertex_count = 0) { ensure_vertex(vertex_count); }

  std::size_t vertex_count() const noexcept { return in_edges_.size(); }
  std::size_t edge_count() const noexcept { return edges_; }

  bool has_edge(Vertex u, Vertex v) const {
    return v < in_edges_.size() && in_edges_[v].count(u) != 0;
  }

  double edge_weight(Vertex u, Vertex v) const {
    if (!has_edge(u, v)) throw NotFoundError("DynamicGraph: no such edge");
    return in_edges_[v].at(u);
  }

  const std::unordered_map<Vertex, double>& in_edges(Vertex v) const { return in_edges_.at(v); }

  /// Index over v's in-neighbors, or null when v has never had one.
  const Sampler* in_index(Vertex v) const { return v < index_.size() ? index_[v].get() : nullptr; }
  Sampler* in_index(Vertex v) { return v < index_.size() ? index_[v].get() : nullptr; }

  /// Work done so far by v's index, queries and updates together.
  std::uint64_t vertex_work(Vertex v) const {
    const Sampler* s = in_index(v);
    return s == nullptr ? 0 : s->counters().query + s->counters().update;
  }

  void insert_edge(Vertex u, Vertex v, double w) {
    require_valid_weight(w, "DynamicGraph::insert_edge");
    ensure_vertex(std::max(u, v) + 1);
    if (in_edges_[v].count(u) != 0) throw DuplicateError("DynamicGraph: edge already present");
    if (!index_[v]) index_[v] = std::make_unique<Sampler>(1.0);
    index_[v]->insert(u, w);
    in_edges_[v].emplace(u, w);
    ++edges_;
  }

  void delete_edge(Vertex u, Vertex v) {
    if (!has_edge(u, v)) throw NotFoundError("DynamicGraph: no such edge");
    index_[v]->erase(u);
    in_edges_[v].erase(u);
    --edges_;
  }

  /// Builds every vertex index from an edge list in one pass per vertex.
  void assign(std::span<const std::pair<std::pair<Vertex, Vertex>, double>> edges) {
    in_edges_.clear();
    index_.clear();
    edges_ = 0;
    Vertex top = 0;
    for (const auto& [e, w] : edges) top = std::max({top, e.first + 1, e.second + 1});
    ensure_vertex(top);
    for (const auto& [e, w] : edges) {
      require_valid_weight(w, "DynamicGraph::assign");
      if (!in_edges_[e.second].emplace(e.first, w).second) {
        throw DuplicateError("DynamicGraph: duplicate edge " + std::to_string(e.first) + " " +
                             std::to_string(e.second));
      }
      ++edges_;
    }
    std::vector<std::pair<ElementId, double>> members;
    for (Vertex v = 0; v < in_edges_.size(); ++v) {
      if (in_edges_[v].empty()) continue;
      members.assign(in_edges_[v].begin(), in_edges_[v].end());
      std::sort(members.begin(), members.end());
      index_[v] = std::make_unique<Sampler>(members, 1.0);
    }
  }

  /// Reverse stochastic BFS from target. Each reached vertex queries its
  /// index once, and each in-neighbor drawn joins the set.
  RrSet sample_from(Vertex target, RandomSource& rng, std::uint64_t* work = nullptr) {
    if (target >= vertex_count()) throw NotFoundError("DynamicGraph: unknown target vertex");
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
    RrSet set;
    set.target = target;
    set.visited.push_back(target);
    stamp_[target] = epoch_;
    for (std::size_t head = 0; head < set.visited.size(); ++head) {
      Sampler* s = index_[set.visited[head]].get();
      if (s == nullptr) continue;
      const std::uint64_t before = s->counters().query;
      s->query(rng, [&](ElementId u) {
        if (stamp_[u] == epoch_) return;
        stamp_[u] = epoch_;
        set.visited.push_back(u);
      });
      if (work != nullptr) *work += s->counters().query - before;
    }
    return set;
  }

  /// RR set for a uniformly chosen target.
  RrSet sample(RandomSource& rng, std::uint64_t* work = nullptr) {
    if (vertex_count() == 0) throw EmptyIndexError("DynamicGraph: no vertices");
    return sample_from(rng.next_below(vertex_count()), rng, work);
  }

  void check_invariants() const {
    std::size_t total = 0;
    for (Vertex v = 0; v < in_edges_.size(); ++v) {
      total += in_edges_[v].size();
      const Sampler* s = index_[v].get();
      if (s == nullptr) {
        if (!in_edges_[v].empty()) throw InvariantError("DynamicGraph: in-edges without an index");
        continue;
      }
      s->check_invariants();
      if (s->size() != in_edges_[v].size()) throw InvariantError("DynamicGraph: index size differs from in-degree");
      for (const auto& [u, w] : in_edges_[v]) {
        if (!s->contains(u) || s->weight(u) != w) throw InvariantError("DynamicGraph: index out of sync");
      }
    }
    if (total != edges_) throw InvariantError("DynamicGraph: edge count");
  }

 private:
  void ensure_vertex(std::size_t count) {
    if (count <= in_edges_.size()) return;
    in_edges_.resize(count);
    index_.resize(count);
    stamp_.resize(count, 0);
  }

  std::vector<std::unordered_map<Vertex, double>> in_edges_;
  std::vector<std::unique_ptr<Sampler>> index_;
  std::size_t edges_ = 0;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

template <class Sampler>
RrSet sample_rr_set(DynamicGraph<Sampler>& g, RandomSource& rng) {
  return g.sample(rng);
}

// ---------------------------------------------------------------------------
// Edge lists

using EdgeList = std::vector<std::pair<Vertex, Vertex>>;

/// Whitespace-separated "u v" pairs, one per line. Blank lines and lines
/// starting with '#' or '%' are skipped.
inline EdgeList read_edge_list(std::istream& in, const std::string& name = "<input>") {
  EdgeList edges;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ParseError(name + ":" + std::to_string(line_no) + ": " + why + ": '" + line + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s(line);
    auto skip_space = [&] {
      while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    };
    skip_space();
    if (s.empty() || s.front() == '#' || s.front() == '%') continue;
    Vertex ends[2];
    for (Vertex& x : ends) {
      skip_space();
      const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
      if (r.ec != std::errc{}) fail("expected two non-negative integers");
      s.remove_prefix(static_cast<std::size_t>(r.ptr - s.data()));
      if (!s.empty() && s.front() != ' ' && s.front() != '\t' && s.front() != '\r') {
        fail("expected two non-negative integers");
      }
    }
    skip_space();
    if (!s.empty()) fail("trailing text after the edge");
    edges.emplace_back(ends[0], ends[1]);
  }
  return edges;
}

/// Weighted graph from an edge list; weights are drawn per edge in file
/// order. Duplicate edges are rejected.
template <class Sampler = DipsIndex>
DynamicGraph<Sampler> make_graph(const EdgeList& edges, EdgeWeights dist, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<std::pair<std::pair<Vertex, Vertex>, double>> weighted;
  weighted.reserve(edges.size());
  for (const auto& e : edges) weighted.emplace_back(e, draw_edge_weight(dist, eng));
  DynamicGraph<Sampler> g;
  g.assign(weighted);
  return g;
}

template <class Sampler = DipsIndex>
DynamicGraph<Sampler> load_graph(const std::string& path, EdgeWeights dist, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  return make_graph<Sampler>(read_edge_list(in, path), dist, seed);
}

// ---------------------------------------------------------------------------
// Benchmarks

struct RrBenchRow {
  std::uint64_t sets = 0;
  double mean_size = 0.0;
  double work_per_set = 0.0;
  double ns_per_set = 0.0;
};

enum class EdgeOp { kDelete, kInsert };

struct UpdateRow {
  std::uint64_t op = 0;
  EdgeOp kind = EdgeOp::kDelete;
  Vertex u = 0;
  Vertex v = 0;
  std::uint64_t work = 0;
  double ns = 0.0;
};

template <class Sampler>
RrBenchRow bench_rr(DynamicGraph<Sampler>& g, std::uint64_t count, RandomSource& rng) {
  RrBenchRow row;
  row.sets = count;
  if (count == 0) return row;
  std::uint64_t work = 0;
  std::uint64_t size = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t k = 0; k < count; ++k) size += g.sample(rng, &work).visited.size();
  row.ns_per_set = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - start).count() /
                   static_cast<double>(count);
  row.mean_size = static_cast<double>(size) / static_cast<double>(count);
  row.work_per_set = static_cast<double>(work) / static_cast<double>(count);
  return row;
}

/// Picks min(ops, |E|) distinct edges uniformly, deletes them all, then
/// inserts them back with their old weights. One row per operation; work
/// is the update work of the one index touched.
template <class Sampler>
std::vector<UpdateRow> bench_updates(DynamicGraph<Sampler>& g, std::uint64_t ops, std::uint64_t seed) {
  std::vector<std::pair<std::pair<Vertex, Vertex>, double>> edges;
  edges.reserve(g.edge_count());
  for (Vertex v = 0; v < g.vertex_count(); ++v) {
    for (const auto& [u, w] : g.in_edges(v)) edges.push_back({{u, v}, w});
  }
  std::sort(edges.begin(), edges.end());
  std::mt19937_64 eng(seed);
  const std::size_t picks = static_cast<std::size_t>(std::min<std::uint64_t>(ops, edges.size()));
  for (std::size_t i = 0; i < picks; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, edges.size() - 1)(eng);
    std::swap(edges[i], edges[j]);
  }
  std::vector<UpdateRow> rows;
  rows.reserve(2 * picks);
  auto timed = [&](EdgeOp kind, const std::pair<std::pair<Vertex, Vertex>, double>& e) {
    const auto [u, v] = e.first;
    const auto& counters = g.in_index(v)->counters();
    const std::uint64_t before = counters.update;
    const auto start = std::chrono::steady_clock::now();
    if (kind == EdgeOp::kDelete) {
      g.delete_edge(u, v);
    } else {
      g.insert_edge(u, v, e.second);
    }
    const double ns = std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - start).count();
    rows.push_back({rows.size(), kind, u, v, g.in_index(v)->counters().update - before, ns});
  };
  for (std::size_t i = 0; i < picks; ++i) timed(EdgeOp::kDelete, edges[i]);
  for (std::size_t i = 0; i < picks; ++i) timed(EdgeOp::kInsert, edges[i]);
  return rows;
}

inline void write_csv(std::ostream& out, std::span<const RrBenchRow> rows) {
  out << "sets,mean_size,work_per_set,ns_per_set\n";
  auto num = [](double x) {
    char buf[64];
    return std::string(buf, std::to_chars(buf, buf + sizeof(buf), x).ptr);
  };
  for (const auto& r : rows) {
    out << r.sets << ',' << num(r.mean_size) << ',' << num(r.work_per_set) << ',' << num(r.ns_per_set) << '\n';
  }
}

inline void write_csv(std::ostream& out, std::span<const UpdateRow> rows) {
  out << "op,kind,u,v,work,ns\n";
  for (const auto& r : rows) {
    char buf[64];
    const std::string ns(buf, std::to_chars(buf, buf + sizeof(buf), r.ns).ptr);
    out << r.op << ',' << (r.kind == EdgeOp::kDelete ? "delete" : "insert") << ',' << r.u << ',' << r.v
        << ',' << r.work << ',' << ns << '\n';
  }
}

}  // namespace dips::rrset
