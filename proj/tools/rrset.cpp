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

// rrset: RR-set generation and edge-update timing on a weighted edge list.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dips/rrset.hpp"

namespace {

namespace rr = dips::rrset;

template <class Write>
void with_output(const std::string& path, Write&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write(out);
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reverse-reachable sets on a dynamic weighted-cascade graph."};
  app.require_subcommand(1);

  std::string graph;
  std::string dist = "exp";
  std::uint64_t count = 10'000;
  std::uint64_t ops = 1'000;
  std::uint64_t seed = 1;
  std::string out = "-";

  const char* graph_help = "Edge list: one \"u v\" pair of vertex ids per line; # and % start comments";
  const char* dist_help = "Edge weights: exp (rate 1) or weibull (scale and shape drawn per edge from U[0, 10])";

  auto* bench = app.add_subcommand("bench", "Generate RR sets and report their mean size and cost");
  bench->add_option("--graph", graph, graph_help)->required()->check(CLI::ExistingFile);
  bench->add_option("--dist", dist, dist_help)->check(CLI::IsMember({"exp", "weibull"}))->capture_default_str();
  bench->add_option("--count", count, "Number of RR sets")->capture_default_str();
  bench->add_option("--seed", seed, "Random seed")->capture_default_str();
  bench->add_option("--out", out, "Output CSV path, - for stdout")->capture_default_str();

  auto* update = app.add_subcommand(
      "update-bench", "Delete up to --ops distinct random edges, then insert them back; one CSV row per operation");
  update->add_option("--graph", graph, graph_help)->required()->check(CLI::ExistingFile);
  update->add_option("--dist", dist, dist_help)->check(CLI::IsMember({"exp", "weibull"}))->capture_default_str();
  update->add_option("--ops", ops, "Edges to delete and reinsert")->capture_default_str();
  update->add_option("--seed", seed, "Random seed")->capture_default_str();
  update->add_option("--out", out, "Output CSV path, - for stdout")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    auto g = rr::load_graph(graph, rr::parse_edge_weights(dist), seed);
    if (bench->parsed()) {
      dips::RandomSource rng(seed + 1);
      const rr::RrBenchRow row = g.vertex_count() == 0 ? rr::RrBenchRow{} : rr::bench_rr(g, count, rng);
      with_output(out, [&](std::ostream& os) { rr::write_csv(os, std::span(&row, 1)); });
    } else {
      const auto rows = rr::bench_updates(g, ops, seed + 1);
      with_output(out, [&](std::ostream& os) { rr::write_csv(os, rows); });
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rrset: %s\n", e.what());
    return 1;
  }
  return 0;
}
