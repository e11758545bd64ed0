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

// Build an index, draw a few samples, then update it.

#include <cstdio>
#include <utility>
#include <vector>

#include "dips/dips_index.hpp"

int main() {
  // Five items; item 4 carries half of the total weight.
  const std::vector<std::pair<dips::ElementId, double>> items{
      {0, 1.0}, {1, 2.0}, {2, 3.0}, {3, 4.0}, {4, 10.0}};
  dips::DipsIndex index(items, /*c=*/1.0);
  dips::RandomSource rng(42);

  for (int k = 0; k < 3; ++k) {
    std::printf("sample %d:", k);
    for (dips::ElementId id : index.query(rng)) std::printf(" %llu", static_cast<unsigned long long>(id));
    std::printf("\n");
  }

  index.change_weight(0, 30.0);
  index.insert(5, 0.5);
  index.erase(4);
  std::printf("after updates: W = %.1f, P(0) = %.4f, P(5) = %.4f\n", index.total_weight(),
              index.probability(0), index.probability(5));

  // Stream a sample without allocating.
  int drawn = 0;
  index.query(rng, [&](dips::ElementId) { ++drawn; });
  std::printf("streamed %d items\n", drawn);
  return 0;
}
