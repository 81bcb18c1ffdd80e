// Copyright 2026 The cilab Authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>

#include "cilab/buffer.hpp"
#include "cilab/errors.hpp"

using namespace cilab;

namespace {

BufferEntry entry(Label label, double tag, std::size_t k = 0) {
  BufferEntry e{{tag}, label, std::nullopt, 0};
  if (k > 0) e.stored_logits = std::vector<double>(k, tag);
  return e;
}

}  // namespace

TEST_CASE("insert: under budget and capped") {
  ReplayBuffer buf(5, 3, false, 1);
  for (int i = 0; i < 3; ++i) buf.insert(entry(0, i));
  CHECK(buf.per_class_counts() == std::map<Label, std::size_t>{{0, 3}});
  for (int i = 3; i < 100; ++i) buf.insert(entry(0, i));
  CHECK(buf.per_class_counts() == std::map<Label, std::size_t>{{0, 5}});
  CHECK(buf.seen_count(0) == 100);
  CHECK(buf.total_budget() == 15);
}

TEST_CASE("insert: reservoir keeps each stream element with probability budget/n") {
  // 200 trials of a 1000-long single-class stream, budget 5.
  constexpr int kTrials = 200;
  constexpr int kStream = 1000;
  std::vector<int> kept(kStream, 0);
  for (int t = 0; t < kTrials; ++t) {
    ReplayBuffer buf(5, 1, false, 1000 + t);
    for (int i = 0; i < kStream; ++i) buf.insert(entry(0, i));
    for (const auto& e : buf.entries()) kept[static_cast<int>(e.features[0])]++;
  }
  // Per-element: Binomial(200, 0.005), mean 1. Aggregated over blocks of 100
  // elements: Binomial(20000, 0.005), mean 100, sigma ~ 9.97.
  const double p = 5.0 / kStream;
  const double n = 100.0 * kTrials;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int block = 0; block < kStream / 100; ++block) {
    int count = 0;
    for (int i = block * 100; i < (block + 1) * 100; ++i) count += kept[i];
    CHECK(std::abs(count - n * p) <= 3 * sigma + 1);
  }
  int total = 0;
  for (int v : kept) total += v;
  CHECK(total == 5 * kTrials);
}

TEST_CASE("insert: fuzzed streams respect per-class and total budgets") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(8);
    const std::size_t budget = 1 + rng.uniform_index(6);
    ReplayBuffer buf(budget, k, false, trial);
    std::map<Label, std::size_t> recount;
    for (int i = 0; i < 500; ++i) {
      buf.insert(entry(static_cast<Label>(rng.uniform_index(k)), i));
      for (const auto& [c, n] : buf.per_class_counts()) CHECK(n <= budget);
      CHECK(buf.size() <= buf.total_budget());
    }
    for (const auto& e : buf.entries()) recount[e.label]++;
    CHECK(recount == buf.per_class_counts());
  }
}

TEST_CASE("insert: validation of labels and logits") {
  ReplayBuffer plain(2, 3, false, 0);
  CHECK_THROWS_AS(plain.insert(entry(3, 0)), InputError);
  CHECK_THROWS_AS(plain.insert(entry(0, 0, 3)), InputError);
  ReplayBuffer der(2, 3, true, 0);
  CHECK_THROWS_AS(der.insert(entry(0, 0)), InputError);
  CHECK_THROWS_AS(der.insert(entry(0, 0, 2)), InputError);
  CHECK_NOTHROW(der.insert(entry(0, 0, 3)));
}

TEST_CASE("insert: deterministic given sequence and seed") {
  auto fill = [](std::uint64_t seed) {
    ReplayBuffer buf(3, 4, true, seed);
    for (int i = 0; i < 300; ++i) buf.insert(entry(i % 4, i, 4));
    return buf;
  };
  CHECK(fill(9) == fill(9));
  CHECK(!(fill(9) == fill(10)));
}

TEST_CASE("sample_batch: empty buffer signals no replay") {
  ReplayBuffer buf(2, 2, false, 0);
  Rng rng(0);
  CHECK_FALSE(buf.sample_batch(4, rng).has_value());
  CHECK(buf.per_class_counts().empty());
}

TEST_CASE("sample_batch: single entry repeated") {
  ReplayBuffer buf(2, 2, false, 0);
  buf.insert(entry(1, 42));
  Rng rng(0);
  const auto batch = buf.sample_batch(4, rng);
  REQUIRE(batch.has_value());
  REQUIRE(batch->size() == 4);
  for (const auto& e : *batch) CHECK(e == buf.entries()[0]);
}

TEST_CASE("sample_batch: uniform frequencies") {
  ReplayBuffer buf(10, 10, false, 0);
  for (int i = 0; i < 100; ++i) buf.insert(entry(i % 10, i));
  REQUIRE(buf.size() == 100);
  Rng rng(77);
  std::map<int, int> freq;
  const auto batch = buf.sample_batch(10000, rng);
  for (const auto& e : *batch) freq[static_cast<int>(e.features[0])]++;
  const double sigma = std::sqrt(10000 * 0.01 * 0.99);
  for (int i = 0; i < 100; ++i) CHECK(std::abs(freq[i] - 100) <= 5 * sigma);
}

TEST_CASE("sample_batch: does not mutate the buffer") {
  ReplayBuffer buf(3, 2, false, 5);
  for (int i = 0; i < 20; ++i) buf.insert(entry(i % 2, i));
  const ReplayBuffer before = buf;
  Rng rng(1);
  (void)buf.sample_batch(50, rng);
  CHECK(buf == before);
}

TEST_CASE("json dump/restore preserves contents and future behavior") {
  ReplayBuffer buf(3, 4, true, 21);
  for (int i = 0; i < 50; ++i) buf.insert(entry(i % 4, i * 0.5, 4));
  auto restored = ReplayBuffer::from_json(nlohmann::json::parse(buf.to_json().dump()));
  CHECK(restored == buf);
  for (int i = 50; i < 100; ++i) {
    buf.insert(entry(i % 4, i, 4));
    restored.insert(entry(i % 4, i, 4));
  }
  CHECK(restored == buf);
  CHECK_THROWS_AS(ReplayBuffer::from_json(nlohmann::json{{"entries", 1}}), ParseError);
}
