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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "json.hpp"

#include "cilab/mlp.hpp"
#include "cilab/random.hpp"

namespace cilab {

enum class InsertCadence { kBatch, kTaskEnd };

struct BufferEntry {
  std::vector<double> features;
  Label label = 0;
  std::optional<std::vector<double>> stored_logits;  // logits frozen at insertion
  std::size_t insert_task = 0;

  bool operator==(const BufferEntry&) const = default;
};

// Replay memory with a class-balanced reservoir: every class owns
// per_class_budget slots, and within a class each offered sample ends up
// stored with equal probability budget / seen(class).
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t per_class_budget, std::size_t num_classes, bool store_logits,
               std::uint64_t seed);

  // Offers one sample. Throws InputError if the label is out of range or the
  // logits presence/length does not match the buffer's mode.
  void insert(BufferEntry entry);

  // b draws uniformly with replacement; nullopt when the buffer is empty.
  std::optional<std::vector<BufferEntry>> sample_batch(std::size_t b, Rng& rng) const;

  std::map<Label, std::size_t> per_class_counts() const;

  const std::vector<BufferEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t per_class_budget() const { return per_class_budget_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t total_budget() const { return per_class_budget_ * num_classes_; }
  bool stores_logits() const { return store_logits_; }
  std::uint64_t seen_count(Label c) const { return seen_.at(static_cast<std::size_t>(c)); }

  nlohmann::json to_json() const;
  static ReplayBuffer from_json(const nlohmann::json& j);

  bool operator==(const ReplayBuffer&) const = default;

 private:
  std::size_t per_class_budget_;
  std::size_t num_classes_;
  bool store_logits_;
  std::vector<BufferEntry> entries_;
  std::vector<std::vector<std::size_t>> slots_;  // per class: indices into entries_
  std::vector<std::uint64_t> seen_;
  Rng rng_;
};

}  // namespace cilab
