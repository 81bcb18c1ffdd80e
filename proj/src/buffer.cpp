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

#include "cilab/buffer.hpp"

#include <string>

#include "cilab/errors.hpp"

namespace cilab {

ReplayBuffer::ReplayBuffer(std::size_t per_class_budget, std::size_t num_classes,
                           bool store_logits, std::uint64_t seed)
    : per_class_budget_(per_class_budget),
      num_classes_(num_classes),
      store_logits_(store_logits),
      slots_(num_classes),
      seen_(num_classes, 0),
      rng_(seed) {}

void ReplayBuffer::insert(BufferEntry entry) {
  if (entry.label < 0 || static_cast<std::size_t>(entry.label) >= num_classes_) {
    throw InputError("buffer: label " + std::to_string(entry.label) + " out of range");
  }
  if (entry.stored_logits.has_value() != store_logits_) {
    throw InputError(store_logits_ ? "buffer: entry is missing stored logits"
                                   : "buffer: entry carries logits but the buffer does not store them");
  }
  if (entry.stored_logits && entry.stored_logits->size() != num_classes_) {
    throw InputError("buffer: stored logits must have length " + std::to_string(num_classes_));
  }

  const auto c = static_cast<std::size_t>(entry.label);
  auto& slots = slots_[c];
  const std::uint64_t seen = ++seen_[c];
  if (slots.size() < per_class_budget_) {
    slots.push_back(entries_.size());
    entries_.push_back(std::move(entry));
    return;
  }
  if (per_class_budget_ == 0) return;
  // Keep with probability budget / seen, replacing a uniformly chosen slot.
  const std::uint64_t j = rng_.uniform_index(seen);
  if (j < per_class_budget_) entries_[slots[j]] = std::move(entry);
}

std::optional<std::vector<BufferEntry>> ReplayBuffer::sample_batch(std::size_t b, Rng& rng) const {
  if (entries_.empty()) return std::nullopt;
  std::vector<BufferEntry> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) out.push_back(entries_[rng.uniform_index(entries_.size())]);
  return out;
}

std::map<Label, std::size_t> ReplayBuffer::per_class_counts() const {
  std::map<Label, std::size_t> counts;
  for (const auto& e : entries_) counts[e.label]++;
  return counts;
}

nlohmann::json ReplayBuffer::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json je{{"features", e.features}, {"label", e.label}, {"insert_task", e.insert_task}};
    je["logits"] = e.stored_logits ? nlohmann::json(*e.stored_logits) : nlohmann::json(nullptr);
    entries.push_back(std::move(je));
  }
  return {{"per_class_budget", per_class_budget_},
          {"num_classes", num_classes_},
          {"store_logits", store_logits_},
          {"seen_counts", seen_},
          {"rng_state", rng_.serialize()},
          {"entries", std::move(entries)}};
}

ReplayBuffer ReplayBuffer::from_json(const nlohmann::json& j) {
  try {
    ReplayBuffer buf(j.at("per_class_budget").get<std::size_t>(), j.at("num_classes").get<std::size_t>(),
                     j.at("store_logits").get<bool>(), 0);
    buf.rng_ = Rng::deserialize(j.at("rng_state").get<std::string>());
    for (const auto& je : j.at("entries")) {
      BufferEntry e;
      e.features = je.at("features").get<std::vector<double>>();
      e.label = je.at("label").get<Label>();
      e.insert_task = je.at("insert_task").get<std::size_t>();
      if (!je.at("logits").is_null()) e.stored_logits = je.at("logits").get<std::vector<double>>();
      if (e.label < 0 || static_cast<std::size_t>(e.label) >= buf.num_classes_ ||
          e.stored_logits.has_value() != buf.store_logits_) {
        throw ParseError("buffer dump: invalid entry");
      }
      auto& slots = buf.slots_[static_cast<std::size_t>(e.label)];
      if (slots.size() >= buf.per_class_budget_) throw ParseError("buffer dump: class over budget");
      slots.push_back(buf.entries_.size());
      buf.entries_.push_back(std::move(e));
    }
    buf.seen_ = j.at("seen_counts").get<std::vector<std::uint64_t>>();
    if (buf.seen_.size() != buf.num_classes_) throw ParseError("buffer dump: seen_counts length");
    return buf;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("buffer dump: ") + ex.what());
  }
}

}  // namespace cilab
