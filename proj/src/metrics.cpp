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

#include "cilab/metrics.hpp"

#include <algorithm>
#include <string>

#include "cilab/errors.hpp"

namespace cilab {

AccuracyMatrix::AccuracyMatrix(std::size_t num_tasks) {
  if (num_tasks == 0) throw InputError("accuracy matrix needs at least one task");
  rows_.resize(num_tasks);
  for (std::size_t i = 0; i < num_tasks; ++i) rows_[i].resize(num_tasks - i);
}

void AccuracyMatrix::set(std::size_t i, std::size_t j, double accuracy) {
  if (j >= rows_.size() || i > j) {
    throw InputError("accuracy matrix: entry (" + std::to_string(i) + ", " + std::to_string(j) +
                     ") outside the lower triangle");
  }
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw InputError("accuracy matrix: value " + std::to_string(accuracy) + " outside [0, 1]");
  }
  rows_[i][j - i] = accuracy;
}

std::optional<double> AccuracyMatrix::at(std::size_t i, std::size_t j) const {
  if (j >= rows_.size() || i > j) return std::nullopt;
  return rows_[i][j - i];
}

bool AccuracyMatrix::final_column_complete() const {
  return std::all_of(rows_.begin(), rows_.end(), [](const auto& row) { return row.back().has_value(); });
}

nlohmann::json AccuracyMatrix::to_json() const {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& row : rows_) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& v : row) jr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    a.push_back(std::move(jr));
  }
  return {{"T", rows_.size()}, {"a", std::move(a)}};
}

AccuracyMatrix AccuracyMatrix::from_json(const nlohmann::json& j) {
  try {
    AccuracyMatrix m(j.at("T").get<std::size_t>());
    const auto& a = j.at("a");
    if (a.size() != m.num_tasks()) throw ParseError("accuracy matrix: expected one row per task");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != m.num_tasks() - i) {
        throw ParseError("accuracy matrix: row " + std::to_string(i) + " has wrong length");
      }
      for (std::size_t k = 0; k < a[i].size(); ++k) {
        if (!a[i][k].is_null()) m.set(i, i + k, a[i][k].get<double>());
      }
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("accuracy matrix: ") + ex.what());
  }
}

double compute_acc(const AccuracyMatrix& m) {
  const std::size_t last = m.num_tasks() - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    const auto v = m.at(i, last);
    if (!v) throw InputError("compute_acc: final column missing task " + std::to_string(i));
    sum += *v;
  }
  return sum / static_cast<double>(m.num_tasks());
}

double compute_fr(const AccuracyMatrix& m) {
  const std::size_t n = m.num_tasks();
  if (n < 2) throw InputError("compute_fr: forgetting is undefined for a single task");
  const std::size_t last = n - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < last; ++i) {
    const auto final_acc = m.at(i, last);
    if (!final_acc) throw InputError("compute_fr: final column missing task " + std::to_string(i));
    double peak = 0.0;
    for (std::size_t j = i; j < last; ++j) {
      const auto v = m.at(i, j);
      if (!v) {
        throw InputError("compute_fr: missing entry (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      peak = j == i ? *v : std::max(peak, *v);
    }
    sum += peak - *final_acc;
  }
  return sum / static_cast<double>(last);
}

}  // namespace cilab
