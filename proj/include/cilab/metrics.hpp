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
#include <optional>
#include <vector>

#include "json.hpp"

namespace cilab {

// Lower-triangular grid a(i, j): accuracy on task i right after training task
// j, defined only for i <= j. Indices are 0-based.
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(std::size_t num_tasks);

  std::size_t num_tasks() const { return rows_.size(); }

  // Throws InputError for i > j, out-of-range indices, or values outside [0, 1].
  void set(std::size_t i, std::size_t j, double accuracy);
  std::optional<double> at(std::size_t i, std::size_t j) const;

  bool final_column_complete() const;

  // {"T": n, "a": [[a(0,0), ..., a(0,T-1)], [a(1,1), ...], ...]}; missing entries are null.
  nlohmann::json to_json() const;
  static AccuracyMatrix from_json(const nlohmann::json& j);

  bool operator==(const AccuracyMatrix&) const = default;

 private:
  std::vector<std::vector<std::optional<double>>> rows_;  // rows_[i][j - i]
};

// Mean of the final column. Throws InputError if the column is incomplete.
double compute_acc(const AccuracyMatrix& m);

// Mean over i < T-1 of max_{i <= j < T-1} a(i, j) - a(i, T-1).
// Throws InputError when T == 1 (forgetting is undefined) or entries are missing.
double compute_fr(const AccuracyMatrix& m);

}  // namespace cilab
