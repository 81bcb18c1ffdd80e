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
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cilab/config.hpp"
#include "cilab/methods.hpp"
#include "cilab/metrics.hpp"

namespace cilab {

// One (seed, method, regularizer, budget) point of the grid.
struct CellSpec {
  std::uint64_t seed = 0;
  MethodType method = MethodType::kER;
  RegularizerType regularizer = RegularizerType::kNone;
  std::size_t budget = 0;

  std::string descriptor() const;
};

// Empty sets match everything.
struct CellFilter {
  std::set<MethodType> methods;
  std::set<RegularizerType> regularizers;
  std::set<std::size_t> budgets;

  bool matches(const CellSpec& cell) const;
  // "method=er,reg=im,budget=5"; repeat a key to allow several values.
  static CellFilter parse(std::string_view text);
};

struct ResultRecord {
  std::string fingerprint;
  CellSpec cell;
  bool ok = false;
  std::string error;  // set when !ok
  double acc = 0.0;
  std::optional<double> fr;  // undefined for single-task streams
  std::vector<double> final_accuracies;
  double seconds = 0.0;
  std::optional<AccuracyMatrix> accuracy;
  std::vector<EpochLog> logs;
};

// Seeds derived from (master seed, tag), independent of execution order.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag);

// Cells in canonical order: seed, method, regularizer, budget.
std::vector<CellSpec> enumerate_cells(const ExperimentConfig& cfg, const CellFilter& filter = {});

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed);
TaskStream build_stream(const ExperimentConfig& cfg, std::uint64_t master_seed);
TrainConfig make_train_config(const ExperimentConfig& cfg, const CellSpec& cell);

// Runs one cell. Numeric failures are captured in the record; configuration
// errors propagate.
ResultRecord run_cell(const ExperimentConfig& cfg, const CellSpec& cell);

// One record per cell in canonical order. Cells run on `jobs` threads; a
// failed cell does not stop the others.
std::vector<ResultRecord> run_grid(const ExperimentConfig& cfg, const CellFilter& filter = {},
                                   std::size_t jobs = 1);

}  // namespace cilab
