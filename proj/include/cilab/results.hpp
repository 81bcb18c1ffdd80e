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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cilab/grid.hpp"

namespace cilab {

// Mean and sample standard deviation (n - 1) over the successful seeds of one
// (method, regularizer, budget) cell.
struct CellSummary {
  MethodType method = MethodType::kER;
  RegularizerType regularizer = RegularizerType::kNone;
  std::size_t budget = 0;
  std::size_t n = 0;
  std::size_t failed = 0;
  std::optional<double> acc_mean, acc_std, fr_mean, fr_std;
};

std::vector<CellSummary> summarize(std::span<const ResultRecord> records);

// Writes into `dir` (created if needed):
//   results.csv   method,regularizer,budget,seed,acc,fr,seconds (successful cells)
//   summary.json  per-cell mean and std over seeds, plus failures
//   plotdata.csv  one row per (series, budget) for external plotting
//   losses.csv    per-epoch loss breakdown of every successful cell
//   matrices.json accuracy matrix of every successful cell
// Throws IoError if the directory or a file cannot be written.
void emit_results(std::span<const ResultRecord> records, const std::filesystem::path& dir);

struct ResultRow {
  std::string method;
  std::string regularizer;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  double acc = 0.0;
  std::optional<double> fr;
  double seconds = 0.0;
};

// Parses a results.csv written by emit_results.
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

}  // namespace cilab
