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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cilab/buffer.hpp"
#include "cilab/methods.hpp"
#include "cilab/regularizers.hpp"
#include "cilab/streams.hpp"

namespace cilab {

enum class DatasetKind { kSynthetic, kCsv };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSynthetic;
  // Synthetic blobs. When `seed` is unset the data seed is derived from each
  // run's master seed.
  std::size_t num_classes = 10;
  std::size_t per_class = 100;
  std::size_t dim = 16;
  double spread = 0.3;
  std::optional<std::uint64_t> seed;
  // CSV file, resolved against the config file's directory.
  std::string path;
  double test_fraction = 0.2;
};

// Declarative description of a grid of continual-learning runs.
struct ExperimentConfig {
  DatasetSpec dataset;
  std::size_t num_tasks = 5;
  std::uint64_t class_order_seed = 0;
  std::vector<std::size_t> hidden_dims{64};

  std::vector<MethodType> methods;
  std::vector<RegularizerType> regularizers{RegularizerType::kNone};
  std::vector<std::size_t> budgets{5};
  std::vector<std::uint64_t> seeds{0};

  RegTarget reg_target = RegTarget::kCurrent;
  double lambda = 0.5;
  double ewc_lambda = 1.0;
  double si_c = 1.0;
  double si_xi = 0.1;
  double alpha = 0.3;
  double beta = 0.5;

  std::size_t epochs_per_task = 5;
  std::size_t batch_size = 32;
  double lr = 0.1;
  std::map<MethodType, double> lr_overrides;
  double momentum = 0.0;
  double weight_decay = 0.0;
  InsertCadence insert_at = InsertCadence::kBatch;

  std::string output_dir = "results";
  bool record_timing = true;

  // Dotted names of the optional fields that were filled with defaults.
  std::vector<std::string> defaulted;

  double lr_for(MethodType m) const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Reads a JSON config. Syntax errors carry line and column; unknown keys and
// constraint violations name the field. Throws ConfigError (IoError if the
// file cannot be read).
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {},
                                   std::string_view origin = "<config>");
ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

// Complete JSON form (all defaults explicit); parses back to an equal config.
nlohmann::json to_json(const ExperimentConfig& cfg);

// Stable hash of everything that determines results (the output section is excluded).
std::uint64_t fingerprint(const ExperimentConfig& cfg);
std::string fingerprint_hex(const ExperimentConfig& cfg);

std::string_view to_string(InsertCadence c);

}  // namespace cilab
