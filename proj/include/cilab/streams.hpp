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
#include <span>
#include <vector>

#include "cilab/matrix.hpp"
#include "cilab/mlp.hpp"

namespace cilab {

struct Sample {
  std::vector<double> features;
  Label label = 0;

  bool operator==(const Sample&) const = default;
};

// A labeled collection before any train/test split. `original_labels[k]` is the
// label that dense class k had in the source (identity for synthetic data).
struct LabeledSet {
  std::vector<Sample> samples;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<std::int64_t> original_labels;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<std::int64_t> original_labels;
};

struct TaskSpec {
  std::size_t task_index = 0;
  std::vector<Label> class_ids;  // sorted ascending
  std::vector<Sample> train;
  std::vector<Sample> test;
};

struct TaskStream {
  std::vector<TaskSpec> tasks;
  std::size_t num_classes = 0;
  std::size_t dim = 0;

  std::size_t num_tasks() const { return tasks.size(); }
};

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t per_class = 100;
  std::size_t dim = 16;
  double spread = 0.3;
  std::uint64_t seed = 0;
};

// Gaussian blobs around class means drawn uniformly on the unit sphere.
// Each class contributes per_class samples; per_class / 5 of them go to test.
Dataset make_synthetic_gaussian(const SyntheticSpec& spec);

// Per class, the last floor(n * test_fraction) samples (in input order) go to test.
Dataset split_train_test(const LabeledSet& set, double test_fraction = 0.2);

// Partitions the classes into num_tasks contiguous groups after a seeded class
// permutation (identity when seed == 0).
TaskStream split_class_incremental(const Dataset& dataset, std::size_t num_tasks,
                                   std::uint64_t seed);

// CSV with header "label,f0,...,f{d-1}"; labels are remapped to [0, K) in
// ascending order of their original value.
LabeledSet load_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, std::span<const Sample> samples);

// Stacks sample features into a (n x dim) matrix and collects labels.
Matrix stack_features(std::span<const Sample> samples);
std::vector<Label> collect_labels(std::span<const Sample> samples);

void validate_stream(const TaskStream& stream);

}  // namespace cilab
