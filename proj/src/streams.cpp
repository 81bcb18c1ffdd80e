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

#include "cilab/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "cilab/errors.hpp"
#include "cilab/format.hpp"
#include "cilab/random.hpp"

namespace cilab {

Dataset make_synthetic_gaussian(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw InputError("synthetic: need at least 2 classes");
  if (spec.dim < 2) throw InputError("synthetic: need dim >= 2");
  if (!(spec.spread > 0.0)) throw InputError("synthetic: spread must be positive");
  if (spec.per_class < 5) {
    throw InputError("synthetic: per_class must be >= 5 for an 80/20 split, got " +
                     std::to_string(spec.per_class));
  }

  Rng rng(spec.seed);
  std::vector<std::vector<double>> means(spec.num_classes, std::vector<double>(spec.dim));
  for (auto& mean : means) {
    double norm = 0.0;
    while (norm < 1e-12) {
      norm = 0.0;
      for (double& v : mean) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (double& v : mean) v /= norm;
  }

  Dataset out;
  out.num_classes = spec.num_classes;
  out.dim = spec.dim;
  out.original_labels.resize(spec.num_classes);
  std::iota(out.original_labels.begin(), out.original_labels.end(), 0);

  const std::size_t n_test = spec.per_class / 5;
  for (std::size_t k = 0; k < spec.num_classes; ++k) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Sample s{std::vector<double>(spec.dim), static_cast<Label>(k)};
      for (std::size_t d = 0; d < spec.dim; ++d) s.features[d] = means[k][d] + spec.spread * rng.normal();
      (i < spec.per_class - n_test ? out.train : out.test).push_back(std::move(s));
    }
  }
  return out;
}

Dataset split_train_test(const LabeledSet& set, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InputError("split_train_test: test_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> per_class(set.num_classes, 0);
  for (const auto& s : set.samples) per_class.at(static_cast<std::size_t>(s.label))++;

  std::vector<std::size_t> seen(set.num_classes, 0);
  Dataset out;
  out.num_classes = set.num_classes;
  out.dim = set.dim;
  out.original_labels = set.original_labels;
  for (const auto& s : set.samples) {
    const auto k = static_cast<std::size_t>(s.label);
    const auto n_test = static_cast<std::size_t>(std::floor(per_class[k] * test_fraction));
    const bool to_test = seen[k]++ >= per_class[k] - n_test;
    (to_test ? out.test : out.train).push_back(s);
  }
  return out;
}

TaskStream split_class_incremental(const Dataset& dataset, std::size_t num_tasks,
                                   std::uint64_t seed) {
  if (num_tasks == 0) throw InputError("split: number of tasks must be positive");
  if (dataset.num_classes % num_tasks != 0) {
    throw InputError("split: " + std::to_string(dataset.num_classes) +
                     " classes are not divisible into " + std::to_string(num_tasks) + " tasks");
  }
  std::vector<Label> order(dataset.num_classes);
  std::iota(order.begin(), order.end(), 0);
  if (seed != 0) {
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
  }

  const std::size_t group = dataset.num_classes / num_tasks;
  std::vector<std::size_t> task_of(dataset.num_classes);
  TaskStream stream;
  stream.num_classes = dataset.num_classes;
  stream.dim = dataset.dim;
  stream.tasks.resize(num_tasks);
  for (std::size_t t = 0; t < num_tasks; ++t) {
    auto& task = stream.tasks[t];
    task.task_index = t;
    task.class_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(t * group),
                          order.begin() + static_cast<std::ptrdiff_t>((t + 1) * group));
    std::sort(task.class_ids.begin(), task.class_ids.end());
    for (Label c : task.class_ids) task_of[static_cast<std::size_t>(c)] = t;
  }
  for (const auto& s : dataset.train) stream.tasks[task_of.at(static_cast<std::size_t>(s.label))].train.push_back(s);
  for (const auto& s : dataset.test) stream.tasks[task_of.at(static_cast<std::size_t>(s.label))].test.push_back(s);
  return stream;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

LabeledSet load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  const std::string where = path.string() + ":";

  std::string line;
  if (!std::getline(in, line)) throw ParseError(where + "1: empty file");
  const auto header = split_commas(trim(line));
  if (header.size() < 2 || trim(header[0]) != "label") {
    throw ParseError(where + "1: header must be \"label,f0,f1,...\"");
  }
  const std::size_t dim = header.size() - 1;

  std::vector<std::pair<std::int64_t, std::vector<double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_commas(body);
    if (fields.size() != header.size()) {
      throw ParseError(where + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    std::int64_t label = 0;
    const auto lf = trim(fields[0]);
    auto [lp, lec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lec != std::errc() || lp != lf.data() + lf.size()) {
      throw ParseError(where + std::to_string(line_no) + ": non-integer label \"" + std::string(lf) + "\"");
    }
    std::vector<double> feats(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      const auto f = trim(fields[d + 1]);
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), feats[d]);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(feats[d])) {
        throw ParseError(where + std::to_string(line_no) + ": non-numeric field " +
                         std::to_string(d + 1) + " \"" + std::string(f) + "\"");
      }
    }
    rows.emplace_back(label, std::move(feats));
  }
  if (rows.empty()) throw ParseError(where + std::to_string(line_no) + ": no samples");

  std::map<std::int64_t, Label> remap;
  for (const auto& [label, feats] : rows) remap.emplace(label, 0);
  LabeledSet out;
  out.dim = dim;
  for (auto& [orig, dense] : remap) {
    dense = static_cast<Label>(out.original_labels.size());
    out.original_labels.push_back(orig);
  }
  out.num_classes = remap.size();
  out.samples.reserve(rows.size());
  for (auto& [label, feats] : rows) out.samples.push_back({std::move(feats), remap.at(label)});
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset " + path.string());
  const std::size_t dim = samples.empty() ? 0 : samples.front().features.size();
  out << "label";
  for (std::size_t d = 0; d < dim; ++d) out << ",f" << d;
  out << '\n';
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw InputError("write_dataset_csv: ragged samples");
    out << s.label;
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Matrix stack_features(std::span<const Sample> samples) {
  const std::size_t dim = samples.empty() ? 0 : samples.front().features.size();
  Matrix m(samples.size(), dim);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    if (samples[r].features.size() != dim) throw InputError("stack_features: ragged samples");
    std::copy(samples[r].features.begin(), samples[r].features.end(), m.row(r).begin());
  }
  return m;
}

std::vector<Label> collect_labels(std::span<const Sample> samples) {
  std::vector<Label> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return labels;
}

void validate_stream(const TaskStream& stream) {
  std::set<Label> seen;
  for (const auto& task : stream.tasks) {
    const std::set<Label> ids(task.class_ids.begin(), task.class_ids.end());
    for (Label c : ids) {
      if (c < 0 || static_cast<std::size_t>(c) >= stream.num_classes) {
        throw InputError("stream: class id " + std::to_string(c) + " out of range");
      }
      if (!seen.insert(c).second) {
        throw InputError("stream: class " + std::to_string(c) + " appears in more than one task");
      }
    }
    for (const auto* part : {&task.train, &task.test}) {
      for (const auto& s : *part) {
        if (!ids.contains(s.label)) {
          throw InputError("stream: task " + std::to_string(task.task_index) +
                           " holds a sample of foreign class " + std::to_string(s.label));
        }
        if (s.features.size() != stream.dim) throw InputError("stream: feature width mismatch");
      }
    }
  }
  if (seen.size() != stream.num_classes) throw InputError("stream: classes do not cover [0, K)");
}

}  // namespace cilab
