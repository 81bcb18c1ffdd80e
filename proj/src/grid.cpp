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

#include "cilab/grid.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <sstream>
#include <thread>

#include "cilab/errors.hpp"
#include "cilab/random.hpp"

namespace cilab {

std::string CellSpec::descriptor() const {
  std::ostringstream os;
  os << "seed=" << seed << ",method=" << to_string(method) << ",reg=" << to_string(regularizer)
     << ",budget=" << budget;
  return os.str();
}

bool CellFilter::matches(const CellSpec& cell) const {
  return (methods.empty() || methods.contains(cell.method)) &&
         (regularizers.empty() || regularizers.contains(cell.regularizer)) &&
         (budgets.empty() || budgets.contains(cell.budget));
}

CellFilter CellFilter::parse(std::string_view text) {
  CellFilter f;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string_view::npos) throw ConfigError("filter: expected key=value, got \"" + std::string(item) + "\"");
      const std::string_view key = item.substr(0, eq);
      const std::string_view value = item.substr(eq + 1);
      if (key == "method") {
        f.methods.insert(parse_method(value));
      } else if (key == "reg" || key == "regularizer") {
        f.regularizers.insert(parse_regularizer(value));
      } else if (key == "budget") {
        try {
          f.budgets.insert(static_cast<std::size_t>(std::stoull(std::string(value))));
        } catch (const std::exception&) {
          throw ConfigError("filter: invalid budget \"" + std::string(value) + "\"");
        }
      } else {
        throw ConfigError("filter: unknown key \"" + std::string(key) + "\"");
      }
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return f;
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view tag) {
  return mix64(master_seed ^ mix64(fnv1a64(tag)));
}

std::vector<CellSpec> enumerate_cells(const ExperimentConfig& cfg, const CellFilter& filter) {
  std::vector<CellSpec> cells;
  for (auto seed : cfg.seeds) {
    for (auto m : cfg.methods) {
      for (auto r : cfg.regularizers) {
        for (auto b : cfg.budgets) {
          CellSpec c{seed, m, r, b};
          if (filter.matches(c)) cells.push_back(c);
        }
      }
    }
  }
  return cells;
}

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  if (cfg.dataset.kind == DatasetKind::kCsv) {
    return split_train_test(load_dataset_csv(cfg.dataset.path), cfg.dataset.test_fraction);
  }
  SyntheticSpec spec{cfg.dataset.num_classes, cfg.dataset.per_class, cfg.dataset.dim, cfg.dataset.spread,
                     cfg.dataset.seed.value_or(derive_seed(master_seed, "data"))};
  return make_synthetic_gaussian(spec);
}

TaskStream build_stream(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  return split_class_incremental(build_dataset(cfg, master_seed), cfg.num_tasks, cfg.class_order_seed);
}

TrainConfig make_train_config(const ExperimentConfig& cfg, const CellSpec& cell) {
  TrainConfig tc;
  tc.epochs_per_task = cfg.epochs_per_task;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr_for(cell.method);
  // Shared by every method/regularizer/budget under one master seed, so grid
  // comparisons see the same initialization and shuffles.
  tc.seed = derive_seed(cell.seed, "train");
  tc.hidden_dims = cfg.hidden_dims;
  tc.method = {cell.method, cfg.alpha, cfg.beta};
  tc.regularizer = {cell.regularizer, cfg.lambda};
  tc.reg_target = cfg.reg_target;
  tc.per_class_budget = cell.budget;
  tc.insert_at = cfg.insert_at;
  tc.ewc_strength = cfg.ewc_lambda;
  tc.si_strength = cfg.si_c;
  tc.si_damping = cfg.si_xi;
  tc.validate();
  return tc;
}

ResultRecord run_cell(const ExperimentConfig& cfg, const CellSpec& cell) {
  ResultRecord rec;
  rec.fingerprint = fingerprint_hex(cfg);
  rec.cell = cell;
  const TrainConfig tc = make_train_config(cfg, cell);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const TaskStream stream = build_stream(cfg, cell.seed);
    RunResult run = run_sequence(stream, tc);
    rec.acc = compute_acc(run.accuracy);
    if (run.accuracy.num_tasks() >= 2) rec.fr = compute_fr(run.accuracy);
    const std::size_t last = run.accuracy.num_tasks() - 1;
    for (std::size_t i = 0; i <= last; ++i) rec.final_accuracies.push_back(*run.accuracy.at(i, last));
    rec.accuracy = std::move(run.accuracy);
    rec.logs = std::move(run.logs);
    rec.ok = true;
  } catch (const NumericError& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  if (cfg.record_timing) {
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

std::vector<ResultRecord> run_grid(const ExperimentConfig& cfg, const CellFilter& filter, std::size_t jobs) {
  cfg.validate();
  const auto cells = enumerate_cells(cfg, filter);
  std::vector<ResultRecord> records(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        records[i] = run_cell(cfg, cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return records;
}

}  // namespace cilab
