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

#include "cilab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "cilab/errors.hpp"
#include "cilab/random.hpp"

namespace cilab {

using nlohmann::json;

std::string_view to_string(InsertCadence c) { return c == InsertCadence::kBatch ? "batch" : "task_end"; }

double ExperimentConfig::lr_for(MethodType m) const {
  const auto it = lr_overrides.find(m);
  return it == lr_overrides.end() ? lr : it->second;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("config field " + field + ": " + why);
  };
  if (dataset.kind == DatasetKind::kSynthetic) {
    if (dataset.num_classes < 2) fail("dataset.num_classes", "must be >= 2");
    if (dataset.dim < 2) fail("dataset.dim", "must be >= 2");
    if (dataset.per_class < 5) fail("dataset.per_class", "must be >= 5");
    if (!(dataset.spread > 0.0)) fail("dataset.spread", "must be > 0");
    if (num_tasks != 0 && dataset.num_classes % num_tasks != 0) {
      fail("stream.tasks", std::to_string(dataset.num_classes) + " classes are not divisible into " +
                               std::to_string(num_tasks) + " tasks");
    }
  } else {
    if (dataset.path.empty()) fail("dataset.path", "required for csv datasets");
    if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0)) fail("dataset.test_fraction", "must lie in (0, 1)");
  }
  if (num_tasks < 1) fail("stream.tasks", "must be >= 1");
  for (std::size_t h : hidden_dims) {
    if (h < 1) fail("model.hidden", "widths must be >= 1");
  }
  if (methods.empty()) fail("grid.methods", "must not be empty");
  if (regularizers.empty()) fail("grid.regularizers", "must not be empty");
  if (budgets.empty()) fail("grid.budgets", "must not be empty");
  for (std::size_t b : budgets) {
    if (b < 1) fail("grid.budgets", "every budget must be >= 1");
  }
  if (seeds.empty()) fail("grid.seeds", "must not be empty");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("regularization.lambda", "must lie in [0, 1]");
  if (!(ewc_lambda >= 0.0)) fail("regularization.ewc_lambda", "must be >= 0");
  if (!(si_c >= 0.0)) fail("regularization.si_c", "must be >= 0");
  if (!(si_xi > 0.0)) fail("regularization.si_xi", "must be > 0");
  if (!(alpha >= 0.0)) fail("distillation.alpha", "must be >= 0");
  if (!(beta >= 0.0)) fail("distillation.beta", "must be >= 0");
  if (batch_size < 1) fail("training.batch_size", "must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("training.lr", "must be a positive finite number");
  for (const auto& [m, v] : lr_overrides) {
    if (!(v > 0.0) || !std::isfinite(v)) fail("training.lr_overrides." + std::string(to_string(m)), "must be positive");
  }
  if (momentum != 0.0) fail("training.momentum", "only plain SGD (0) is supported");
  if (weight_decay != 0.0) fail("training.weight_decay", "only 0 is supported");
}

namespace {

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

// Unsigned fields only accept non-negative integer literals (nlohmann would
// otherwise truncate 2.5 or wrap -1).
template <typename T>
void check_integral(const json& v, const std::string& field) {
  if constexpr (is_vector<T>::value) {
    if (!v.is_array()) throw ConfigError("config field " + field + ": must be an array");
    for (const auto& e : v) check_integral<typename T::value_type>(e, field);
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!v.is_number_unsigned()) throw ConfigError("config field " + field + ": must be a non-negative integer");
  }
}

// Reads keys of one JSON object, recording which were absent and rejecting
// any that were never consumed.
class Section {
 public:
  Section(const json& parent, std::string name, ExperimentConfig& cfg, bool required = false)
      : name_(std::move(name)), cfg_(cfg) {
    const auto it = parent.find(name_);
    if (it == parent.end()) {
      if (required) throw ConfigError("config field " + name_ + ": required section missing");
      node_ = json::object();
    } else {
      if (!it->is_object()) throw ConfigError("config field " + name_ + ": must be an object");
      node_ = *it;
    }
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    known_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) {
      cfg_.defaulted.push_back(name_ + "." + key);
      return;
    }
    check_integral<T>(*it, name_ + "." + key);
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field " + name_ + "." + key + ": wrong type");
    }
  }

  template <typename T>
  T required(const std::string& key) {
    known_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) throw ConfigError("config field " + name_ + "." + key + ": required");
    try {
      return it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field " + name_ + "." + key + ": wrong type");
    }
  }

  const json* raw(const std::string& key) {
    known_.insert(key);
    const auto it = node_.find(key);
    if (it == node_.end()) {
      cfg_.defaulted.push_back(name_ + "." + key);
      return nullptr;
    }
    return &*it;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!known_.contains(key)) throw ConfigError("unknown config key \"" + name_ + "." + key + "\"");
    }
  }

 private:
  std::string name_;
  ExperimentConfig& cfg_;
  json node_;
  std::set<std::string> known_;
};

template <typename T, typename Parse>
std::vector<T> parse_names(const json& arr, const std::string& field, Parse parse) {
  if (!arr.is_array()) throw ConfigError("config field " + field + ": must be an array");
  std::vector<T> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ConfigError("config field " + field + ": entries must be strings");
    try {
      out.push_back(parse(v.get<std::string>()));
    } catch (const ConfigError& e) {
      throw ConfigError("config field " + field + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> kSections{"dataset", "stream", "model", "grid",
                                               "regularization", "distillation", "training", "output"};
  for (const auto& [key, value] : j.items()) {
    if (!kSections.contains(key)) throw ConfigError("unknown config key \"" + key + "\"");
  }

  ExperimentConfig cfg;
  {
    Section s(j, "dataset", cfg, true);
    const auto kind = s.required<std::string>("kind");
    if (kind == "synthetic") {
      cfg.dataset.kind = DatasetKind::kSynthetic;
      s.read("num_classes", cfg.dataset.num_classes);
      s.read("per_class", cfg.dataset.per_class);
      s.read("dim", cfg.dataset.dim);
      s.read("spread", cfg.dataset.spread);
      if (const json* seed = s.raw("seed"); seed && !seed->is_null()) {
        if (!seed->is_number_unsigned()) throw ConfigError("config field dataset.seed: must be a non-negative integer or null");
        cfg.dataset.seed = seed->get<std::uint64_t>();
      }
    } else if (kind == "csv") {
      cfg.dataset.kind = DatasetKind::kCsv;
      std::filesystem::path p = s.required<std::string>("path");
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.dataset.path = p.lexically_normal().string();
      s.read("test_fraction", cfg.dataset.test_fraction);
    } else {
      throw ConfigError("config field dataset.kind: expected \"synthetic\" or \"csv\", got \"" + kind + "\"");
    }
    s.finish();
  }
  {
    Section s(j, "stream", cfg);
    s.read("tasks", cfg.num_tasks);
    s.read("class_order_seed", cfg.class_order_seed);
    s.finish();
  }
  {
    Section s(j, "model", cfg);
    s.read("hidden", cfg.hidden_dims);
    s.finish();
  }
  {
    Section s(j, "grid", cfg, true);
    cfg.methods = parse_names<MethodType>(s.required<json>("methods"), "grid.methods", parse_method);
    if (const json* r = s.raw("regularizers")) {
      cfg.regularizers = parse_names<RegularizerType>(*r, "grid.regularizers", parse_regularizer);
    }
    s.read("budgets", cfg.budgets);
    s.read("seeds", cfg.seeds);
    s.finish();
  }
  {
    Section s(j, "regularization", cfg);
    if (const json* t = s.raw("target")) {
      if (!t->is_string()) throw ConfigError("config field regularization.target: must be a string");
      try {
        cfg.reg_target = parse_reg_target(t->get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("config field regularization.target: ") + e.what());
      }
    }
    s.read("lambda", cfg.lambda);
    s.read("ewc_lambda", cfg.ewc_lambda);
    s.read("si_c", cfg.si_c);
    s.read("si_xi", cfg.si_xi);
    s.finish();
  }
  {
    Section s(j, "distillation", cfg);
    s.read("alpha", cfg.alpha);
    s.read("beta", cfg.beta);
    s.finish();
  }
  {
    Section s(j, "training", cfg);
    s.read("epochs_per_task", cfg.epochs_per_task);
    s.read("batch_size", cfg.batch_size);
    s.read("lr", cfg.lr);
    if (const json* o = s.raw("lr_overrides")) {
      if (!o->is_object()) throw ConfigError("config field training.lr_overrides: must be an object");
      for (const auto& [name, value] : o->items()) {
        MethodType m;
        try {
          m = parse_method(name);
        } catch (const ConfigError&) {
          throw ConfigError("unknown config key \"training.lr_overrides." + name + "\"");
        }
        if (!value.is_number()) throw ConfigError("config field training.lr_overrides." + name + ": must be a number");
        cfg.lr_overrides[m] = value.get<double>();
      }
    }
    s.read("momentum", cfg.momentum);
    s.read("weight_decay", cfg.weight_decay);
    if (const json* c = s.raw("insert_at")) {
      const auto v = c->is_string() ? c->get<std::string>() : std::string();
      if (v == "batch") {
        cfg.insert_at = InsertCadence::kBatch;
      } else if (v == "task_end") {
        cfg.insert_at = InsertCadence::kTaskEnd;
      } else {
        throw ConfigError("config field training.insert_at: expected \"batch\" or \"task_end\"");
      }
    }
    s.finish();
  }
  {
    Section s(j, "output", cfg);
    s.read("dir", cfg.output_dir);
    s.read("record_timing", cfg.record_timing);
    s.finish();
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir,
                                   std::string_view origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "parse error at line L, column C: ..."
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
  return config_from_json(j, base_dir);
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.parent_path(), path.string());
}

json to_json(const ExperimentConfig& cfg) {
  json dataset;
  if (cfg.dataset.kind == DatasetKind::kSynthetic) {
    dataset = {{"kind", "synthetic"},
               {"num_classes", cfg.dataset.num_classes},
               {"per_class", cfg.dataset.per_class},
               {"dim", cfg.dataset.dim},
               {"spread", cfg.dataset.spread},
               {"seed", cfg.dataset.seed ? json(*cfg.dataset.seed) : json(nullptr)}};
  } else {
    dataset = {{"kind", "csv"}, {"path", cfg.dataset.path}, {"test_fraction", cfg.dataset.test_fraction}};
  }
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  json regs = json::array();
  for (auto r : cfg.regularizers) regs.push_back(to_string(r));
  json overrides = json::object();
  for (const auto& [m, v] : cfg.lr_overrides) overrides[std::string(to_string(m))] = v;

  return {{"dataset", dataset},
          {"stream", {{"tasks", cfg.num_tasks}, {"class_order_seed", cfg.class_order_seed}}},
          {"model", {{"hidden", cfg.hidden_dims}}},
          {"grid", {{"methods", methods}, {"regularizers", regs}, {"budgets", cfg.budgets}, {"seeds", cfg.seeds}}},
          {"regularization",
           {{"target", to_string(cfg.reg_target)},
            {"lambda", cfg.lambda},
            {"ewc_lambda", cfg.ewc_lambda},
            {"si_c", cfg.si_c},
            {"si_xi", cfg.si_xi}}},
          {"distillation", {{"alpha", cfg.alpha}, {"beta", cfg.beta}}},
          {"training",
           {{"epochs_per_task", cfg.epochs_per_task},
            {"batch_size", cfg.batch_size},
            {"lr", cfg.lr},
            {"lr_overrides", overrides},
            {"momentum", cfg.momentum},
            {"weight_decay", cfg.weight_decay},
            {"insert_at", to_string(cfg.insert_at)}}},
          {"output", {{"dir", cfg.output_dir}, {"record_timing", cfg.record_timing}}}};
}

std::uint64_t fingerprint(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  return fnv1a64(j.dump());  // object keys are sorted, so the dump is canonical
}

std::string fingerprint_hex(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fingerprint(cfg)));
  return buf;
}

}  // namespace cilab
