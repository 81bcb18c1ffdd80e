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

#include "cilab/results.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "cilab/errors.hpp"
#include "cilab/format.hpp"

namespace cilab {

using nlohmann::json;

namespace {

void mean_std(const std::vector<double>& xs, std::optional<double>& mean, std::optional<double>& sd) {
  if (xs.empty()) return;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  mean = m;
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string series_name(MethodType m, RegularizerType r) {
  std::string s(to_string(m));
  if (r != RegularizerType::kNone) s += "+" + std::string(to_string(r));
  return s;
}

}  // namespace

std::vector<CellSummary> summarize(std::span<const ResultRecord> records) {
  using Key = std::tuple<MethodType, RegularizerType, std::size_t>;
  std::vector<Key> order;
  std::vector<std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) {
    const Key k{r.cell.method, r.cell.regularizer, r.cell.budget};
    std::size_t g = 0;
    while (g < order.size() && order[g] != k) ++g;
    if (g == order.size()) {
      order.push_back(k);
      groups.emplace_back();
    }
    groups[g].push_back(&r);
  }
  std::vector<CellSummary> out;
  for (std::size_t g = 0; g < order.size(); ++g) {
    CellSummary s;
    std::tie(s.method, s.regularizer, s.budget) = order[g];
    std::vector<double> accs, frs;
    for (const auto* r : groups[g]) {
      if (!r->ok) {
        ++s.failed;
        continue;
      }
      accs.push_back(r->acc);
      if (r->fr) frs.push_back(*r->fr);
    }
    s.n = accs.size();
    mean_std(accs, s.acc_mean, s.acc_std);
    mean_std(frs, s.fr_mean, s.fr_std);
    out.push_back(s);
  }
  return out;
}

void emit_results(std::span<const ResultRecord> records, const std::filesystem::path& dir) {
  if (records.empty()) throw InputError("emit_results: no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());

  {
    const auto path = dir / "results.csv";
    auto out = open_out(path);
    out << "method,regularizer,budget,seed,acc,fr,seconds\n";
    for (const auto& r : records) {
      if (!r.ok) continue;
      out << to_string(r.cell.method) << ',' << to_string(r.cell.regularizer) << ',' << r.cell.budget << ','
          << r.cell.seed << ',' << format_double(r.acc) << ',' << opt_csv(r.fr) << ','
          << format_double(r.seconds) << '\n';
    }
    close_out(out, path);
  }

  const auto summary = summarize(records);
  {
    json cells = json::array();
    for (const auto& s : summary) {
      cells.push_back({{"method", to_string(s.method)},
                       {"regularizer", to_string(s.regularizer)},
                       {"budget", s.budget},
                       {"n", s.n},
                       {"failed", s.failed},
                       {"acc_mean", opt(s.acc_mean)},
                       {"acc_std", opt(s.acc_std)},
                       {"fr_mean", opt(s.fr_mean)},
                       {"fr_std", opt(s.fr_std)}});
    }
    json failures = json::array();
    for (const auto& r : records) {
      if (r.ok) continue;
      failures.push_back({{"method", to_string(r.cell.method)},
                          {"regularizer", to_string(r.cell.regularizer)},
                          {"budget", r.cell.budget},
                          {"seed", r.cell.seed},
                          {"error", r.error}});
    }
    const auto path = dir / "summary.json";
    auto out = open_out(path);
    out << json{{"fingerprint", records.front().fingerprint}, {"cells", cells}, {"failures", failures}}.dump(2)
        << '\n';
    close_out(out, path);
  }

  {
    const auto path = dir / "plotdata.csv";
    auto out = open_out(path);
    out << "series,method,regularizer,budget,acc_mean,acc_std,fr_mean,fr_std,n\n";
    for (const auto& s : summary) {
      out << series_name(s.method, s.regularizer) << ',' << to_string(s.method) << ','
          << to_string(s.regularizer) << ',' << s.budget << ',' << opt_csv(s.acc_mean) << ','
          << opt_csv(s.acc_std) << ',' << opt_csv(s.fr_mean) << ',' << opt_csv(s.fr_std) << ',' << s.n
          << '\n';
    }
    close_out(out, path);
  }

  {
    const auto path = dir / "losses.csv";
    auto out = open_out(path);
    out << "method,regularizer,budget,seed,task,epoch,total,ce_current,ce_replay,distill,reg\n";
    for (const auto& r : records) {
      if (!r.ok) continue;
      for (const auto& log : r.logs) {
        out << to_string(r.cell.method) << ',' << to_string(r.cell.regularizer) << ',' << r.cell.budget << ','
            << r.cell.seed << ',' << log.task << ',' << log.epoch << ',' << format_double(log.mean.total) << ','
            << format_double(log.mean.ce_current) << ',' << format_double(log.mean.ce_replay) << ','
            << format_double(log.mean.distill) << ',' << format_double(log.mean.reg) << '\n';
      }
    }
    close_out(out, path);
  }

  {
    json runs = json::array();
    for (const auto& r : records) {
      if (!r.ok || !r.accuracy) continue;
      runs.push_back({{"method", to_string(r.cell.method)},
                      {"regularizer", to_string(r.cell.regularizer)},
                      {"budget", r.cell.budget},
                      {"seed", r.cell.seed},
                      {"matrix", r.accuracy->to_json()}});
    }
    const auto path = dir / "matrices.json";
    auto out = open_out(path);
    out << runs.dump(2) << '\n';
    close_out(out, path);
  }
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "method,regularizer,budget,seed,acc,fr,seconds") {
    throw ParseError(path.string() + ":1: unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    try {
      ResultRow r;
      r.method = f[0];
      r.regularizer = f[1];
      r.budget = std::stoull(f[2]);
      r.seed = std::stoull(f[3]);
      r.acc = std::stod(f[4]);
      if (!f[5].empty()) r.fr = std::stod(f[5]);
      r.seconds = std::stod(f[6]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

}  // namespace cilab
