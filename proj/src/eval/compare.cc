// Copyright 2026 The Fusion Screen Authors.
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

#include "fusion/eval/compare.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fusion::eval {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> SplitLine(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, delim)) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

double ParseNumber(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v)) {
    throw std::runtime_error(where + ": not a finite number: '" + s + "'");
  }
  return v;
}

std::string Num(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream out;
  out.precision(17);
  out << *v;
  return out.str();
}

double Strength(const MethodScores& m, double s) {
  return m.direction == Direction::kLowerIsStronger ? std::abs(s) : s;
}

}  // namespace

MethodScores FromBestPoses(std::string name, const std::vector<BestPose>& best,
                           Direction direction) {
  MethodScores m{std::move(name), direction, {}};
  for (const BestPose& b : best) m.scores[{b.compound_id, b.target_id}] = b.score;
  return m;
}

ExperimentalTable ReadExperimentalTable(const fs::path& path,
                                        const std::map<std::string, Direction>& directions) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error(path.string() + ": empty table");
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> cols = SplitLine(header, delim);
  int c_compound = -1, c_target = -1, c_value = -1, c_rmsd = -1;
  std::vector<int> method_cols;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    const std::string& c = cols[static_cast<std::size_t>(i)];
    if (c == "compound_id") c_compound = i;
    else if (c == "target_id") c_target = i;
    else if (c == "value" || c == "percent_inhibition" || c == "pk") {
      if (c_value >= 0) throw std::runtime_error(path.string() + ": more than one value column");
      c_value = i;
    } else if (c == "rmsd") c_rmsd = i;
    else method_cols.push_back(i);
  }
  if (c_compound < 0 || c_target < 0 || c_value < 0) {
    throw std::runtime_error(path.string() +
                             ": header needs compound_id, target_id and a value column");
  }
  ExperimentalTable t;
  for (int c : method_cols) {
    const std::string& name = cols[static_cast<std::size_t>(c)];
    const auto it = directions.find(name);
    t.external.push_back(
        {name, it == directions.end() ? Direction::kLowerIsStronger : it->second, {}});
  }
  std::set<CompoundTarget> seen;
  std::string line;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = SplitLine(line, delim);
    const std::string where = path.string() + ":" + std::to_string(n);
    if (cells.size() != cols.size()) {
      throw std::runtime_error(where + ": expected " + std::to_string(cols.size()) + " cells");
    }
    ExperimentalValue v;
    v.compound_id = cells[static_cast<std::size_t>(c_compound)];
    v.target_id = cells[static_cast<std::size_t>(c_target)];
    if (!seen.insert({v.compound_id, v.target_id}).second) {
      throw std::runtime_error(where + ": duplicate compound/target");
    }
    v.value = ParseNumber(cells[static_cast<std::size_t>(c_value)], where);
    if (c_rmsd >= 0 && !cells[static_cast<std::size_t>(c_rmsd)].empty()) {
      v.rmsd = ParseNumber(cells[static_cast<std::size_t>(c_rmsd)], where);
    }
    for (std::size_t m = 0; m < method_cols.size(); ++m) {
      const std::string& cell = cells[static_cast<std::size_t>(method_cols[m])];
      if (!cell.empty()) t.external[m].scores[{v.compound_id, v.target_id}] = ParseNumber(cell, where);
    }
    t.rows.push_back(std::move(v));
  }
  return t;
}

ComparisonReport CompareMethods(const std::vector<MethodScores>& methods,
                                const std::vector<ExperimentalValue>& experimental,
                                const ComparisonThresholds& thresholds) {
  if (methods.size() < 2) throw std::invalid_argument("compare: need at least two methods");
  std::vector<const ExperimentalValue*> rows;
  for (const ExperimentalValue& e : experimental) {
    if (thresholds.rmsd_cutoff && e.rmsd && !(*e.rmsd < *thresholds.rmsd_cutoff)) continue;
    rows.push_back(&e);
  }
  std::ostringstream diff;
  int missing = 0;
  for (const MethodScores& m : methods) {
    for (const ExperimentalValue* e : rows) {
      if (!m.scores.count({e->compound_id, e->target_id})) {
        if (++missing <= 20) {
          diff << "\n  " << m.name << " lacks " << e->compound_id << "/" << e->target_id;
        }
      }
    }
  }
  if (missing > 0) {
    throw std::invalid_argument("compare: methods do not cover the same compounds (" +
                                std::to_string(missing) + " missing)" + diff.str());
  }
  std::set<std::string> targets;
  for (const ExperimentalValue* e : rows) targets.insert(e->target_id);

  ComparisonReport report;
  for (const MethodScores& m : methods) {
    for (const std::string& target : targets) {
      ComparisonRow row;
      row.method = m.name;
      row.target = target;
      std::vector<double> score, actual, corr_score, corr_actual;
      for (const ExperimentalValue* e : rows) {
        if (e->target_id != target) continue;
        const double s = Strength(m, m.scores.at({e->compound_id, e->target_id}));
        score.push_back(s);
        actual.push_back(e->value);
        if (e->value > thresholds.correlation_min) {
          corr_score.push_back(s);
          corr_actual.push_back(e->value);
        }
      }
      row.n = score.size();
      row.n_correlation = corr_score.size();
      if (corr_score.size() >= 2) {
        row.pearson = Pearson(corr_score, corr_actual);
        row.spearman = Spearman(corr_score, corr_actual);
        if (!row.pearson) row.notes.push_back("correlation undefined: zero variance");
      } else {
        row.notes.push_back("correlation undefined: fewer than two compounds above " +
                            Num(thresholds.correlation_min));
      }
      const BinaryLabels labels = BinarizeAbove(actual, thresholds.positive_above);
      if (labels.positives > 0 && labels.negatives > 0) {
        std::vector<bool> y;
        for (const auto& l : labels.labels) y.push_back(*l);
        row.pr = ComputePrCurve(score, y);
        row.confusion = Confusion(TopPositives(score, labels.positives), y);
      } else {
        row.notes.push_back("classification undefined: " + std::to_string(labels.positives) +
                            " positive and " + std::to_string(labels.negatives) + " negative");
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

json ToJson(const ComparisonReport& r) {
  json rows = json::array();
  for (const ComparisonRow& row : r.rows) {
    rows.push_back({{"method", row.method},
                    {"target", row.target},
                    {"n", row.n},
                    {"n_correlation", row.n_correlation},
                    {"pearson", OptionalJson(row.pearson)},
                    {"spearman", OptionalJson(row.spearman)},
                    {"pr", row.pr ? ToJson(*row.pr) : json(nullptr)},
                    {"confusion", row.confusion ? ToJson(*row.confusion) : json(nullptr)},
                    {"notes", row.notes}});
  }
  return {{"rows", rows}};
}

void WriteComparisonReport(const fs::path& dir, const ComparisonReport& report,
                           const std::vector<MethodScores>& methods,
                           const std::vector<ExperimentalValue>& experimental) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    std::ofstream out = open("report.json");
    out << ToJson(report).dump(2) << '\n';
  }
  {
    std::ofstream out = open("correlation.csv");
    out << "method,target,n,pearson,spearman,f1_best,f1_top,kappa\n";
    for (const ComparisonRow& r : report.rows) {
      out << r.method << ',' << r.target << ',' << r.n_correlation << ',' << Num(r.pearson) << ','
          << Num(r.spearman) << ','
          << Num(r.pr ? std::optional<double>(r.pr->f1_best) : std::nullopt) << ','
          << Num(r.pr ? std::optional<double>(r.pr->f1_top) : std::nullopt) << ','
          << Num(r.confusion ? r.confusion->kappa : std::nullopt) << '\n';
    }
  }
  {
    std::ofstream out = open("pr_curves.csv");
    out << "method,target,threshold,precision,recall,baseline_precision\n";
    for (const ComparisonRow& r : report.rows) {
      if (!r.pr) continue;
      for (const PrPoint& p : r.pr->points) {
        out << r.method << ',' << r.target << ',' << Num(p.threshold) << ',' << Num(p.precision)
            << ',' << Num(p.recall) << ',' << Num(r.pr->baseline_precision) << '\n';
      }
    }
  }
  {
    std::ofstream out = open("scatter.csv");
    out << "method,compound_id,target_id,score,actual\n";
    for (const MethodScores& m : methods) {
      for (const ExperimentalValue& e : experimental) {
        const auto it = m.scores.find({e.compound_id, e.target_id});
        if (it == m.scores.end()) continue;
        out << m.name << ',' << e.compound_id << ',' << e.target_id << ','
            << Num(Strength(m, it->second)) << ',' << Num(e.value) << '\n';
      }
    }
  }
}

}  // namespace fusion::eval
