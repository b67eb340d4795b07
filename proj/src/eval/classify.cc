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

#include "fusion/eval/classify.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fusion/eval/metrics.h"

namespace fusion::eval {

BinaryLabels BinarizeAbove(std::span<const double> values, double threshold) {
  BinaryLabels out;
  for (double v : values) {
    const bool pos = v > threshold;
    out.labels.push_back(pos);
    ++(pos ? out.positives : out.negatives);
  }
  return out;
}

BinaryLabels BinarizeBand(std::span<const double> values, double low, double high) {
  if (!(low <= high)) throw std::invalid_argument("binarize: band needs low <= high");
  BinaryLabels out;
  for (double v : values) {
    if (v > high) {
      out.labels.push_back(true);
      ++out.positives;
    } else if (v < low) {
      out.labels.push_back(false);
      ++out.negatives;
    } else {
      out.labels.push_back(std::nullopt);
      ++out.dropped;
    }
  }
  return out;
}

ConfusionSummary Confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  const std::size_t total = tp + fp + tn + fn;
  if (total == 0) throw std::invalid_argument("kappa: empty confusion matrix");
  ConfusionSummary c;
  c.tp = tp;
  c.fp = fp;
  c.tn = tn;
  c.fn = fn;
  const double n = static_cast<double>(total);
  c.rho_o = static_cast<double>(tp + tn) / n;
  const double pred_pos = static_cast<double>(tp + fp), pred_neg = static_cast<double>(tn + fn);
  const double act_pos = static_cast<double>(tp + fn), act_neg = static_cast<double>(tn + fp);
  c.rho_e = (pred_pos * act_pos + pred_neg * act_neg) / (n * n);
  if (c.rho_e < 1.0) c.kappa = (c.rho_o - c.rho_e) / (1.0 - c.rho_e);
  return c;
}

ConfusionSummary Confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("kappa: length mismatch");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i]) ++(actual[i] ? tp : fp);
    else ++(actual[i] ? fn : tn);
  }
  return Confusion(tp, fp, tn, fn);
}

std::vector<bool> TopPositives(std::span<const double> scores, std::size_t positives) {
  std::vector<bool> out(scores.size(), false);
  if (positives == 0 || scores.empty()) return out;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cut = sorted[std::min(positives, sorted.size()) - 1];
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= cut;
  return out;
}

PrCurve ComputePrCurve(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("pr curve: length mismatch");
  PrCurve c;
  c.n = scores.size();
  c.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (c.positives == 0 || c.positives == c.n) {
    throw std::invalid_argument("pr curve: needs both positive and negative examples (" +
                                std::to_string(c.positives) + " of " + std::to_string(c.n) +
                                " positive)");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("pr curve: non-finite score");
  }
  c.baseline_precision = static_cast<double>(c.positives) / static_cast<double>(c.n);
  std::vector<std::size_t> order(c.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < c.n;) {
    const double t = scores[order[i]];
    for (; i < c.n && scores[order[i]] == t; ++i) ++(labels[order[i]] ? tp : fp);
    PrPoint p;
    p.threshold = t;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    p.recall = static_cast<double>(tp) / static_cast<double>(c.positives);
    p.f1 = p.precision + p.recall > 0.0
               ? 2.0 * p.precision * p.recall / (p.precision + p.recall)
               : 0.0;
    if (p.f1 > c.f1_best || c.points.empty()) {
      c.f1_best = p.f1;
      c.best_threshold = t;
    }
    c.points.push_back(p);
  }
  const ConfusionSummary top = Confusion(TopPositives(scores, c.positives), labels);
  const double denom = static_cast<double>(2 * top.tp + top.fp + top.fn);
  c.f1_top = denom > 0.0 ? 2.0 * static_cast<double>(top.tp) / denom : 0.0;
  return c;
}

std::vector<std::size_t> FilterByRmsd(std::span<const double> rmsd, double cutoff) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < rmsd.size(); ++i) {
    if (!(rmsd[i] >= 0.0)) throw std::invalid_argument("rmsd filter: negative or NaN rmsd");
    if (rmsd[i] < cutoff) kept.push_back(i);
  }
  return kept;
}

nlohmann::json ToJson(const ConfusionSummary& c) {
  return {{"tp", c.tp},       {"fp", c.fp},       {"tn", c.tn},
          {"fn", c.fn},       {"rho_o", c.rho_o}, {"rho_e", c.rho_e},
          {"kappa", OptionalJson(c.kappa)}};
}

nlohmann::json ToJson(const PrCurve& c, bool with_points) {
  nlohmann::json j = {{"n", c.n},
                      {"positives", c.positives},
                      {"baseline_precision", c.baseline_precision},
                      {"f1_best", c.f1_best},
                      {"best_threshold", c.best_threshold},
                      {"f1_top", c.f1_top}};
  if (with_points) {
    nlohmann::json pts = nlohmann::json::array();
    for (const PrPoint& p : c.points) {
      pts.push_back({{"threshold", p.threshold},
                     {"precision", p.precision},
                     {"recall", p.recall},
                     {"f1", p.f1}});
    }
    j["points"] = std::move(pts);
  }
  return j;
}

}  // namespace fusion::eval
