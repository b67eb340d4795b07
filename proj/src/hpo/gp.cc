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

#include "fusion/hpo/gp.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fusion::hpo {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

constexpr double kLengthscales[] = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};
constexpr double kNoise[] = {1e-4, 1e-3, 1e-2, 0.1, 0.5};
constexpr double kDecay[] = {0.0, 0.01, 0.05, 0.1, 0.2, 0.4};

}  // namespace

void TimeVaryingGp::Add(GpObservation obs) {
  if (!obs_.empty() && obs.x.size() != obs_.front().x.size()) {
    throw std::invalid_argument("gp: observation dimension mismatch");
  }
  obs_.push_back(std::move(obs));
  if (obs_.size() > window_) obs_.erase(obs_.begin());
  fitted_ = false;
}

double TimeVaryingGp::Kernel(const GpObservation& a, const std::vector<double>& x, double t,
                             const GpHyperparameters& h) const {
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (a.x[i] - x[i]) * (a.x[i] - x[i]);
  const double se = std::exp(-d2 / (2 * h.lengthscale * h.lengthscale));
  return se * std::pow(1.0 - h.time_decay, std::abs(a.t - t) / 2);
}

double TimeVaryingGp::LogMarginalLikelihood(const GpHyperparameters& h) const {
  const std::size_t n = obs_.size();
  Matrix k(n, n);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (obs_[i].y - y_mean_) / y_scale_;
    for (std::size_t j = 0; j < n; ++j) k(i, j) = Kernel(obs_[i], obs_[j].x, obs_[j].t, h);
    k(i, i) += h.noise_variance;
  }
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Vector alpha = llt.solve(y);
  const double log_det = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2 * M_PI);
}

bool TimeVaryingGp::Fit() {
  fitted_ = false;
  if (obs_.size() < 2) return false;
  double mean = 0;
  for (const auto& o : obs_) mean += o.y;
  mean /= static_cast<double>(obs_.size());
  double var = 0;
  for (const auto& o : obs_) var += (o.y - mean) * (o.y - mean);
  var /= static_cast<double>(obs_.size());
  y_mean_ = mean;
  y_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;

  double best = -std::numeric_limits<double>::infinity();
  for (double l : kLengthscales) {
    for (double nv : kNoise) {
      for (double dc : kDecay) {
        const GpHyperparameters h{l, nv, dc};
        const double ll = LogMarginalLikelihood(h);
        if (ll > best) {
          best = ll;
          hyper_ = h;
        }
      }
    }
  }
  if (!std::isfinite(best)) return false;
  Factorize();
  fitted_ = true;
  return true;
}

void TimeVaryingGp::Factorize() {
  const std::size_t n = obs_.size();
  Matrix k(n, n);
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (obs_[i].y - y_mean_) / y_scale_;
    for (std::size_t j = 0; j < n; ++j) k(i, j) = Kernel(obs_[i], obs_[j].x, obs_[j].t, hyper_);
    k(i, i) += hyper_.noise_variance;
  }
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw std::runtime_error("gp: kernel matrix not positive");
  const Matrix l = llt.matrixL();
  chol_.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) chol_[i * n + j] = l(i, j);
  }
  const Vector a = llt.solve(y);
  alpha_.assign(a.data(), a.data() + n);
}

void TimeVaryingGp::Predict(const std::vector<double>& x, double t, double* mean,
                            double* sd) const {
  if (!fitted_) throw std::logic_error("gp: Predict before a successful Fit");
  const std::size_t n = obs_.size();
  std::vector<double> ks(n);
  double mu = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ks[i] = Kernel(obs_[i], x, t, hyper_);
    mu += ks[i] * alpha_[i];
  }
  // v = L^-1 k*, variance = k** - v.v with k** = 1.
  std::vector<double> v(n);
  double vv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = ks[i];
    for (std::size_t j = 0; j < i; ++j) s -= chol_[i * n + j] * v[j];
    v[i] = s / chol_[i * n + i];
    vv += v[i] * v[i];
  }
  *mean = y_mean_ + y_scale_ * mu;
  *sd = y_scale_ * std::sqrt(std::max(0.0, 1.0 - vv));
}

void TimeVaryingGp::AddHallucination(const std::vector<double>& x, double t) {
  double mean = 0, sd = 0;
  Predict(x, t, &mean, &sd);
  obs_.push_back({x, t, mean});
  if (obs_.size() > window_) obs_.erase(obs_.begin());
  Factorize();
}

std::vector<double> MaximizeUcb(const TimeVaryingGp& gp, double t, double kappa,
                                const std::vector<double>& anchor, std::mt19937_64& rng,
                                std::size_t candidates) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.1);
  std::vector<double> best = anchor;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> x(anchor.size());
  for (std::size_t c = 0; c < candidates; ++c) {
    const bool local = c % 4 == 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = local ? std::clamp(anchor[i] + jitter(rng), 0.0, 1.0) : unit(rng);
    }
    double mean = 0, sd = 0;
    gp.Predict(x, t, &mean, &sd);
    const double score = mean + kappa * sd;
    if (score > best_score) {
      best_score = score;
      best = x;
    }
  }
  return best;
}

}  // namespace fusion::hpo
