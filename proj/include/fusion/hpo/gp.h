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

#ifndef FUSION_HPO_GP_H_
#define FUSION_HPO_GP_H_

#include <cstddef>
#include <random>
#include <vector>

namespace fusion::hpo {

// (normalized continuous hyperparameters, time index, score change).
struct GpObservation {
  std::vector<double> x;
  double t = 0.0;
  double y = 0.0;
};

struct GpHyperparameters {
  double lengthscale = 0.2;
  double noise_variance = 0.01;
  // Correlation between observations one time step apart is (1 - decay)^(1/2).
  double time_decay = 0.05;
};

// Gaussian process over [0, 1]^d x time with kernel
//   k((x, t), (x', t')) = exp(-|x - x'|^2 / (2 l^2)) * (1 - decay)^(|t - t'| / 2)
// on standardized targets. Keeps only the most recent `window` observations.
class TimeVaryingGp {
 public:
  explicit TimeVaryingGp(std::size_t window = 128) : window_(window) {}

  void Add(GpObservation obs);
  std::size_t size() const { return obs_.size(); }
  const std::vector<GpObservation>& observations() const { return obs_; }

  // Picks hyperparameters maximizing the log marginal likelihood over a fixed
  // grid and factorizes. Returns false (model unusable) with < 2 observations.
  bool Fit();
  bool fitted() const { return fitted_; }
  const GpHyperparameters& hyperparameters() const { return hyper_; }
  double LogMarginalLikelihood(const GpHyperparameters& h) const;

  // Posterior mean and standard deviation in the original target units.
  void Predict(const std::vector<double>& x, double t, double* mean, double* sd) const;

  // Batch-UCB: treats the posterior mean at (x, t) as an observation so the
  // next parallel proposal is pushed elsewhere. Keeps the hyperparameters.
  void AddHallucination(const std::vector<double>& x, double t);

 private:
  double Kernel(const GpObservation& a, const std::vector<double>& x, double t,
                const GpHyperparameters& h) const;
  void Factorize();

  std::size_t window_;
  std::vector<GpObservation> obs_;
  GpHyperparameters hyper_;
  bool fitted_ = false;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  // Cholesky factor (row-major, lower) and alpha = K^-1 y.
  std::vector<double> chol_;
  std::vector<double> alpha_;
};

// Maximizes mean + kappa * sd at time t over [0, 1]^d by seeded random search:
// uniform candidates plus Gaussian jitter around `anchor`.
std::vector<double> MaximizeUcb(const TimeVaryingGp& gp, double t, double kappa,
                                const std::vector<double>& anchor, std::mt19937_64& rng,
                                std::size_t candidates = 512);

}  // namespace fusion::hpo

#endif  // FUSION_HPO_GP_H_
