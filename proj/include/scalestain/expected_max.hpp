// Copyright 2026 The Scalestain Authors. All Rights Reserved.
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

/// @file expected_max.hpp
/// @brief Expected output of iterated max-value subsampling for i.i.d.
/// stained/unstained pixels: closed form, Monte Carlo, and contrast curves.

#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scalestain/error.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/rng.hpp"

namespace scalestain {

struct PoolingModel {
  double alpha = 0.0;  // probability that a pixel is stained
  int steps = 0;       // max-subsampling iterations; pool size 4^steps
  long long trials = 1;
  std::uint64_t seed = 0;
};

inline void validate(const PoolingModel& m) {
  if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) {
    throw ParameterError("alpha must lie in [0, 1]");
  }
  if (m.steps < 0 || m.steps > 10) {
    throw ParameterError("steps must lie in [0, 10]");
  }
  if (m.trials < 1) throw ParameterError("trials must be >= 1");
}

inline long long pool_size(int steps) { return 1LL << (2 * steps); }

/// E[max] of 4^steps i.i.d. Bernoulli(alpha) indicators.
inline double expected_max_bernoulli(double alpha, int steps) {
  validate(PoolingModel{alpha, steps, 1, 0});
  return 1.0 - std::pow(1.0 - alpha, static_cast<double>(pool_size(steps)));
}

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Simulates 4^steps Bernoulli draws per trial and averages the maxima. A
/// trial stops drawing at its first stained pixel, since the max is then 1.
/// Results depend only on the model, not on the worker count.
inline McEstimate expected_max_mc(const PoolingModel& model, int workers = 0) {
  validate(model);
  const long long n = pool_size(model.steps);
  const auto trials = static_cast<std::size_t>(model.trials);
  const std::size_t chunk = 4096;
  const std::size_t chunks = (trials + chunk - 1) / chunk;
  std::vector<long long> hits(chunks, 0);
  parallel_for(chunks, workers, [&](std::size_t c) {
    long long h = 0;
    const std::size_t end = std::min(trials, (c + 1) * chunk);
    for (std::size_t t = c * chunk; t < end; ++t) {
      SplitMix64 rng(trial_seed(model.seed, t));
      for (long long i = 0; i < n; ++i) {
        if (rng.uniform() < model.alpha) {
          ++h;
          break;
        }
      }
    }
    hits[c] = h;
  });
  long long total = 0;
  for (long long h : hits) total += h;
  const double nt = static_cast<double>(model.trials);
  McEstimate out;
  out.estimate = static_cast<double>(total) / nt;
  if (model.trials > 1) {
    // Sample variance of a 0/1 outcome.
    const double var = (static_cast<double>(total) -
                        nt * out.estimate * out.estimate) /
                       (nt - 1.0);
    out.standard_error = std::sqrt(std::max(var, 0.0) / nt);
  }
  return out;
}

struct CurvePoint {
  double alpha = 0.0;
  int steps = 0;
  double expectation = 0.0;
};

inline std::vector<CurvePoint> contrast_curve(const std::vector<double>& alphas,
                                              int steps) {
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) {
      throw ParameterError("alpha grid must lie in [0, 1]");
    }
    if (i > 0 && alphas[i] < alphas[i - 1]) {
      throw ParameterError("alpha grid must be sorted");
    }
  }
  std::vector<CurvePoint> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    out.push_back({a, steps, expected_max_bernoulli(a, steps)});
  }
  return out;
}

/// Evenly spaced grid of `points` values covering [0, 1].
inline std::vector<double> alpha_grid(int points) {
  if (points < 2) throw ParameterError("alpha grid needs at least 2 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) {
    g[i] = static_cast<double>(i) / (points - 1);
  }
  return g;
}

/// CSV with header `alpha,steps,expectation`.
inline void write_curve_csv(std::ostream& os,
                            const std::vector<CurvePoint>& points,
                            bool header = true) {
  if (header) os << "alpha,steps,expectation\n";
  const auto flags = os.flags();
  const auto prec = os.precision(10);
  for (const auto& p : points) {
    os << p.alpha << ',' << p.steps << ',' << p.expectation << '\n';
  }
  os.precision(prec);
  os.flags(flags);
}

}  // namespace scalestain
