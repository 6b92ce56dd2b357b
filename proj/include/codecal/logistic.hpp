/*
 * Copyright 2026 The codecal Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CODECAL_LOGISTIC_HPP_
#define CODECAL_LOGISTIC_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace codecal {

inline constexpr double kLogitClamp = 1e-6;

double Sigmoid(double z);
// logit(min(max(p, 1e-6), 1 - 1e-6)).
double ClampedLogit(double p);

struct NewtonOptions {
  double ridge = 1e-6;
  int max_iters = 100;
  double grad_tol = 1e-8;
};

struct NewtonFit {
  std::vector<double> weights;
  int iterations = 0;
  bool converged = false;
  double loss = 0.0;
};

// Row-major design matrix: `features` holds n rows of `dim` values.
struct Design {
  std::span<const double> features;
  std::size_t dim = 0;
  std::span<const int> labels;

  std::size_t rows() const { return labels.size(); }
};

// Minimizes mean cross-entropy of sigmoid(x . w) against y plus
// (ridge / 2) * |w|^2 with damped Newton steps (Armijo backtracking).
// Stops when |grad| <= grad_tol or after max_iters.
NewtonFit FitLogistic(const Design& d, const NewtonOptions& opt = {});

// Same model, mean squared error loss; Gauss-Newton steps.
NewtonFit FitSigmoidLeastSquares(const Design& d, const NewtonOptions& opt = {});

}  // namespace codecal

#endif  // CODECAL_LOGISTIC_HPP_
