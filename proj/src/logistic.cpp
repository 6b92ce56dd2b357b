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

#include "codecal/logistic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "codecal/error.hpp"

namespace codecal {

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double ClampedLogit(double p) {
  const double c = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
  return std::log(c / (1.0 - c));
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

struct Problem {
  Eigen::Map<const Matrix> x;
  Eigen::VectorXd y;
  double ridge;
};

// Evaluates the loss at w and, when requested, the gradient and the
// (Gauss-)Newton curvature.
template <bool kCrossEntropy>
double Evaluate(const Problem& p, const Eigen::VectorXd& w,
                Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
  const double n = static_cast<double>(p.x.rows());
  const Eigen::VectorXd z = p.x * w;
  double loss = 0.0;
  Eigen::VectorXd g_coef(z.size());
  Eigen::VectorXd h_coef(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = Sigmoid(z[i]);
    if constexpr (kCrossEntropy) {
      loss += Softplus(z[i]) - p.y[i] * z[i];
      g_coef[i] = s - p.y[i];
      h_coef[i] = s * (1.0 - s);
    } else {
      const double r = s - p.y[i];
      const double ds = s * (1.0 - s);
      loss += r * r;
      g_coef[i] = 2.0 * r * ds;
      h_coef[i] = 2.0 * ds * ds;
    }
  }
  loss = loss / n + 0.5 * p.ridge * w.squaredNorm();
  if (grad != nullptr) {
    *grad = p.x.transpose() * g_coef / n + p.ridge * w;
  }
  if (hess != nullptr) {
    *hess = p.x.transpose() * h_coef.asDiagonal() * p.x / n;
    hess->diagonal().array() += p.ridge;
  }
  return loss;
}

template <bool kCrossEntropy>
NewtonFit Solve(const Design& d, const NewtonOptions& opt) {
  if (d.rows() == 0 || d.dim == 0) throw DataError("empty design matrix");
  if (d.features.size() != d.rows() * d.dim) {
    throw DataError("design matrix does not match the label count");
  }
  Problem p{Eigen::Map<const Matrix>(d.features.data(), d.rows(), d.dim),
            Eigen::VectorXd(d.rows()), opt.ridge};
  for (std::size_t i = 0; i < d.rows(); ++i) p.y[i] = d.labels[i];

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d.dim);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  NewtonFit fit;
  double loss = Evaluate<kCrossEntropy>(p, w, &grad, &hess);
  for (fit.iterations = 0; fit.iterations < opt.max_iters; ++fit.iterations) {
    if (grad.norm() <= opt.grad_tol) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;
    const double slope = grad.dot(step);
    double t = 1.0;
    bool moved = false;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      const Eigen::VectorXd candidate = w - t * step;
      const double cand_loss = Evaluate<kCrossEntropy>(p, candidate, nullptr, nullptr);
      if (cand_loss <= loss - 1e-4 * t * slope) {
        w = candidate;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // No descent at machine precision: the gradient test is as good as it
      // gets.
      fit.converged = grad.norm() <= std::sqrt(opt.grad_tol);
      break;
    }
    loss = Evaluate<kCrossEntropy>(p, w, &grad, &hess);
  }
  if (!fit.converged && grad.norm() <= opt.grad_tol) fit.converged = true;
  fit.loss = loss;
  fit.weights.assign(w.data(), w.data() + w.size());
  return fit;
}

}  // namespace

NewtonFit FitLogistic(const Design& d, const NewtonOptions& opt) {
  return Solve<true>(d, opt);
}

NewtonFit FitSigmoidLeastSquares(const Design& d, const NewtonOptions& opt) {
  return Solve<false>(d, opt);
}

}  // namespace codecal
