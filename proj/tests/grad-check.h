// tests/grad-check.h

// Copyright 2026  The vqanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VQANON_TESTS_GRAD_CHECK_H_
#define VQANON_TESTS_GRAD_CHECK_H_

// Central finite-difference gradient checking for float parameters.

#include <algorithm>
#include <cmath>
#include <functional>

#include "vqanon/base.h"
#include "vqanon/rng.h"

namespace vqanon::test {

/// Sum of w .* y evaluated in double precision.
inline double Project(const Matrix &y, const Matrix &w) {
  return (y.cast<double>().array() * w.cast<double>().array()).sum();
}

inline Matrix RandomMatrix(int rows, int cols, Rng *rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<BaseFloat>(scale * rng->Normal());
  return m;
}

/// Compares `analytic` with numeric derivatives of `loss` with respect to up
/// to `max_entries` randomly chosen entries of `*value`.  Returns the worst
/// error normalised by max(1, |numeric|, |analytic|).
inline double MaxGradError(const std::function<double()> &loss, Matrix *value,
                           const Matrix &analytic, Rng *rng, int max_entries = 40,
                           double h = 1e-2) {
  double worst = 0.0;
  const Eigen::Index n = value->size();
  const int checks = static_cast<int>(std::min<Eigen::Index>(n, max_entries));
  for (int c = 0; c < checks; ++c) {
    Eigen::Index i = n <= max_entries ? c : static_cast<Eigen::Index>(rng->Index(n));
    BaseFloat orig = value->data()[i];
    value->data()[i] = static_cast<BaseFloat>(orig + h);
    double lp = loss();
    value->data()[i] = static_cast<BaseFloat>(orig - h);
    double lm = loss();
    value->data()[i] = orig;
    double num = (lp - lm) / (2.0 * h);
    double ana = analytic.data()[i];
    double scale = std::max({1.0, std::fabs(num), std::fabs(ana)});
    worst = std::max(worst, std::fabs(num - ana) / scale);
  }
  return worst;
}

}  // namespace vqanon::test

#endif  // VQANON_TESTS_GRAD_CHECK_H_
