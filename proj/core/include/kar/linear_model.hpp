#pragma once

#include <Eigen/Dense>

#include "kar/dataset.hpp"

namespace kar {

enum class LinearMethodKind { ols, iv_2sls, pa, anchor };

struct LinearMethod {
  LinearMethodKind kind = LinearMethodKind::ols;
  double gamma = 1.0;  // anchor strength; only the anchor kind reads it
};

struct LinearModel {
  LinearMethod method;
  Eigen::VectorXd coef;
  double intercept = 0.0;

  double predict(const Eigen::VectorXd& x) const;
};

// Ordinary, instrumental (two-stage), partialled-out, and anchor-transformed
// least squares, all with an intercept. The anchor transform replaces the
// projection of x and y onto span{1, z} by sqrt(gamma) times itself before
// the final regression; pa is anchor(0), ols coincides with anchor(1).
LinearModel fit_linear(const Dataset& data, const LinearMethod& method);

}  // namespace kar
