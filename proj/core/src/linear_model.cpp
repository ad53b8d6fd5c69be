#include "kar/linear_model.hpp"

#include <cmath>

namespace kar {

namespace {

// Least squares with an intercept column; rank deficiency is an error.
std::pair<Eigen::VectorXd, double> solve_with_intercept(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd a(n, x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    throw IllConditioned("regressor block is rank deficient");
  }
  Eigen::VectorXd sol = qr.solve(y);
  return {sol.tail(x.cols()), sol(0)};
}

// Thin orthonormal basis of span{1, z}; rank deficiency is an error.
Eigen::MatrixXd anchor_basis(const Eigen::MatrixXd& z) {
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd a(n, z.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(z.cols()) = z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.cols()) {
    throw IllConditioned("anchor block is rank deficient");
  }
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, a.cols());
  return q;
}

}  // namespace

double LinearModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != coef.size() || !x.allFinite()) {
    throw InvalidInput("prediction point has wrong shape or non-finite entries");
  }
  return intercept + coef.dot(x);
}

LinearModel fit_linear(const Dataset& data, const LinearMethod& method) {
  data.validate();
  const Eigen::Index n = data.size();
  if (n <= data.x.cols() + 1) {
    throw InvalidInput("linear fit needs more rows than coefficients");
  }

  LinearModel model;
  model.method = method;

  if (method.kind == LinearMethodKind::ols) {
    auto [coef, icpt] = solve_with_intercept(data.x, data.y);
    model.coef = std::move(coef);
    model.intercept = icpt;
    return model;
  }

  Eigen::MatrixXd q = anchor_basis(data.z);

  if (method.kind == LinearMethodKind::iv_2sls) {
    Eigen::MatrixXd fitted = q * (q.transpose() * data.x);
    auto [coef, icpt] = solve_with_intercept(fitted, data.y);
    model.coef = std::move(coef);
    model.intercept = icpt;
    return model;
  }

  double gamma = method.gamma;
  if (method.kind == LinearMethodKind::pa) gamma = 0.0;
  if (!(gamma >= 0.0)) throw InvalidInput("gamma must be nonnegative");
  const double sg = std::sqrt(gamma) - 1.0;

  Eigen::MatrixXd xt = data.x + sg * (q * (q.transpose() * data.x));
  Eigen::VectorXd yt = data.y + sg * (q * (q.transpose() * data.y));
  auto [coef, icpt] = solve_with_intercept(xt, yt);
  model.coef = std::move(coef);
  model.intercept = icpt;
  return model;
}

}  // namespace kar
