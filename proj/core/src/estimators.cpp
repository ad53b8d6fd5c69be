#include "kar/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kar/linalg.hpp"
#include "kar/split.hpp"

namespace kar {

namespace {

double clamp_gamma(double gamma) {
  if (!(gamma >= 0.0)) throw InvalidInput("gamma must be nonnegative");
  return std::min(gamma, kGammaCap);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0)) throw InvalidInput(std::string(what) + " must be positive");
}

void check_indices(const std::vector<Eigen::Index>& idx, Eigen::Index n,
                   const char* what) {
  if (idx.empty()) {
    throw InvalidInput(std::string(what) + " index set is empty");
  }
  for (Eigen::Index i : idx) {
    if (i < 0 || i >= n) {
      throw InvalidInput(std::string(what) + " index out of range");
    }
  }
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

KernelSpec resolve_kernel(KernelFamily family, std::optional<double> fixed,
                          const Eigen::MatrixXd& pool) {
  if (family == KernelFamily::linear) return {KernelFamily::linear, 1.0};
  if (fixed) {
    check_positive(*fixed, "kernel bandwidth");
    return {KernelFamily::gaussian, *fixed};
  }
  return {KernelFamily::gaussian, median_heuristic(pool)};
}

// Shared stage-3 solve: transformed outputs, transformed gram, dual weights.
void regression_stage(KarModel& model, const Eigen::MatrixXd& x3,
                      const Eigen::MatrixXd& z3, const Eigen::VectorXd& y3,
                      double xi) {
  const Eigen::Index m = x3.rows();
  const double sg = std::sqrt(model.gamma) - 1.0;

  Eigen::MatrixXd w3(model.proj_x.anchors.rows(), m);
  for (Eigen::Index l = 0; l < m; ++l) {
    w3.col(l) = model.proj_x.project(z3.row(l).transpose());
  }

  Eigen::VectorXd y_gamma(m);
  for (Eigen::Index l = 0; l < m; ++l) {
    double shift = sg == 0.0 ? 0.0 : sg * model.proj_y.predict(z3.row(l).transpose());
    y_gamma(l) = (y3(l) - model.y_center) + shift;
  }

  Eigen::MatrixXd k_hat = transformed_gram(x3, w3, model.gamma, model.proj_x);
  const double mu = y_gamma.mean();
  Eigen::VectorXd beta = ridge_solve(
      k_hat, static_cast<double>(m) * xi, y_gamma - Eigen::VectorXd::Constant(m, mu));
  if (!beta.allFinite()) {
    throw IllConditioned("regression stage produced non-finite coefficients");
  }

  model.xi = xi;
  model.x3 = x3;
  model.z3 = z3;
  model.w3 = std::move(w3);
  model.y_gamma = std::move(y_gamma);
  model.y_mean = mu;
  model.beta = std::move(beta);
}

}  // namespace

ThreeWayIndices no_split_indices(Eigen::Index n) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return {all, all, all};
}

Eigen::MatrixXd transformed_gram(const Eigen::MatrixXd& x3,
                                 const Eigen::MatrixXd& w3, double gamma,
                                 const ProjectionOperatorX& proj) {
  const double sg = std::sqrt(clamp_gamma(gamma)) - 1.0;
  if (w3.rows() != proj.inputs.rows() || w3.cols() != x3.rows()) {
    throw InvalidInput("transformed_gram weight matrix has mismatched shape");
  }
  Eigen::MatrixXd k3 = gram(proj.kx, x3, x3);
  if (sg == 0.0) return k3;

  Eigen::MatrixXd k13 = gram(proj.kx, proj.inputs, x3);
  Eigen::MatrixXd cross = w3.transpose() * k13;  // (l, l') = w_l . k_x(X1, x_l')
  Eigen::MatrixXd quad = w3.transpose() * (gram(proj.kx, proj.inputs, proj.inputs) * w3);
  k3.noalias() += sg * (cross + cross.transpose());
  k3.noalias() += (sg * sg) * 0.5 * (quad + quad.transpose());
  return k3;
}

double KarModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != x3.cols() || !x.allFinite()) {
    throw InvalidInput("prediction point has wrong shape or non-finite entries");
  }
  Eigen::VectorXd k = kernel_column(kx, x3, x);
  const double sg = std::sqrt(gamma) - 1.0;
  if (sg != 0.0) {
    k.noalias() += sg * (w3.transpose() * kernel_column(kx, proj_x.inputs, x));
  }
  return beta.dot(k) + y_center + y_mean;
}

double KivModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != proj_x.inputs.cols() || !x.allFinite()) {
    throw InvalidInput("prediction point has wrong shape or non-finite entries");
  }
  Eigen::VectorXd k = w2.transpose() * kernel_column(kx, proj_x.inputs, x);
  return beta.dot(k) + y_center;
}

KarModel fit_kar(const Dataset& data, const ThreeWayIndices& idx,
                 const KarHyper& hyper, const KernelChoice& kernels) {
  data.validate();
  check_indices(idx.projection_x, data.size(), "projection_x");
  check_indices(idx.projection_y, data.size(), "projection_y");
  check_indices(idx.regression, data.size(), "regression");
  check_positive(hyper.alpha1, "alpha1");
  check_positive(hyper.alpha2, "alpha2");
  check_positive(hyper.xi, "xi");

  KarModel model;
  model.stages = KarStages::three_stage;
  model.gamma = clamp_gamma(hyper.gamma);
  model.split = idx;

  Eigen::MatrixXd x1 = take_rows(data.x, idx.projection_x);
  Eigen::MatrixXd z1 = take_rows(data.z, idx.projection_x);
  Eigen::MatrixXd z2 = take_rows(data.z, idx.projection_y);
  Eigen::VectorXd y2 = take_rows(data.y, idx.projection_y);
  Eigen::MatrixXd x3 = take_rows(data.x, idx.regression);
  Eigen::MatrixXd z3 = take_rows(data.z, idx.regression);
  Eigen::VectorXd y3 = take_rows(data.y, idx.regression);

  model.kz = resolve_kernel(kernels.family, kernels.bandwidth_z, z1);
  model.kx = resolve_kernel(kernels.family, kernels.bandwidth_x, vstack(x1, x3));
  model.y_center = y2.mean();
  model.proj_x = fit_projection_x(x1, z1, hyper.alpha1, model.kx, model.kz);
  model.proj_y = fit_projection_y(
      y2 - Eigen::VectorXd::Constant(y2.size(), model.y_center), z2,
      hyper.alpha2, model.kz);

  regression_stage(model, x3, z3, y3, hyper.xi);
  return model;
}

KarModel fit_kar(const Dataset& data, const KarSplit& split,
                 const KarHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed) {
  auto blocks = random_split(data.size(), {split.n1, split.n2, split.m}, seed);
  return fit_kar(data, {blocks[0], blocks[1], blocks[2]}, hyper, kernels);
}

KarModel fit_kar2(const Dataset& data, const TwoWayIndices& idx,
                  const TwoStageHyper& hyper, const KernelChoice& kernels) {
  data.validate();
  check_indices(idx.projection, data.size(), "projection");
  check_indices(idx.regression, data.size(), "regression");
  check_positive(hyper.alpha, "alpha");
  check_positive(hyper.xi, "xi");

  KarModel model;
  model.stages = KarStages::two_stage;
  model.gamma = clamp_gamma(hyper.gamma);
  model.split = {idx.projection, idx.projection, idx.regression};

  Eigen::MatrixXd x1 = take_rows(data.x, idx.projection);
  Eigen::MatrixXd z1 = take_rows(data.z, idx.projection);
  Eigen::VectorXd y1 = take_rows(data.y, idx.projection);
  Eigen::MatrixXd x3 = take_rows(data.x, idx.regression);
  Eigen::MatrixXd z3 = take_rows(data.z, idx.regression);
  Eigen::VectorXd y3 = take_rows(data.y, idx.regression);

  model.kz = resolve_kernel(kernels.family, kernels.bandwidth_z, z1);
  model.kx = resolve_kernel(kernels.family, kernels.bandwidth_x, vstack(x1, x3));
  model.y_center = y1.mean();
  auto ops = fit_projections_joint(
      x1, y1 - Eigen::VectorXd::Constant(y1.size(), model.y_center), z1,
      hyper.alpha, model.kx, model.kz);
  model.proj_x = std::move(ops.first);
  model.proj_y = std::move(ops.second);

  regression_stage(model, x3, z3, y3, hyper.xi);
  return model;
}

KarModel fit_kar2(const Dataset& data, const TwoStageSplit& split,
                  const TwoStageHyper& hyper, const KernelChoice& kernels,
                  std::uint64_t seed) {
  auto blocks = random_split(data.size(), {split.n, split.m}, seed);
  return fit_kar2(data, {blocks[0], blocks[1]}, hyper, kernels);
}

KivModel fit_kiv(const Dataset& data, const TwoWayIndices& idx,
                 const KivHyper& hyper, const KernelChoice& kernels) {
  data.validate();
  check_indices(idx.projection, data.size(), "projection");
  check_indices(idx.regression, data.size(), "regression");
  check_positive(hyper.alpha, "alpha");
  check_positive(hyper.xi, "xi");

  KivModel model;
  model.split = idx;
  model.xi = hyper.xi;

  Eigen::MatrixXd x1 = take_rows(data.x, idx.projection);
  Eigen::MatrixXd z1 = take_rows(data.z, idx.projection);
  Eigen::MatrixXd x2 = take_rows(data.x, idx.regression);
  Eigen::MatrixXd z2 = take_rows(data.z, idx.regression);
  Eigen::VectorXd y2 = take_rows(data.y, idx.regression);
  const Eigen::Index m = x2.rows();

  model.kz = resolve_kernel(kernels.family, kernels.bandwidth_z, z1);
  model.kx = resolve_kernel(kernels.family, kernels.bandwidth_x, vstack(x1, x2));
  model.proj_x = fit_projection_x(x1, z1, hyper.alpha, model.kx, model.kz);

  Eigen::MatrixXd w2(x1.rows(), m);
  for (Eigen::Index l = 0; l < m; ++l) {
    w2.col(l) = model.proj_x.project(z2.row(l).transpose());
  }
  Eigen::MatrixXd quad =
      w2.transpose() * (gram(model.kx, x1, x1) * w2);
  Eigen::MatrixXd k_mu = 0.5 * (quad + quad.transpose());

  model.y_center = y2.mean();
  model.beta = ridge_solve(
      k_mu, static_cast<double>(m) * hyper.xi,
      y2 - Eigen::VectorXd::Constant(m, model.y_center));
  if (!model.beta.allFinite()) {
    throw IllConditioned("instrumental stage produced non-finite coefficients");
  }
  model.w2 = std::move(w2);
  return model;
}

KivModel fit_kiv(const Dataset& data, const TwoStageSplit& split,
                 const KivHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed) {
  auto blocks = random_split(data.size(), {split.n, split.m}, seed);
  return fit_kiv(data, {blocks[0], blocks[1]}, hyper, kernels);
}

KarModel fit_kpa(const Dataset& data, const KarSplit& split,
                 const RidgeHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed) {
  return fit_kar(data, split, {0.0, hyper.alpha1, hyper.alpha2, hyper.xi},
                 kernels, seed);
}

KarModel fit_kreg(const Dataset& data, const KarSplit& split,
                  const RidgeHyper& hyper, const KernelChoice& kernels,
                  std::uint64_t seed) {
  return fit_kar(data, split, {1.0, hyper.alpha1, hyper.alpha2, hyper.xi},
                 kernels, seed);
}

}  // namespace kar
