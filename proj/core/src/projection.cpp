#include "kar/projection.hpp"

#include "kar/linalg.hpp"

namespace kar {

namespace {

void check_fit_inputs(Eigen::Index rows_z, Eigen::Index rows_other,
                      double alpha) {
  if (rows_z < 1) throw InvalidInput("projection fit needs at least one row");
  if (rows_z != rows_other) {
    throw InvalidInput("projection fit inputs have mismatched rows");
  }
  if (!(alpha > 0.0)) {
    throw InvalidInput("projection ridge alpha must be positive");
  }
}

std::shared_ptr<const Eigen::MatrixXd> anchor_solve(const Eigen::MatrixXd& z,
                                                    double alpha,
                                                    const KernelSpec& kz) {
  const Eigen::Index n = z.rows();
  GramMatrix kzz = gram(kz, z, z);
  Eigen::MatrixXd w = ridge_solve(kzz, static_cast<double>(n) * alpha,
                                  Eigen::MatrixXd::Identity(n, n));
  return std::make_shared<const Eigen::MatrixXd>(std::move(w));
}

}  // namespace

Eigen::VectorXd ProjectionOperatorX::project(const Eigen::VectorXd& z) const {
  if (!z.allFinite()) throw InvalidInput("projection point must be finite");
  return (*solve) * kernel_column(kz, anchors, z);
}

double ProjectionOperatorY::predict(const Eigen::VectorXd& z) const {
  if (!z.allFinite()) throw InvalidInput("prediction point must be finite");
  return dual.dot(kernel_column(kz, anchors, z));
}

ProjectionOperatorX fit_projection_x(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& z, double alpha,
                                     const KernelSpec& kx,
                                     const KernelSpec& kz) {
  check_fit_inputs(z.rows(), x.rows(), alpha);
  ProjectionOperatorX op;
  op.anchors = z;
  op.inputs = x;
  op.solve = anchor_solve(z, alpha, kz);
  op.kz = kz;
  op.kx = kx;
  op.alpha = alpha;
  return op;
}

ProjectionOperatorY fit_projection_y(const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& z, double alpha,
                                     const KernelSpec& kz) {
  check_fit_inputs(z.rows(), y.size(), alpha);
  ProjectionOperatorY op;
  op.anchors = z;
  op.solve = anchor_solve(z, alpha, kz);
  op.dual = (*op.solve) * y;
  op.kz = kz;
  op.alpha = alpha;
  return op;
}

std::pair<ProjectionOperatorX, ProjectionOperatorY> fit_projections_joint(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
    const Eigen::MatrixXd& z, double alpha, const KernelSpec& kx,
    const KernelSpec& kz) {
  check_fit_inputs(z.rows(), x.rows(), alpha);
  check_fit_inputs(z.rows(), y.size(), alpha);
  auto solve = anchor_solve(z, alpha, kz);

  ProjectionOperatorX opx;
  opx.anchors = z;
  opx.inputs = x;
  opx.solve = solve;
  opx.kz = kz;
  opx.kx = kx;
  opx.alpha = alpha;

  ProjectionOperatorY opy;
  opy.anchors = z;
  opy.solve = solve;
  opy.dual = (*solve) * y;
  opy.kz = kz;
  opy.alpha = alpha;

  return {std::move(opx), std::move(opy)};
}

Eigen::VectorXd project_x(const ProjectionOperatorX& op,
                          const Eigen::VectorXd& z) {
  return op.project(z);
}

}  // namespace kar
