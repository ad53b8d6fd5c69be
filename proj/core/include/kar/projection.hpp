#pragma once

#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "kar/kernel.hpp"

namespace kar {

// Conditional-mean embedding of the treatment features given the anchor:
// at a point z it produces weights w(z) = solve * k_z(anchors, z), so that
// the embedded treatment feature is sum_i w(z)_i k_x(inputs_i, .).
struct ProjectionOperatorX {
  Eigen::MatrixXd anchors;  // z rows the operator was fitted on
  Eigen::MatrixXd inputs;   // matching x rows
  std::shared_ptr<const Eigen::MatrixXd> solve;  // (K_zz + n a I)^-1
  KernelSpec kz;
  KernelSpec kx;
  double alpha = 0.0;

  Eigen::VectorXd project(const Eigen::VectorXd& z) const;
};

// Kernel ridge regression of the outcome on the anchor; prediction at z is
// dual . k_z(anchors, z). No internal centering: estimators that want a
// centered fit subtract the training mean before fitting.
struct ProjectionOperatorY {
  Eigen::MatrixXd anchors;
  Eigen::VectorXd dual;  // (K_zz + n a I)^-1 y
  std::shared_ptr<const Eigen::MatrixXd> solve;
  KernelSpec kz;
  double alpha = 0.0;

  double predict(const Eigen::VectorXd& z) const;
};

ProjectionOperatorX fit_projection_x(const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& z, double alpha,
                                     const KernelSpec& kx,
                                     const KernelSpec& kz);

ProjectionOperatorY fit_projection_y(const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& z, double alpha,
                                     const KernelSpec& kz);

// Both operators from one sample set; the anchor solve is computed once and
// shared (the returned operators reference the same matrix).
std::pair<ProjectionOperatorX, ProjectionOperatorY> fit_projections_joint(
    const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
    const Eigen::MatrixXd& z, double alpha, const KernelSpec& kx,
    const KernelSpec& kz);

// Free-function form of ProjectionOperatorX::project.
Eigen::VectorXd project_x(const ProjectionOperatorX& op,
                          const Eigen::VectorXd& z);

}  // namespace kar
