#pragma once

#include <Eigen/Dense>

#include "kar/errors.hpp"

namespace kar {

enum class KernelFamily { gaussian, linear };

// A kernel family plus its bandwidth. The linear kernel ignores the bandwidth.
// Gaussian convention: k(x, x') = exp(-|x - x'|^2 / (2 sigma^2)).
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
};

using GramMatrix = Eigen::MatrixXd;

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// Lower median of all pairwise Euclidean distances. Points are rows.
double median_heuristic(const Eigen::MatrixXd& points);

// Cross-gram between two point sets (rows are points): out(i, j) = k(a_i, b_j).
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& a,
                const Eigen::MatrixXd& b);

// Kernel evaluations of one point against a point set: out(i) = k(a_i, z).
Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& a,
                              const Eigen::VectorXd& z);

}  // namespace kar
