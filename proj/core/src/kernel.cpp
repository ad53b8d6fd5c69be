#include "kar/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kar {

namespace {

void check_spec(const KernelSpec& spec) {
  if (spec.family == KernelFamily::gaussian && !(spec.bandwidth > 0.0)) {
    throw InvalidInput("gaussian kernel requires a positive bandwidth");
  }
}

void check_dims(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw InvalidInput("kernel arguments have mismatched dimensions");
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  check_spec(spec);
  check_dims(x.size(), y.size());
  if (x.size() == 0) throw InvalidInput("kernel arguments must be nonempty");
  if (spec.family == KernelFamily::linear) return x.dot(y);
  const double d2 = (x - y).squaredNorm();
  return std::exp(-d2 / (2.0 * spec.bandwidth * spec.bandwidth));
}

double median_heuristic(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw InvalidInput("median heuristic needs at least two points");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      dist.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  // Lower median: element (k-1)/2 of the sorted distances.
  auto mid = dist.begin() + (dist.size() - 1) / 2;
  std::nth_element(dist.begin(), mid, dist.end());
  if (!(*mid > 0.0)) {
    throw DegenerateBandwidth("median pairwise distance is zero");
  }
  return *mid;
}

GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& a,
                const Eigen::MatrixXd& b) {
  check_spec(spec);
  check_dims(a.cols(), b.cols());
  if (a.rows() == 0 || b.rows() == 0) {
    throw InvalidInput("gram needs nonempty point sets");
  }
  if (spec.family == KernelFamily::linear) return a * b.transpose();
  // |a_i - b_j|^2 = |a_i|^2 + |b_j|^2 - 2 a_i.b_j, clamped against rounding.
  Eigen::MatrixXd g = -2.0 * (a * b.transpose());
  g.colwise() += a.rowwise().squaredNorm();
  g.rowwise() += b.rowwise().squaredNorm().transpose();
  const double scale = -1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  return (g.array().max(0.0) * scale).exp();
}

Eigen::VectorXd kernel_column(const KernelSpec& spec, const Eigen::MatrixXd& a,
                              const Eigen::VectorXd& z) {
  check_spec(spec);
  check_dims(a.cols(), z.size());
  if (spec.family == KernelFamily::linear) return a * z;
  Eigen::VectorXd d2 =
      a.rowwise().squaredNorm() - 2.0 * (a * z) +
      Eigen::VectorXd::Constant(a.rows(), z.squaredNorm());
  const double scale = -1.0 / (2.0 * spec.bandwidth * spec.bandwidth);
  return (d2.array().max(0.0) * scale).exp();
}

}  // namespace kar
