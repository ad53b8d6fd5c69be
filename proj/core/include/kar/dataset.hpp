#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kar/errors.hpp"

namespace kar {

// One observational sample per row: treatment block x, scalar outcome y,
// anchor block z. group and latent are optional side columns (empty when
// absent); latent carries confounder draws from structural generators.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd z;
  Eigen::VectorXd group;
  Eigen::MatrixXd latent;

  Eigen::Index size() const { return y.size(); }
  bool has_group() const { return group.size() > 0; }

  // Row subset in the given order; side columns follow along.
  Dataset take(const std::vector<Eigen::Index>& rows) const;

  // Throws InvalidInput on inconsistent row counts or non-finite entries.
  void validate() const;
};

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<Eigen::Index>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& v,
                          const std::vector<Eigen::Index>& rows);

}  // namespace kar
