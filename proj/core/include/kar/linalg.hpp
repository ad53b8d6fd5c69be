#pragma once

#include <Eigen/Dense>

#include "kar/errors.hpp"

namespace kar {

// Solves (k + scale * I) s = rhs by Cholesky factorization. On factorization
// failure the diagonal is jittered by 1e-10 * trace(k) / n, escalating tenfold
// up to three times before giving up with IllConditioned.
Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& k, double scale,
                            const Eigen::MatrixXd& rhs);

}  // namespace kar
