#include "kar/linalg.hpp"

namespace kar {

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& k, double scale,
                            const Eigen::MatrixXd& rhs) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n) {
    throw InvalidInput("ridge_solve needs a nonempty square matrix");
  }
  if (rhs.rows() != n) {
    throw InvalidInput("ridge_solve right-hand side has mismatched rows");
  }
  if (!(scale >= 0.0)) {
    throw InvalidInput("ridge_solve scale must be nonnegative");
  }
  const double mag = k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + mag)) {
    throw InvalidInput("ridge_solve expects a symmetric matrix");
  }

  const double jitter0 = 1e-10 * k.trace() / static_cast<double>(n);
  double added = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd sys = k;
    sys.diagonal().array() += scale + added;
    Eigen::LLT<Eigen::MatrixXd> llt(sys);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd s = llt.solve(rhs);
      if (s.allFinite()) return s;
    }
    if (!(jitter0 > 0.0)) break;  // nothing to escalate with
    added = added == 0.0 ? jitter0 : added * 10.0;
  }
  throw IllConditioned("ridge system stayed singular after jitter escalation");
}

}  // namespace kar
