#include "kar/dataset.hpp"

namespace kar {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) {
      throw InvalidInput("row index out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v,
                          const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= v.size()) {
      throw InvalidInput("row index out of range");
    }
    out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  }
  return out;
}

Dataset Dataset::take(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x = take_rows(x, rows);
  out.y = take_rows(y, rows);
  out.z = take_rows(z, rows);
  if (has_group()) out.group = take_rows(group, rows);
  if (latent.rows() == size()) out.latent = take_rows(latent, rows);
  return out;
}

void Dataset::validate() const {
  const Eigen::Index n = y.size();
  if (n == 0) throw InvalidInput("dataset is empty");
  if (x.rows() != n || z.rows() != n) {
    throw InvalidInput("dataset blocks have mismatched row counts");
  }
  if (x.cols() == 0 || z.cols() == 0) {
    throw InvalidInput("dataset needs treatment and anchor columns");
  }
  if (group.size() != 0 && group.size() != n) {
    throw InvalidInput("group column has mismatched length");
  }
  if (latent.rows() != 0 && latent.rows() != n) {
    throw InvalidInput("latent block has mismatched rows");
  }
  if (!x.allFinite() || !y.allFinite() || !z.allFinite()) {
    throw InvalidInput("dataset contains non-finite entries");
  }
}

}  // namespace kar
