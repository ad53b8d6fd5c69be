#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "kar/dataset.hpp"

namespace kar {

enum class DesignTag { main_synthetic, kiv_setting, variant };

// Scalar nonlinear designs used by the benchmark campaigns. All three share
// the outcome shape y = c_c C + c_z Z + g(X) with
// g(x) = ln(|16x - 8| + 1) sgn(x - 0.5); they differ in the joint noise
// covariance of (C, V, W) and in how X and Z are squashed from (V, W).
struct GeneratorDesign {
  DesignTag tag = DesignTag::main_synthetic;
  Eigen::Matrix3d noise_cov = Eigen::Matrix3d::Identity();
  double c_c = 0.0;
  double c_z = 0.0;

  static GeneratorDesign main_synthetic();
  static GeneratorDesign kiv_setting();
  static GeneratorDesign variant();

  // Population mean of the anchor column.
  double anchor_mean() const;
};

GeneratorDesign design_by_name(const std::string& name);
std::string design_name(const GeneratorDesign& design);

Dataset generate(const GeneratorDesign& design, Eigen::Index n,
                 std::uint64_t seed);

// Interventional conditional mean E[y | do(x)] on x in [0, 1].
double true_do(const GeneratorDesign& design, double x);

// Shared nonlinear response g above.
double response_curve(double x);

// Linear structural model over anchor features z, confounder c, treatment
// features x, and outcome y. Row convention: b_xz maps z to x, etc.
struct SemSpec {
  Eigen::MatrixXd b_cz, b_xz, b_xc, b_yz, b_yc, b_yx;
  Eigen::MatrixXd sigma_z, sigma_c, sigma_x, sigma_y;

  Eigen::Index dim_z() const { return sigma_z.rows(); }
  Eigen::Index dim_c() const { return sigma_c.rows(); }
  Eigen::Index dim_x() const { return sigma_x.rows(); }
  Eigen::Index dim_y() const { return sigma_y.rows(); }

  // Throws InvalidInput when block shapes do not conform.
  void validate() const;
};

// Draws n rows from the reduced-form equations; requires dim_y() == 1.
// The confounder draws are kept in Dataset::latent.
Dataset generate_sem(const SemSpec& spec, Eigen::Index n, std::uint64_t seed);

// Population minimizer of the anchor objective at strength gamma, as a
// dim_y x dim_x operator.
Eigen::MatrixXd population_h_gamma(const SemSpec& spec, double gamma);

// population_h_gamma minus the structural coefficient b_yx, computed from
// the split covariance terms rather than by subtraction.
Eigen::MatrixXd bias_operator(const SemSpec& spec, double gamma);

// Convenience blocks shared by the population operators (exposed for tests).
Eigen::MatrixXd sem_treatment_anchor_map(const SemSpec& spec);   // b_xz + b_xc b_cz
Eigen::MatrixXd sem_confounded_cross(const SemSpec& spec);       // b_yc Sigma_c b_xc^T
Eigen::MatrixXd sem_anchor_aligned_cross(const SemSpec& spec);   // (b_yz + b_yc b_cz) Sigma_z M^T

// SemSpec serialized as a JSON object of matrix blocks.
SemSpec load_sem_spec(const std::string& path);

// Identifiability scenarios: structural settings where the population anchor
// solution equals b_yx at a matching gamma.
enum class IdentCase {
  no_confounding,    // b_yc = 0, gamma = 0
  valid_anchor,      // b_yz + b_yc b_cz = 0, gamma -> infinity
  doubly_clean,      // both of the above, any gamma
  balanced_bias,     // anchor-aligned cross = -a * confounded cross, gamma = 1/a
};

struct IdentInstance {
  SemSpec spec;
  double gamma = 0.0;  // strength at which the bias vanishes (large for valid_anchor)
};

// Random conforming instance of the given scenario. Draws are rejection
// sampled to keep the algebra well conditioned.
IdentInstance make_ident_instance(IdentCase c, std::uint64_t seed);

// Random unconstrained spec with bounded condition numbers (for property tests).
SemSpec random_sem_spec(std::uint64_t seed);

}  // namespace kar
