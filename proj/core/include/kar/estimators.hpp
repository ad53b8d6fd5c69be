#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "kar/dataset.hpp"
#include "kar/kernel.hpp"
#include "kar/projection.hpp"

namespace kar {

// Anchor strengths above this are clamped; the solver behaves like the
// instrumental limit well before it.
inline constexpr double kGammaCap = 1e6;

// Kernel family plus optional fixed bandwidths. Empty bandwidths resolve by
// the median heuristic at fit time: the anchor kernel on the projection-stage
// anchors, the treatment kernel on the union of projection-stage and
// regression-stage treatment rows.
struct KernelChoice {
  KernelFamily family = KernelFamily::gaussian;
  std::optional<double> bandwidth_x;
  std::optional<double> bandwidth_z;
};

struct KarSplit {
  Eigen::Index n1 = 0;  // treatment-projection rows
  Eigen::Index n2 = 0;  // outcome-projection rows
  Eigen::Index m = 0;   // regression rows
};

struct TwoStageSplit {
  Eigen::Index n = 0;  // joint projection rows
  Eigen::Index m = 0;  // regression rows
};

// Explicit row assignments; the seeded fit entry points fill these with a
// random partition. Tests may pass overlapping sets (e.g. every stage seeing
// all rows) to pin down reductions against closed-form references.
struct ThreeWayIndices {
  std::vector<Eigen::Index> projection_x;
  std::vector<Eigen::Index> projection_y;
  std::vector<Eigen::Index> regression;
};

struct TwoWayIndices {
  std::vector<Eigen::Index> projection;
  std::vector<Eigen::Index> regression;
};

ThreeWayIndices no_split_indices(Eigen::Index n);

struct KarHyper {
  double gamma = 2.0;
  double alpha1 = 0.1;  // treatment-projection ridge
  double alpha2 = 0.1;  // outcome-projection ridge
  double xi = 0.1;      // regression ridge
};

struct TwoStageHyper {
  double gamma = 2.0;
  double alpha = 0.1;
  double xi = 0.1;
};

struct RidgeHyper {
  double alpha1 = 0.1;
  double alpha2 = 0.1;
  double xi = 0.1;
};

struct KivHyper {
  double alpha = 0.1;
  double xi = 0.1;
};

enum class KarStages { three_stage, two_stage };

// Fitted anchor-regression model in transformed-sample form. Prediction is
//   f(x) = beta . [k_x(x3, x) + (sqrt(gamma) - 1) w3^T k_x(X1, x)] + offset
// where offset restores the training means subtracted before the solves.
struct KarModel {
  KarStages stages = KarStages::three_stage;
  double gamma = 1.0;
  double xi = 0.0;
  KernelSpec kx;
  KernelSpec kz;
  ProjectionOperatorX proj_x;
  ProjectionOperatorY proj_y;
  Eigen::MatrixXd x3;       // regression-stage treatment rows
  Eigen::MatrixXd z3;       // regression-stage anchor rows
  Eigen::MatrixXd w3;       // n1 x m, column l = proj_x weights at z3 row l
  Eigen::VectorXd y_gamma;  // transformed outputs (training mean removed)
  Eigen::VectorXd beta;
  double y_center = 0.0;  // outcome mean subtracted before the stages
  double y_mean = 0.0;    // mean of y_gamma, removed before the final solve
  ThreeWayIndices split;

  double predict(const Eigen::VectorXd& x) const;
  double offset() const { return y_center + y_mean; }
};

// Instrumental two-stage model: prediction uses only the projected features,
//   h(x) = beta . w2^T k_x(X1, x) + y_center.
struct KivModel {
  KernelSpec kx;
  KernelSpec kz;
  ProjectionOperatorX proj_x;
  Eigen::MatrixXd w2;  // n1 x m projection weights at the regression anchors
  Eigen::VectorXd beta;
  double y_center = 0.0;
  double xi = 0.0;
  TwoWayIndices split;

  double predict(const Eigen::VectorXd& x) const;
};

// Gram matrix of the gamma-transformed treatment features
// psi_l = k_x(x_l, .) + (sqrt(gamma) - 1) sum_i w3(i, l) k_x(X1_i, .).
Eigen::MatrixXd transformed_gram(const Eigen::MatrixXd& x3,
                                 const Eigen::MatrixXd& w3, double gamma,
                                 const ProjectionOperatorX& proj);

KarModel fit_kar(const Dataset& data, const ThreeWayIndices& idx,
                 const KarHyper& hyper, const KernelChoice& kernels);
KarModel fit_kar(const Dataset& data, const KarSplit& split,
                 const KarHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed);

KarModel fit_kar2(const Dataset& data, const TwoWayIndices& idx,
                  const TwoStageHyper& hyper, const KernelChoice& kernels);
KarModel fit_kar2(const Dataset& data, const TwoStageSplit& split,
                  const TwoStageHyper& hyper, const KernelChoice& kernels,
                  std::uint64_t seed);

KivModel fit_kiv(const Dataset& data, const TwoWayIndices& idx,
                 const KivHyper& hyper, const KernelChoice& kernels);
KivModel fit_kiv(const Dataset& data, const TwoStageSplit& split,
                 const KivHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed);

// Partialling-out / plain kernel ridge corners of the gamma family.
KarModel fit_kpa(const Dataset& data, const KarSplit& split,
                 const RidgeHyper& hyper, const KernelChoice& kernels,
                 std::uint64_t seed);
KarModel fit_kreg(const Dataset& data, const KarSplit& split,
                  const RidgeHyper& hyper, const KernelChoice& kernels,
                  std::uint64_t seed);

}  // namespace kar
