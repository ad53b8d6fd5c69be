#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kar/csv.hpp"
#include "kar/dataset.hpp"
#include "kar/estimators.hpp"
#include "kar/report_io.hpp"
#include "kar/sem.hpp"

namespace kar {

// Scalar-treatment predictor produced by any fitted method.
using Predictor = std::function<double(double)>;

// 100 equispaced evaluation points on [0.05, 0.95].
std::vector<double> default_grid();

// All method names the campaigns know how to fit.
const std::vector<std::string>& all_methods();

// Mean squared error of f against the interventional truth on the grid.
double grid_mse(const Predictor& f, const GeneratorDesign& design,
                const std::vector<double>& grid);

// One campaign: either a synthetic design scored by grid MSE against the
// interventional truth, or a fixed dataset scored by the group-shift
// prediction-error protocol (train on one group level, score against a
// conditional reference for the other).
struct TrialConfig {
  std::optional<GeneratorDesign> design;
  std::shared_ptr<const Dataset> dataset;  // alternative source
  double group_value = 1.0;                // dataset mode: training group level
  bool fixed_subsample = false;            // dataset mode: one subsample for all trials

  Eigen::Index sample_size = 700;          // rows per trial
  KarSplit splits{250, 250, 200};
  std::vector<std::string> methods;        // empty -> all_methods()
  double gamma = 2.0;
  double alpha_constant = 1.5;             // alpha = c / sqrt(stage size)
  double xi_constant = 1.5;                // xi = c / sqrt(m)
  int trials = 50;
  std::uint64_t base_seed = 0;
  std::vector<double> grid;                // empty -> default_grid()
  int jobs = 1;
  KernelChoice kernels;

  void validate() const;
};

// Fits one named method on data with stage sizes scaled to data.size() in
// proportion to cfg.splits. seed drives the stage assignment.
Predictor fit_method(const std::string& name, const Dataset& data,
                     const TrialConfig& cfg, std::uint64_t seed);

// Trial t draws data with seed base_seed + t, fits every method, and records
// the per-trial metric. A fit that throws (or predicts a non-finite value)
// is recorded as a failure and excluded; a method losing more than 10% of
// trials marks the campaign as failed.
TrialReport run_benchmark(const TrialConfig& cfg);

struct SweepConfig {
  TrialConfig base;
  std::vector<double> gammas;
  std::vector<double> alpha_grid;  // candidate alpha constants per estimator

  static std::vector<double> default_alpha_grid();
};

// Benchmarks the anchor estimators across gammas plus the instrumental
// baseline, selecting the alpha constant per (estimator, gamma) by median
// metric over the campaign.
TrialReport gamma_sweep(const SweepConfig& cfg);

// Anchor-shift robustness: per trial, fits on the subpopulation on one side
// of the threshold and scores prediction error on the other side against a
// conditional reference fitted on a large independent draw. Both orientations
// are reported, with labels suffixed [below] / [above] by training side.
TrialReport shift_eval(const TrialConfig& cfg, double threshold);

// Truth proxy for the shift protocols: kernel ridge regression of y on a
// scalar x. The fit aggregates samples onto a fine uniform bin grid and
// solves the count-weighted ridge system, which keeps the dense solve at the
// bin count while preserving the full-sample least-squares objective (bin
// width is orders of magnitude below the bandwidth).
class ConditionalReference {
 public:
  static ConditionalReference fit(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& y);

  double predict(double x) const;
  double bandwidth() const { return kx_.bandwidth; }

 private:
  Eigen::VectorXd centers_;
  Eigen::VectorXd beta_;
  KernelSpec kx_;
  double y_center_ = 0.0;
};

inline constexpr double kReferenceRidge = 1e-3;
inline constexpr int kReferenceBins = 2048;
inline constexpr Eigen::Index kReferenceSize = 100000;

// Throws IllConditioned when any entry is non-finite; the campaign loop
// records that as a trial failure rather than a summary entry.
void require_finite(const std::vector<double>& values,
                    const std::string& what);

}  // namespace kar
