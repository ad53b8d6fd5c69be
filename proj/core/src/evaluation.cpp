#include "kar/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include <json.hpp>

#include "kar/errors.hpp"
#include "kar/linalg.hpp"
#include "kar/linear_model.hpp"
#include "kar/split.hpp"

namespace kar {

std::vector<double> default_grid() {
  std::vector<double> g(100);
  for (int i = 0; i < 100; ++i) {
    g[static_cast<std::size_t>(i)] = 0.05 + 0.9 * i / 99.0;
  }
  return g;
}

const std::vector<std::string>& all_methods() {
  static const std::vector<std::string> names{
      "kar", "kar2", "kiv", "kpa", "kreg", "ar", "iv", "pa", "ols"};
  return names;
}

double grid_mse(const Predictor& f, const GeneratorDesign& design,
                const std::vector<double>& grid) {
  if (grid.empty()) throw InvalidInput("grid must be nonempty");
  double acc = 0.0;
  for (double x : grid) {
    const double d = f(x) - true_do(design, x);
    acc += d * d;
  }
  return acc / static_cast<double>(grid.size());
}

void require_finite(const std::vector<double>& values,
                    const std::string& what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw IllConditioned(what + " produced a non-finite value");
    }
  }
}

void TrialConfig::validate() const {
  if (!design && !dataset) {
    throw InvalidInput("campaign needs a design or a dataset");
  }
  if (design && dataset) {
    throw InvalidInput("campaign source must be a design or a dataset, not both");
  }
  if (splits.n1 < 1 || splits.n2 < 1 || splits.m < 1) {
    throw InvalidInput("stage sizes must be positive");
  }
  if (sample_size != splits.n1 + splits.n2 + splits.m) {
    throw InvalidInput("stage sizes must sum to the sample size");
  }
  if (trials < 1) throw InvalidInput("campaign needs at least one trial");
  if (!(gamma >= 0.0)) throw InvalidInput("gamma must be nonnegative");
  if (!(alpha_constant > 0.0) || !(xi_constant > 0.0)) {
    throw InvalidInput("ridge constants must be positive");
  }
  if (jobs < 1) throw InvalidInput("jobs must be positive");
  const auto& known = all_methods();
  for (const auto& m : methods) {
    if (std::find(known.begin(), known.end(), m) == known.end()) {
      throw InvalidInput("unknown method: " + m);
    }
  }
  for (double g : grid) {
    if (!std::isfinite(g)) throw InvalidInput("grid points must be finite");
  }
  if (dataset) {
    dataset->validate();
    if (!dataset->has_group()) {
      throw InvalidInput("dataset campaigns need a group column");
    }
    if (sample_size > dataset->size()) {
      throw InvalidInput("sample size exceeds the dataset rows");
    }
  }
}

namespace {

struct StageSizes {
  Eigen::Index n1 = 0, n2 = 0, m = 0;
};

// Proportional rescale of the reference split onto n rows; the regression
// stage absorbs the rounding remainder.
StageSizes scale_splits(const KarSplit& ref, Eigen::Index n) {
  if (n < 3) throw InvalidInput("too few rows to assign stages");
  const Eigen::Index total = ref.n1 + ref.n2 + ref.m;
  StageSizes s;
  s.n1 = std::max<Eigen::Index>(1, ref.n1 * n / total);
  s.n2 = std::max<Eigen::Index>(1, ref.n2 * n / total);
  while (s.n1 + s.n2 >= n) {
    (s.n1 >= s.n2 ? s.n1 : s.n2) -= 1;
  }
  s.m = n - s.n1 - s.n2;
  return s;
}

Predictor wrap_kar(KarModel&& model) {
  auto m = std::make_shared<const KarModel>(std::move(model));
  return [m](double x) {
    Eigen::VectorXd v(1);
    v(0) = x;
    return m->predict(v);
  };
}

Predictor wrap_kiv(KivModel&& model) {
  auto m = std::make_shared<const KivModel>(std::move(model));
  return [m](double x) {
    Eigen::VectorXd v(1);
    v(0) = x;
    return m->predict(v);
  };
}

Predictor wrap_linear(LinearModel&& model) {
  auto m = std::make_shared<const LinearModel>(std::move(model));
  return [m](double x) {
    Eigen::VectorXd v(1);
    v(0) = x;
    return m->predict(v);
  };
}

nlohmann::json config_to_json(const TrialConfig& cfg) {
  nlohmann::json j;
  j["source"] = cfg.design ? design_name(*cfg.design) : "dataset";
  if (cfg.dataset) {
    j["dataset_rows"] = cfg.dataset->size();
    j["group_value"] = cfg.group_value;
    j["fixed_subsample"] = cfg.fixed_subsample;
  }
  j["sample_size"] = cfg.sample_size;
  j["splits"] = nlohmann::json::array(
      {cfg.splits.n1, cfg.splits.n2, cfg.splits.m});
  j["methods"] = cfg.methods.empty() ? all_methods() : cfg.methods;
  j["gamma"] = cfg.gamma;
  j["alpha_constant"] = cfg.alpha_constant;
  j["xi_constant"] = cfg.xi_constant;
  j["trials"] = cfg.trials;
  j["base_seed"] = cfg.base_seed;
  j["jobs"] = cfg.jobs;
  j["kernel"] =
      cfg.kernels.family == KernelFamily::gaussian ? "gaussian" : "linear";
  if (cfg.kernels.bandwidth_x) j["bandwidth_x"] = *cfg.kernels.bandwidth_x;
  if (cfg.kernels.bandwidth_z) j["bandwidth_z"] = *cfg.kernels.bandwidth_z;
  return j;
}

struct Binned {
  Eigen::VectorXd centers;
  Eigen::VectorXd counts;
  Eigen::VectorXd means;
  double total = 0.0;
};

Binned bin_xy(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int bins) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidInput("binning needs matched x/y with at least two rows");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw InvalidInput("binning needs finite samples");
  }
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (!(hi > lo)) throw DegenerateBandwidth("sample has zero spread");
  const double width = (hi - lo) / bins;
  std::vector<double> cnt(static_cast<std::size_t>(bins), 0.0);
  std::vector<double> sum(static_cast<std::size_t>(bins), 0.0);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int b = std::min(bins - 1, static_cast<int>((x(i) - lo) / width));
    cnt[static_cast<std::size_t>(b)] += 1.0;
    sum[static_cast<std::size_t>(b)] += y(i);
  }
  Eigen::Index used = 0;
  for (double c : cnt) used += c > 0.0;
  Binned out;
  out.centers.resize(used);
  out.counts.resize(used);
  out.means.resize(used);
  Eigen::Index k = 0;
  for (int b = 0; b < bins; ++b) {
    const double c = cnt[static_cast<std::size_t>(b)];
    if (c <= 0.0) continue;
    out.centers(k) = lo + (b + 0.5) * width;
    out.counts(k) = c;
    out.means(k) = sum[static_cast<std::size_t>(b)] / c;
    ++k;
  }
  out.total = static_cast<double>(x.size());
  return out;
}

// Count-weighted squared prediction gap between f and the reference over the
// empirical treatment distribution captured by pts.
double weighted_pe(const Predictor& f, const ConditionalReference& ref,
                   const Binned& pts) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pts.centers.size(); ++i) {
    const double fx = f(pts.centers(i));
    if (!std::isfinite(fx)) {
      throw IllConditioned("prediction is non-finite");
    }
    const double d = fx - ref.predict(pts.centers(i));
    acc += pts.counts(i) * d * d;
  }
  return acc / pts.total;
}

void parallel_trials(int trials, int jobs,
                     const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(jobs, trials));
  if (workers == 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&body, w, trials, workers] {
      for (int t = w; t < trials; t += workers) body(t);
    });
  }
  for (auto& th : pool) th.join();
}

void apply_failure_rule(TrialReport& report) {
  for (const auto& series : report.series) {
    if (series.failures() > 0.1 * report.trials) {
      report.campaign_ok = false;
    }
  }
}

}  // namespace

Predictor fit_method(const std::string& name, const Dataset& data,
                     const TrialConfig& cfg, std::uint64_t seed) {
  const StageSizes s = scale_splits(cfg.splits, data.size());
  const double a1 = cfg.alpha_constant / std::sqrt(static_cast<double>(s.n1));
  const double a2 = cfg.alpha_constant / std::sqrt(static_cast<double>(s.n2));
  const double a12 =
      cfg.alpha_constant / std::sqrt(static_cast<double>(s.n1 + s.n2));
  const double xi = cfg.xi_constant / std::sqrt(static_cast<double>(s.m));
  const KarSplit split{s.n1, s.n2, s.m};
  const TwoStageSplit joint{s.n1 + s.n2, s.m};

  if (name == "kar") {
    return wrap_kar(fit_kar(data, split, KarHyper{cfg.gamma, a1, a2, xi},
                            cfg.kernels, seed));
  }
  if (name == "kar2") {
    return wrap_kar(fit_kar2(data, joint, TwoStageHyper{cfg.gamma, a12, xi},
                             cfg.kernels, seed));
  }
  if (name == "kiv") {
    return wrap_kiv(fit_kiv(data, joint, KivHyper{a12, xi}, cfg.kernels, seed));
  }
  if (name == "kpa") {
    return wrap_kar(fit_kpa(data, split, RidgeHyper{a1, a2, xi}, cfg.kernels,
                            seed));
  }
  if (name == "kreg") {
    return wrap_kar(fit_kreg(data, split, RidgeHyper{a1, a2, xi}, cfg.kernels,
                             seed));
  }
  if (name == "ar") {
    return wrap_linear(
        fit_linear(data, LinearMethod{LinearMethodKind::anchor, cfg.gamma}));
  }
  if (name == "iv") {
    return wrap_linear(
        fit_linear(data, LinearMethod{LinearMethodKind::iv_2sls, 1.0}));
  }
  if (name == "pa") {
    return wrap_linear(
        fit_linear(data, LinearMethod{LinearMethodKind::pa, 0.0}));
  }
  if (name == "ols") {
    return wrap_linear(
        fit_linear(data, LinearMethod{LinearMethodKind::ols, 1.0}));
  }
  throw InvalidInput("unknown method: " + name);
}

TrialReport run_benchmark(const TrialConfig& cfg) {
  cfg.validate();
  const std::vector<double> grid = cfg.grid.empty() ? default_grid() : cfg.grid;
  const std::vector<std::string> methods =
      cfg.methods.empty() ? all_methods() : cfg.methods;
  const std::size_t nm = methods.size();

  TrialReport report;
  report.metric = cfg.dataset ? "pe" : "mse";
  report.trials = cfg.trials;
  if (cfg.design) report.grid = grid;
  report.config_json = config_to_json(cfg).dump();
  report.series.resize(nm);
  for (std::size_t i = 0; i < nm; ++i) {
    report.series[i].label = methods[i];
    report.series[i].per_trial.assign(static_cast<std::size_t>(cfg.trials),
                                      std::nullopt);
  }

  // Dataset mode scores against one conditional reference fitted on every
  // held-out-group row of the full dataset.
  std::optional<ConditionalReference> ref;
  Binned ref_pts;
  if (cfg.dataset) {
    const Dataset rest = split_by_group(*cfg.dataset, cfg.group_value).second;
    if (rest.size() == 0) {
      throw InvalidInput("no rows outside the training group to score against");
    }
    ref = ConditionalReference::fit(rest.x.col(0), rest.y);
    ref_pts = bin_xy(rest.x.col(0), rest.y, kReferenceBins);
  }

  auto run_trial = [&](int t) {
    Dataset data;
    try {
      if (cfg.dataset) {
        const std::uint64_t sub_seed = cfg.fixed_subsample
                                           ? cfg.base_seed
                                           : cfg.base_seed + static_cast<std::uint64_t>(t);
        const Dataset sub = subsample(*cfg.dataset, cfg.sample_size, sub_seed);
        data = split_by_group(sub, cfg.group_value).first;
      } else {
        data = generate(*cfg.design, cfg.sample_size,
                        cfg.base_seed + static_cast<std::uint64_t>(t));
      }
    } catch (const std::exception&) {
      return;  // every method keeps a failure slot for this trial
    }
    const std::uint64_t split_seed =
        derive_seed(cfg.base_seed + static_cast<std::uint64_t>(t), 1);
    for (std::size_t i = 0; i < nm; ++i) {
      try {
        const Predictor f = fit_method(methods[i], data, cfg, split_seed);
        double value = 0.0;
        if (cfg.dataset) {
          value = weighted_pe(f, *ref, ref_pts);
        } else {
          std::vector<double> preds(grid.size());
          for (std::size_t k = 0; k < grid.size(); ++k) preds[k] = f(grid[k]);
          require_finite(preds, methods[i]);
          for (std::size_t k = 0; k < grid.size(); ++k) {
            const double d = preds[k] - true_do(*cfg.design, grid[k]);
            value += d * d;
          }
          value /= static_cast<double>(grid.size());
          if (t == 0) report.series[i].curve = preds;
        }
        if (!std::isfinite(value)) {
          throw IllConditioned("non-finite metric value");
        }
        report.series[i].per_trial[static_cast<std::size_t>(t)] = value;
      } catch (const std::exception&) {
        // recorded as a failure by the empty slot
      }
    }
  };
  parallel_trials(cfg.trials, cfg.jobs, run_trial);
  apply_failure_rule(report);
  return report;
}

std::vector<double> SweepConfig::default_alpha_grid() {
  return {0.01, 0.05, 0.1, 0.5, 0.8, 1.0, 2.0, 3.0};
}

TrialReport gamma_sweep(const SweepConfig& cfg) {
  cfg.base.validate();
  if (cfg.gammas.empty()) throw InvalidInput("sweep needs at least one gamma");
  if (cfg.alpha_grid.empty()) {
    throw InvalidInput("sweep needs alpha candidates");
  }
  for (double c : cfg.alpha_grid) {
    if (!(c > 0.0)) throw InvalidInput("alpha candidates must be positive");
  }

  TrialReport report;
  report.metric = cfg.base.dataset ? "pe" : "mse";
  report.trials = cfg.base.trials;
  if (cfg.base.design) {
    report.grid = cfg.base.grid.empty() ? default_grid() : cfg.base.grid;
  }
  nlohmann::json j = config_to_json(cfg.base);
  j["gammas"] = cfg.gammas;
  j["alpha_grid"] = cfg.alpha_grid;
  report.config_json = j.dump();

  // Picks the alpha constant with the best median metric; trial seeds are
  // shared across candidates, so every candidate sees the same data.
  auto best_series = [&](const std::string& method, double gamma,
                         const std::string& label) {
    MethodSeries best;
    double best_median = std::numeric_limits<double>::infinity();
    double best_c = 0.0;
    for (double c : cfg.alpha_grid) {
      TrialConfig run_cfg = cfg.base;
      run_cfg.methods = {method};
      run_cfg.gamma = gamma;
      run_cfg.alpha_constant = c;
      TrialReport r = run_benchmark(run_cfg);
      const std::vector<double> vals = r.series.front().values();
      if (vals.empty()) continue;
      const double med = quantile(vals, 0.5);
      if (med < best_median) {
        best_median = med;
        best = r.series.front();
        best_c = c;
      }
    }
    if (!std::isfinite(best_median)) {
      throw IllConditioned("no alpha candidate produced a usable fit for " +
                           label);
    }
    best.label = label;
    best.info.emplace_back("c_alpha", best_c);
    return best;
  };

  char buf[64];
  for (double g : cfg.gammas) {
    std::snprintf(buf, sizeof buf, "kar[g=%g]", g);
    report.series.push_back(best_series("kar", g, buf));
    std::snprintf(buf, sizeof buf, "kar2[g=%g]", g);
    report.series.push_back(best_series("kar2", g, buf));
  }
  report.series.push_back(best_series("kiv", cfg.base.gamma, "kiv"));
  apply_failure_rule(report);
  return report;
}

namespace {

// Rejection sample from the design until one side of the threshold has the
// reference sample size.
std::pair<Eigen::VectorXd, Eigen::VectorXd> conditional_draw(
    const GeneratorDesign& design, double threshold, bool below,
    std::uint64_t seed) {
  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(kReferenceSize));
  ys.reserve(static_cast<std::size_t>(kReferenceSize));
  constexpr Eigen::Index kBatch = 20000;
  for (int round = 0; static_cast<Eigen::Index>(xs.size()) < kReferenceSize;
       ++round) {
    if (round >= 400) {
      throw InvalidInput("threshold leaves too little anchor mass on one side");
    }
    const Dataset batch =
        generate(design, kBatch, derive_seed(seed, static_cast<std::uint64_t>(round)));
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
      if (static_cast<Eigen::Index>(xs.size()) >= kReferenceSize) break;
      if ((batch.z(i, 0) < threshold) == below) {
        xs.push_back(batch.x(i, 0));
        ys.push_back(batch.y(i));
      }
    }
  }
  return {Eigen::Map<Eigen::VectorXd>(xs.data(), kReferenceSize),
          Eigen::Map<Eigen::VectorXd>(ys.data(), kReferenceSize)};
}

}  // namespace

TrialReport shift_eval(const TrialConfig& cfg, double threshold) {
  cfg.validate();
  if (!cfg.design) {
    throw InvalidInput("shift evaluation needs a synthetic design");
  }
  if (!std::isfinite(threshold)) {
    throw InvalidInput("threshold must be finite");
  }
  const std::vector<double> grid = cfg.grid.empty() ? default_grid() : cfg.grid;
  const std::vector<std::string> methods =
      cfg.methods.empty() ? all_methods() : cfg.methods;
  const std::size_t nm = methods.size();

  const auto below_draw =
      conditional_draw(*cfg.design, threshold, true, derive_seed(cfg.base_seed, 101));
  const auto above_draw =
      conditional_draw(*cfg.design, threshold, false, derive_seed(cfg.base_seed, 102));
  const ConditionalReference below_ref =
      ConditionalReference::fit(below_draw.first, below_draw.second);
  const ConditionalReference above_ref =
      ConditionalReference::fit(above_draw.first, above_draw.second);
  const Binned below_pts =
      bin_xy(below_draw.first, below_draw.second, kReferenceBins);
  const Binned above_pts =
      bin_xy(above_draw.first, above_draw.second, kReferenceBins);

  TrialReport report;
  report.metric = "pe";
  report.trials = cfg.trials;
  report.grid = grid;
  nlohmann::json j = config_to_json(cfg);
  j["threshold"] = threshold;
  report.config_json = j.dump();
  report.series.resize(2 * nm);
  for (std::size_t i = 0; i < nm; ++i) {
    report.series[2 * i].label = methods[i] + "[below]";
    report.series[2 * i + 1].label = methods[i] + "[above]";
    report.series[2 * i].per_trial.assign(static_cast<std::size_t>(cfg.trials),
                                          std::nullopt);
    report.series[2 * i + 1].per_trial.assign(
        static_cast<std::size_t>(cfg.trials), std::nullopt);
  }

  auto run_trial = [&](int t) {
    Dataset below_data, above_data;
    try {
      const Dataset data = generate(*cfg.design, cfg.sample_size,
                                    cfg.base_seed + static_cast<std::uint64_t>(t));
      std::vector<Eigen::Index> below_rows, above_rows;
      for (Eigen::Index i = 0; i < data.size(); ++i) {
        (data.z(i, 0) < threshold ? below_rows : above_rows).push_back(i);
      }
      below_data = data.take(below_rows);
      above_data = data.take(above_rows);
    } catch (const std::exception&) {
      return;
    }
    for (std::size_t i = 0; i < nm; ++i) {
      // trained below the threshold, scored on the other side
      try {
        const Predictor f =
            fit_method(methods[i], below_data, cfg,
                       derive_seed(cfg.base_seed + static_cast<std::uint64_t>(t), 1));
        report.series[2 * i].per_trial[static_cast<std::size_t>(t)] =
            weighted_pe(f, above_ref, above_pts);
        if (t == 0) {
          std::vector<double> preds(grid.size());
          for (std::size_t k = 0; k < grid.size(); ++k) preds[k] = f(grid[k]);
          report.series[2 * i].curve = std::move(preds);
        }
      } catch (const std::exception&) {
      }
      try {
        const Predictor f =
            fit_method(methods[i], above_data, cfg,
                       derive_seed(cfg.base_seed + static_cast<std::uint64_t>(t), 2));
        report.series[2 * i + 1].per_trial[static_cast<std::size_t>(t)] =
            weighted_pe(f, below_ref, below_pts);
        if (t == 0) {
          std::vector<double> preds(grid.size());
          for (std::size_t k = 0; k < grid.size(); ++k) preds[k] = f(grid[k]);
          report.series[2 * i + 1].curve = std::move(preds);
        }
      } catch (const std::exception&) {
      }
    }
  };
  parallel_trials(cfg.trials, cfg.jobs, run_trial);
  apply_failure_rule(report);
  return report;
}

ConditionalReference ConditionalReference::fit(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& y) {
  const Binned b = bin_xy(x, y, kReferenceBins);

  ConditionalReference ref;
  // the scale only needs a probe subsample, not all pairwise distances
  const Eigen::Index stride = std::max<Eigen::Index>(1, x.size() / 2000);
  const Eigen::Index probes = (x.size() + stride - 1) / stride;
  Eigen::MatrixXd probe(probes, 1);
  for (Eigen::Index i = 0, k = 0; i < x.size(); i += stride, ++k) {
    probe(k, 0) = x(i);
  }
  ref.kx_ = KernelSpec{KernelFamily::gaussian, median_heuristic(probe)};

  ref.y_center_ = (b.counts.array() * b.means.array()).sum() / b.total;
  const Eigen::VectorXd yc = b.means.array() - ref.y_center_;
  Eigen::MatrixXd cm(b.centers.size(), 1);
  cm.col(0) = b.centers;
  const Eigen::MatrixXd k = gram(ref.kx_, cm, cm);
  const Eigen::VectorXd half = b.counts.array().sqrt();
  const Eigen::MatrixXd scaled =
      half.asDiagonal() * k * half.asDiagonal();
  const Eigen::VectorXd rhs = (half.array() * yc.array()).matrix();
  const Eigen::VectorXd alpha =
      ridge_solve(scaled, b.total * kReferenceRidge, rhs);
  ref.beta_ = (half.array() * alpha.array()).matrix();
  ref.centers_ = b.centers;
  return ref;
}

double ConditionalReference::predict(double x) const {
  if (!std::isfinite(x)) {
    throw InvalidInput("prediction point must be finite");
  }
  const double scale = -0.5 / (kx_.bandwidth * kx_.bandwidth);
  const Eigen::ArrayXd d = centers_.array() - x;
  return beta_.dot(((d * d) * scale).exp().matrix()) + y_center_;
}

}  // namespace kar
