#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kar {

// Per-trial measurements for one fitted method instance. A missing entry is
// a recorded fit failure for that trial. info carries small scalars worth
// surfacing in summaries (e.g. a selected tuning constant).
struct MethodSeries {
  std::string label;
  std::vector<std::optional<double>> per_trial;
  std::vector<double> curve;  // first-trial predictions on the grid
  std::vector<std::pair<std::string, double>> info;

  int failures() const;
  std::vector<double> values() const;  // successful measurements, trial order
};

struct TrialReport {
  std::string metric = "mse";
  int trials = 0;
  std::vector<double> grid;
  std::vector<MethodSeries> series;
  bool campaign_ok = true;
  std::string config_json;  // verbatim echo for the JSON report; may be empty
};

struct SeriesSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::optional<double> log10_median;  // present when all values are positive
  std::optional<double> log10_q1;
  std::optional<double> log10_q3;
  int failures = 0;
};

// Linear-interpolation quantile of the values of v; p in [0, 1].
double quantile(std::vector<double> v, double p);

SeriesSummary summarize(const MethodSeries& series);

enum class ReportFormat { csv, json };

// CSV: one "method,trial,metric,value" row per successful measurement, 17
// significant digits. JSON: config echo, per-method summary, grid curves.
void emit_report(const TrialReport& report, const std::string& path,
                 ReportFormat format);

}  // namespace kar
