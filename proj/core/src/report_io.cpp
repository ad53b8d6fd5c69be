#include "kar/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "kar/errors.hpp"

namespace kar {

int MethodSeries::failures() const {
  int n = 0;
  for (const auto& v : per_trial) n += !v.has_value();
  return n;
}

std::vector<double> MethodSeries::values() const {
  std::vector<double> out;
  out.reserve(per_trial.size());
  for (const auto& v : per_trial) {
    if (v) out.push_back(*v);
  }
  return out;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw InvalidInput("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile level outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = h - static_cast<double>(lo);
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

SeriesSummary summarize(const MethodSeries& series) {
  SeriesSummary s;
  s.failures = series.failures();
  const std::vector<double> vals = series.values();
  if (vals.empty()) return s;
  s.median = quantile(vals, 0.5);
  s.q1 = quantile(vals, 0.25);
  s.q3 = quantile(vals, 0.75);
  if (std::all_of(vals.begin(), vals.end(), [](double v) { return v > 0.0; })) {
    std::vector<double> logs(vals.size());
    std::transform(vals.begin(), vals.end(), logs.begin(),
                   [](double v) { return std::log10(v); });
    s.log10_median = quantile(logs, 0.5);
    s.log10_q1 = quantile(logs, 0.25);
    s.log10_q3 = quantile(logs, 0.75);
  }
  return s;
}

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_csv(const TrialReport& report, std::ofstream& out) {
  out << "method,trial,metric,value\n";
  for (const auto& series : report.series) {
    for (std::size_t t = 0; t < series.per_trial.size(); ++t) {
      if (!series.per_trial[t]) continue;
      out << series.label << "," << t << "," << report.metric << ","
          << fmt17(*series.per_trial[t]) << "\n";
    }
  }
}

void emit_json(const TrialReport& report, std::ofstream& out) {
  nlohmann::json doc;
  if (!report.config_json.empty()) {
    doc["config"] = nlohmann::json::parse(report.config_json);
  } else {
    doc["config"] = nlohmann::json::object();
  }
  doc["metric"] = report.metric;
  doc["trials"] = report.trials;
  doc["campaign_ok"] = report.campaign_ok;

  nlohmann::json summary = nlohmann::json::object();
  for (const auto& series : report.series) {
    const SeriesSummary s = summarize(series);
    nlohmann::json entry;
    entry["median"] = s.median;
    entry["q1"] = s.q1;
    entry["q3"] = s.q3;
    if (s.log10_median) {
      entry["log10_median"] = *s.log10_median;
      entry["log10_q1"] = *s.log10_q1;
      entry["log10_q3"] = *s.log10_q3;
    }
    entry["failures"] = s.failures;
    for (const auto& [key, value] : series.info) entry[key] = value;
    summary[series.label] = std::move(entry);
  }
  doc["summary"] = std::move(summary);

  nlohmann::json curves = nlohmann::json::array();
  if (!report.grid.empty()) {
    nlohmann::json axis;
    axis["x"] = report.grid;
    curves.push_back(std::move(axis));
    for (const auto& series : report.series) {
      if (series.curve.empty()) continue;
      nlohmann::json entry;
      entry[series.label] = series.curve;
      curves.push_back(std::move(entry));
    }
  }
  doc["curves"] = std::move(curves);
  out << doc.dump(2) << "\n";
}

}  // namespace

void emit_report(const TrialReport& report, const std::string& path,
                 ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open report file: " + path);
  if (format == ReportFormat::csv) {
    emit_csv(report, out);
  } else {
    emit_json(report, out);
  }
  if (!out) throw IoError("failed writing report file: " + path);
}

}  // namespace kar
