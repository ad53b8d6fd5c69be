#include "kar/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "kar/errors.hpp"

namespace kar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

// "NA" or empty is missing; anything else must parse fully as a double.
std::optional<double> parse_cell(const std::string& cell) {
  if (cell.empty() || cell == "NA") return std::nullopt;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;  // from_chars rejects an explicit plus
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

void ColumnSchema::validate() const {
  if (treatment.empty()) throw InvalidInput("schema needs a treatment column");
  if (outcome.empty()) throw InvalidInput("schema needs an outcome column");
  if (anchors.empty()) throw InvalidInput("schema needs at least one anchor");
  std::vector<std::string> names{treatment, outcome};
  names.insert(names.end(), anchors.begin(), anchors.end());
  if (group) names.push_back(*group);
  for (const auto& n : names) {
    if (n.empty()) throw InvalidInput("schema column names must be nonempty");
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    throw InvalidInput("schema column names must be distinct");
  }
}

LoadedCsv load_csv(const std::string& path, const ColumnSchema& schema) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open csv file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw EmptyData("csv file has no header: " + path);
  const std::vector<std::string> header = split_line(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);

  auto column = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) {
      throw MissingColumn("csv is missing column: " + name);
    }
    return it->second;
  };

  std::vector<std::size_t> wanted{column(schema.treatment),
                                  column(schema.outcome)};
  for (const auto& a : schema.anchors) wanted.push_back(column(a));
  if (schema.group) wanted.push_back(column(*schema.group));

  std::vector<bool> take_log(wanted.size(), false);
  for (const auto& name : schema.log_columns) {
    const std::size_t col = column(name);
    bool used = false;
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      if (wanted[k] == col) take_log[k] = used = true;
    }
    if (!used) {
      throw InvalidInput("log flag names a column outside the schema: " + name);
    }
  }

  LoadStats stats;
  std::vector<std::vector<double>> rows;
  std::vector<double> parsed(wanted.size());
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++stats.file_rows;
    const std::vector<std::string> cells = split_line(line);
    bool missing = false;
    bool nonpositive = false;
    for (std::size_t k = 0; k < wanted.size() && !missing; ++k) {
      if (wanted[k] >= cells.size()) {
        missing = true;
        break;
      }
      const auto value = parse_cell(cells[wanted[k]]);
      if (!value) {
        missing = true;
        break;
      }
      if (take_log[k]) {
        if (!(*value > 0.0)) {
          nonpositive = true;
          parsed[k] = 0.0;
          continue;
        }
        parsed[k] = std::log(*value);
      } else {
        parsed[k] = *value;
      }
    }
    if (missing) {
      ++stats.dropped_missing;
    } else if (nonpositive) {
      ++stats.dropped_nonpositive;
    } else {
      rows.push_back(parsed);
      ++stats.ingested;
    }
  }
  if (stats.file_rows == 0) throw EmptyData("csv file has no data rows: " + path);
  if (stats.ingested == 0) throw EmptyData("no usable rows in csv file: " + path);

  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index dz = static_cast<Eigen::Index>(schema.anchors.size());
  LoadedCsv out;
  out.stats = stats;
  out.data.x.resize(n, 1);
  out.data.y.resize(n);
  out.data.z.resize(n, dz);
  if (schema.group) out.data.group.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    out.data.x(i, 0) = r[0];
    out.data.y(i) = r[1];
    for (Eigen::Index j = 0; j < dz; ++j) {
      out.data.z(i, j) = r[2 + static_cast<std::size_t>(j)];
    }
    if (schema.group) out.data.group(i) = r[2 + static_cast<std::size_t>(dz)];
  }
  out.data.validate();
  return out;
}

ColumnSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("schema parse error: ") + e.what());
  }
  ColumnSchema schema;
  try {
    schema.treatment = doc.at("treatment").get<std::string>();
    schema.outcome = doc.at("outcome").get<std::string>();
    for (const auto& a : doc.at("anchors")) {
      schema.anchors.push_back(a.get<std::string>());
    }
    if (doc.contains("group")) {
      schema.group = doc.at("group").get<std::string>();
    }
    if (doc.contains("log")) {
      for (const auto& c : doc.at("log")) {
        schema.log_columns.push_back(c.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("schema field error: ") + e.what());
  }
  schema.validate();
  return schema;
}

Dataset subsample(const Dataset& data, Eigen::Index n, std::uint64_t seed) {
  data.validate();
  if (n < 1 || n > data.size()) {
    throw InvalidInput("subsample size must be in [1, n]");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(n));
  std::sort(order.begin(), order.end());
  return data.take(order);
}

std::pair<Dataset, Dataset> split_by_group(const Dataset& data,
                                           double group_value) {
  data.validate();
  if (!data.has_group()) {
    throw InvalidInput("dataset has no group column to split on");
  }
  std::vector<Eigen::Index> match, rest;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    (data.group(i) == group_value ? match : rest).push_back(i);
  }
  return {data.take(match), data.take(rest)};
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  const Eigen::Index dx = data.x.cols(), dz = data.z.cols();
  const Eigen::Index dc = data.latent.size() > 0 ? data.latent.cols() : 0;
  for (Eigen::Index j = 0; j < dx; ++j) out << "x" << (j + 1) << ",";
  out << "y";
  for (Eigen::Index j = 0; j < dz; ++j) out << ",z" << (j + 1);
  if (data.has_group()) out << ",group";
  for (Eigen::Index j = 0; j < dc; ++j) out << ",c" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < dx; ++j) {
      put(data.x(i, j));
      out << ",";
    }
    put(data.y(i));
    for (Eigen::Index j = 0; j < dz; ++j) {
      out << ",";
      put(data.z(i, j));
    }
    if (data.has_group()) {
      out << ",";
      put(data.group(i));
    }
    for (Eigen::Index j = 0; j < dc; ++j) {
      out << ",";
      put(data.latent(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing output file: " + path);
}

}  // namespace kar
