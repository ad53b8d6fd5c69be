#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kar/dataset.hpp"

namespace kar {

// Maps CSV columns onto Dataset blocks. Columns named in log_columns are
// replaced by their natural log at ingestion; rows where such a column is
// nonpositive are dropped.
struct ColumnSchema {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> anchors;
  std::optional<std::string> group;
  std::vector<std::string> log_columns;

  void validate() const;
};

struct LoadStats {
  std::size_t file_rows = 0;  // data rows in the file (header excluded)
  std::size_t ingested = 0;
  std::size_t dropped_missing = 0;      // missing or non-numeric cells
  std::size_t dropped_nonpositive = 0;  // nonpositive under a log flag
};

struct LoadedCsv {
  Dataset data;
  LoadStats stats;
};

// Header row, comma delimited, '.' decimal point; "NA" or an empty cell is
// missing. Only schema columns are inspected.
LoadedCsv load_csv(const std::string& path, const ColumnSchema& schema);

// Schema as JSON: {"treatment": ..., "outcome": ..., "anchors": [...],
//                  "group": ..., "log": [...]}.
ColumnSchema load_schema(const std::string& path);

// Seeded uniform subsample without replacement, original row order kept.
Dataset subsample(const Dataset& data, Eigen::Index n, std::uint64_t seed);

// (matching, rest) by equality on the group column, order preserving.
std::pair<Dataset, Dataset> split_by_group(const Dataset& data,
                                           double group_value);

// Writes x/y/z (+ group, latent) columns with round-trippable precision.
void write_dataset_csv(const Dataset& data, const std::string& path);

}  // namespace kar
