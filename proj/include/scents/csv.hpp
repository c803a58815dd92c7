#pragma once

#include <string>
#include <vector>

#include "scents/dataset.hpp"

namespace scents {

/// Explicit column mapping; empty vectors fall back to the prefix
/// convention (one `y`, one `q`, X columns `x_*`, Z columns `z_*`).
struct ColumnMap {
  std::string y = "y";
  std::string q = "q";
  std::vector<std::string> x;  // empty: every column starting with "x_"
  std::vector<std::string> z;  // empty: every column starting with "z_"
};

struct IngestResult {
  Dataset data;
  int n_dropped = 0;  // rows removed for missing values
  std::vector<std::string> x_names, z_names;
};

/// Reads an RFC-4180 CSV with a header row.  Rows with missing values
/// are dropped and counted; unparseable numerics raise
/// std::runtime_error naming the row and column.
IngestResult ingest_csv(const std::string& path, const ColumnMap& map = {});

}  // namespace scents
