#pragma once

#include <string>
#include <vector>

#include "ssvb/logistic.hpp"

namespace ssvb::harness {

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  Mat values;

  bool has_header() const { return !header.empty(); }
};

// Reads a numeric CSV. A first row with any non-numeric cell is treated as
// the header. Throws std::runtime_error naming row and column on a
// non-numeric or non-finite cell in the body.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Mat& values);

struct IngestOptions {
  // Label column by name (takes precedence) or by index; -1 means the last
  // column.
  std::string label_column = "label";
  int label_index = -1;
  // Standardize features to zero mean / unit variance before appending the
  // offset column.
  bool standardize = false;
};

// Loads a classification CSV into a LogisticDataset: selects the label
// column, maps {0,1} labels to {-1,+1} and appends the all-ones offset.
LogisticDataset ingest_csv(const std::string& path,
                           const IngestOptions& options = {});

// D x K matrix of E[ln pi_dk] values for the HDP model.
Mat read_matrix_csv(const std::string& path);

}  // namespace ssvb::harness
