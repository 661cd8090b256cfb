#include "ssvb/harness/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssvb::harness {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto begin = cell.find_first_not_of(" \t\r");
    const auto end = cell.find_last_not_of(" \t\r");
    cells.push_back(begin == std::string::npos
                        ? std::string()
                        : cell.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& cell, double* out) {
  if (cell.empty()) return false;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE) return false;
  *out = v;
  return true;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);

  std::vector<std::vector<std::string>> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    raw.push_back(split_line(line));
  }
  if (raw.empty()) throw std::runtime_error("empty CSV file: " + path);

  const size_t cols = raw[0].size();
  for (size_t r = 0; r < raw.size(); ++r) {
    if (raw[r].size() != cols) {
      throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                               " has " + std::to_string(raw[r].size()) +
                               " cells, expected " + std::to_string(cols));
    }
  }

  CsvTable table;
  size_t body_start = 0;
  double scratch;
  for (const auto& cell : raw[0]) {
    if (!parse_double(cell, &scratch)) {
      table.header = raw[0];
      body_start = 1;
      break;
    }
  }
  const size_t rows = raw.size() - body_start;
  if (rows == 0) throw std::runtime_error(path + ": no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows),
                      static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      const std::string& cell = raw[r + body_start][c];
      double v;
      if (!parse_double(cell, &v)) {
        throw std::runtime_error(path + ": non-numeric cell at row " +
                                 std::to_string(r + body_start + 1) +
                                 ", column " + std::to_string(c + 1) + " ('" +
                                 cell + "')");
      }
      if (!std::isfinite(v)) {
        throw std::runtime_error(path + ": non-finite cell at row " +
                                 std::to_string(r + body_start + 1) +
                                 ", column " + std::to_string(c + 1));
      }
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Mat& values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out.precision(17);
  if (!header.empty()) {
    for (size_t i = 0; i < header.size(); ++i) {
      if (i > 0) out << ',';
      out << header[i];
    }
    out << '\n';
  }
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << values(r, c);
    }
    out << '\n';
  }
}

LogisticDataset ingest_csv(const std::string& path,
                           const IngestOptions& options) {
  const CsvTable table = read_csv(path);
  const Eigen::Index cols = table.values.cols();
  if (cols < 2) {
    throw std::runtime_error(path + ": need at least one feature column");
  }

  Eigen::Index label_col = -1;
  if (table.has_header() && !options.label_column.empty()) {
    for (size_t i = 0; i < table.header.size(); ++i) {
      if (table.header[i] == options.label_column) {
        label_col = static_cast<Eigen::Index>(i);
        break;
      }
    }
  }
  if (label_col < 0) {
    label_col = options.label_index >= 0
                    ? static_cast<Eigen::Index>(options.label_index)
                    : cols - 1;
  }
  if (label_col < 0 || label_col >= cols) {
    throw std::runtime_error(path + ": label column out of range");
  }

  Mat features(table.values.rows(), cols - 1);
  Eigen::Index out_c = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    if (c == label_col) continue;
    features.col(out_c++) = table.values.col(c);
  }
  if (options.standardize) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const double mean = features.col(c).mean();
      const double sd = std::sqrt(
          (features.col(c).array() - mean).square().sum() /
          std::max<double>(1.0, static_cast<double>(features.rows() - 1)));
      features.col(c).array() -= mean;
      if (sd > 0.0) features.col(c) /= sd;
    }
  }
  return LogisticDataset::from_features(features, table.values.col(label_col));
}

Mat read_matrix_csv(const std::string& path) {
  return read_csv(path).values;
}

}  // namespace ssvb::harness
