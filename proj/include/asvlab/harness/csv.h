// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Minimal CSV persistence for per-trial records. Fields are plain tokens
// (no quoting); writers reject embedded commas/newlines instead of
// escaping them, readers enforce rectangular tables.

#ifndef ASVLAB_HARNESS_CSV_H_
#define ASVLAB_HARNESS_CSV_H_

#include <string>
#include <vector>

namespace asvlab {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; argument error when absent.
  int Col(const std::string& name) const;
  const std::string& At(size_t row, const std::string& name) const;
};

void WriteCsv(const std::string& path, const CsvTable& table);
CsvTable ReadCsv(const std::string& path);

// Shortest round-trip-exact decimal rendering (doubles survive re-parsing).
std::string CsvNum(double v);

}  // namespace asvlab

#endif  // ASVLAB_HARNESS_CSV_H_
