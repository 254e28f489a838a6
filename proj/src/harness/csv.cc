// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/harness/csv.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "asvlab/core/error.h"

namespace asvlab {

namespace {

void CheckField(const std::string& f) {
  if (f.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorKind::kArgument, "csv: field contains separator: " + f);
  }
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

int CsvTable::Col(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw Error(ErrorKind::kArgument, "csv: no column named " + name);
}

const std::string& CsvTable::At(size_t row, const std::string& name) const {
  if (row >= rows.size()) {
    throw Error(ErrorKind::kArgument, "csv: row out of range");
  }
  return rows[row][static_cast<size_t>(Col(name))];
}

void WriteCsv(const std::string& path, const CsvTable& table) {
  if (table.header.empty()) {
    throw Error(ErrorKind::kArgument, "csv: empty header");
  }
  std::ostringstream os;
  for (size_t i = 0; i < table.header.size(); ++i) {
    CheckField(table.header[i]);
    os << (i ? "," : "") << table.header[i];
  }
  os << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw Error(ErrorKind::kArgument, "csv: ragged row");
    }
    for (size_t i = 0; i < row.size(); ++i) {
      CheckField(row[i]);
      os << (i ? "," : "") << row[i];
    }
    os << "\n";
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "csv: cannot open for write: " + path);
  f << os.str();
  if (!f) throw Error(ErrorKind::kIo, "csv: write failed: " + path);
}

CsvTable ReadCsv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "csv: cannot open: " + path);
  CsvTable table;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() && f.peek() == EOF) break;
    auto fields = SplitLine(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        throw Error(ErrorKind::kFormat, "csv: ragged row in " + path);
      }
      table.rows.push_back(std::move(fields));
    }
  }
  if (table.header.empty()) {
    throw Error(ErrorKind::kFormat, "csv: empty file: " + path);
  }
  return table;
}

std::string CsvNum(double v) {
  char buf[64];
  // max_digits10 keeps the decimal form bit-exact under re-parse.
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace asvlab
