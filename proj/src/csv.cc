// Copyright 2026 The vimpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vimpc/csv.h"

#include <charconv>
#include <sstream>

#include "vimpc/core_types.h"

namespace vimpc {

std::string FormatDouble(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path), columns_(header.size()) {
  if (!out_) throw Error(ErrorCode::kIo, path, "cannot open for writing");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::Separator() {
  if (in_row_++) out_ << ',';
}

CsvWriter& CsvWriter::Add(double value) {
  Separator();
  out_ << FormatDouble(value);
  return *this;
}

CsvWriter& CsvWriter::Add(long long value) {
  Separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::Add(unsigned long long value) {
  Separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::Add(const std::string& value) {
  Separator();
  out_ << value;
  return *this;
}

void CsvWriter::EndRow() {
  if (in_row_ != columns_) {
    throw Error(ErrorCode::kIo, path_, "row width does not match header");
  }
  out_ << '\n';
  in_row_ = 0;
  if (!out_) throw Error(ErrorCode::kIo, path_, "write failed");
}

int CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::kParseError, name, "no such CSV column");
}

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, path, "cannot open for reading");
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) table.header = SplitLine(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    table.rows.push_back(SplitLine(line));
  }
  return table;
}

}  // namespace vimpc
