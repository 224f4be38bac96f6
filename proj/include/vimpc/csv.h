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

#ifndef VIMPC_CSV_H_
#define VIMPC_CSV_H_

#include <fstream>
#include <string>
#include <vector>

namespace vimpc {

// Shortest representation that round-trips exactly.
std::string FormatDouble(double value);

// Minimal writer for numeric CSV files with a fixed header.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& Add(double value);
  CsvWriter& Add(long long value);
  CsvWriter& Add(int value) { return Add(static_cast<long long>(value)); }
  CsvWriter& Add(unsigned long long value);
  CsvWriter& Add(const std::string& value);
  void EndRow();

 private:
  void Separator();

  std::string path_;
  std::ofstream out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int Column(const std::string& name) const;
};

CsvTable ReadCsv(const std::string& path);

}  // namespace vimpc

#endif  // VIMPC_CSV_H_
