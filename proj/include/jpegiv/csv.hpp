#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jpegiv {

/// Column-major numeric table read from comma separated text.
struct CsvTable {
  std::vector<std::string> header;  // empty when the file had no header row
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  /// Index of a named column; throws InvalidArgument when absent.
  std::size_t column_index(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
};

/// A first row that does not parse as numbers is taken as the header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& columns);

}  // namespace jpegiv
