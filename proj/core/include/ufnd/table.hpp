#pragma once

#include <string>
#include <vector>

namespace ufnd {

// A report table with two renderings: delimited text for tooling and aligned
// text for reading. Notes become '#' lines above the header.
struct Table {
  std::string title;
  std::vector<std::string> notes;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  std::string to_delimited(char delimiter = ',') const;
  std::string to_aligned() const;
  // Writes <stem>.csv and <stem>.txt; returns both paths.
  std::vector<std::string> write(const std::string& stem) const;
};

std::string fixed(double value, int decimals);

}  // namespace ufnd
