#include "ufnd/table.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ufnd/delimited.hpp"

namespace ufnd {

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw std::invalid_argument("table row has " + std::to_string(row.size()) +
                                " cells, header has " + std::to_string(header.size()));
  }
  rows.push_back(std::move(row));
}

std::string Table::to_delimited(char delimiter) const {
  std::string out;
  if (!title.empty()) out += "# " + title + "\n";
  for (const auto& n : notes) out += "# " + n + "\n";
  out += join_record(header, delimiter) + "\n";
  for (const auto& r : rows) out += join_record(r, delimiter) + "\n";
  return out;
}

std::string Table::to_aligned() const {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) s += "  ";
      s += cells[c];
      if (c + 1 < cells.size()) s += std::string(width[c] - cells[c].size(), ' ');
    }
    return s + "\n";
  };
  std::ostringstream os;
  if (!title.empty()) os << title << "\n";
  for (const auto& n : notes) os << "  " << n << "\n";
  os << line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += header.empty() ? 0 : 2 * (header.size() - 1);
  os << std::string(total, '-') << "\n";
  for (const auto& r : rows) os << line(r);
  return os.str();
}

std::vector<std::string> Table::write(const std::string& stem) const {
  const std::vector<std::string> paths{stem + ".csv", stem + ".txt"};
  const std::string bodies[2] = {to_delimited(), to_aligned()};
  for (int i = 0; i < 2; ++i) {
    std::ofstream out(paths[i], std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + paths[i]);
    out << bodies[i];
  }
  return paths;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace ufnd
