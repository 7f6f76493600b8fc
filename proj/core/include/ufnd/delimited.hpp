#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace ufnd {

// Reads delimiter-separated records with standard double-quote quoting:
// quoted fields may contain the delimiter, newlines, and "" escapes.
// Both LF and CRLF line endings are accepted.
class DelimitedReader {
 public:
  explicit DelimitedReader(std::istream& in, char delimiter = ',');

  // Returns false at end of input. A trailing blank line is not a record.
  bool next(std::vector<std::string>& fields);

  // 1-based physical line on which the most recent record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

// Quotes a field when it contains the delimiter, a quote, or a newline.
std::string quote_field(const std::string& field, char delimiter = ',');
std::string join_record(const std::vector<std::string>& fields, char delimiter = ',');

}  // namespace ufnd
