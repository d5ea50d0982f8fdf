#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spsurv {

class DataError : public std::runtime_error {
 public:
  DataError(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// RFC 4180 table: quoted fields, doubled quotes, embedded newlines and CRLF.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based physical line where each row starts

  std::size_t column(const std::string& name) const;  // throws DataError on unknown column
  bool has_column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Full-precision scientific formatting used for every numeric output.
std::string format_double(double x);

}  // namespace spsurv
