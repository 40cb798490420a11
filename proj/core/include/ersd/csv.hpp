#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ersd::csv {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

using Cell = std::variant<double, std::int64_t, std::string>;

class Writer {
 public:
  Writer(std::ostream& out, std::vector<std::string> header);
  void row(const std::vector<Cell>& cells);

 private:
  std::ostream& out_;
  std::size_t width_;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t index_of(std::string_view column) const;  // throws std::out_of_range
  std::vector<std::string> column(std::string_view name) const;
  std::vector<double> numbers(std::string_view name) const;  // throws std::invalid_argument on bad cells
};

/// Header line then rows; blank lines and lines starting with '#' are skipped.
/// Double-quoted fields may contain commas.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

}  // namespace ersd::csv
