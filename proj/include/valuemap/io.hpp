#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace valuemap::io {

using Row = std::vector<std::string>;

// RFC 4180 style: quoted fields may contain the delimiter, doubled quotes and
// newlines. Blank lines are skipped. A trailing '\r' is stripped.
std::vector<Row> read_delimited(std::istream& in, char delimiter = ',');
std::vector<Row> read_delimited_file(const std::filesystem::path& path, char delimiter = ',');

std::string escape_field(std::string_view field, char delimiter = ',');

class DelimitedWriter {
 public:
  explicit DelimitedWriter(std::ostream& out, char delimiter = ',') : out_(out), delimiter_(delimiter) {}
  void row(const Row& fields);

 private:
  std::ostream& out_;
  char delimiter_;
};

std::string read_file(const std::filesystem::path& path);
/// Creates parent directories as needed; throws IoFailure.
void write_file(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

/// FNV-1a, 64 bit. Stable across platforms, used for content addressing.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Fixed-point rendering; NaN renders as "NA".
std::string fixed(double v, int decimals = 3);
/// Shortest round-trippable rendering of a double.
std::string exact(double v);

/// Orders ids like "Q2" < "Q10" by comparing digit runs numerically.
bool natural_less(std::string_view a, std::string_view b);

}  // namespace valuemap::io
