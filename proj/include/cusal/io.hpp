#ifndef CUSAL_IO_HPP
#define CUSAL_IO_HPP

#include "cusal/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace cusal::io {

// Matrix text format:
//   UNMIX-MATRIX v1 <rows> <cols>
//   <cols values separated by single spaces>     (one line per row)
// Lines starting with '#' and blank lines are ignored anywhere. Values are
// written with 17 significant digits, which round-trips every double.

inline constexpr const char* kMatrixMagic = "UNMIX-MATRIX";
inline constexpr const char* kMatrixVersion = "v1";

Matrix parse_matrix(std::istream& in, const std::string& source = "<stream>");
void format_matrix(std::ostream& out, const Matrix& m);

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Shortest-round-trip-safe decimal rendering used by every text output.
std::string format_double(double v);

/// Ordered `key = value` pairs; '#' comments and blank lines are skipped.
/// Duplicate keys and lines without '=' are ParseErrors.
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues parse_key_values(std::istream& in, const std::string& source = "<stream>");
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

/// Parses "1-3,105-115,223" style lists (inclusive ranges).
std::vector<long long> parse_index_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);

}  // namespace cusal::io

#endif  // CUSAL_IO_HPP
