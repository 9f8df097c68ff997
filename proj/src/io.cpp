#include "cusal/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace cusal::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool skippable(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, long line,
                             const std::string& what) {
  throw Error(ErrorCode::ParseError,
              source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& tok, const std::string& source, long line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = first + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    parse_fail(source, line, "'" + tok + "' is not a decimal number");
  if (!std::isfinite(v)) parse_fail(source, line, "'" + tok + "' is not finite");
  return v;
}

long long parse_integer(const std::string& tok) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw Error(ErrorCode::ParseError, "'" + tok + "' is not an integer");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Matrix parse_matrix(std::istream& in, const std::string& source) {
  std::string line;
  long lineno = 0;
  bool have_header = false;
  Index rows = 0, cols = 0, row = 0;
  Matrix m;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tokens = split_ws(line);
    if (!have_header) {
      if (tokens.size() != 4 || tokens[0] != kMatrixMagic || tokens[1] != kMatrixVersion)
        throw Error(ErrorCode::BadMagic,
                    source + ":" + std::to_string(lineno) +
                        ": expected 'UNMIX-MATRIX v1 <rows> <cols>'");
      try {
        rows = parse_integer(tokens[2]);
        cols = parse_integer(tokens[3]);
      } catch (const Error&) {
        parse_fail(source, lineno, "bad matrix dimensions");
      }
      if (rows < 1 || cols < 1) parse_fail(source, lineno, "matrix dimensions must be positive");
      m.resize(rows, cols);
      have_header = true;
      continue;
    }
    if (row >= rows)
      throw Error(ErrorCode::ShapeMismatch,
                  source + ":" + std::to_string(lineno) + ": more than " +
                      std::to_string(rows) + " rows");
    if (static_cast<Index>(tokens.size()) != cols)
      throw Error(ErrorCode::ShapeMismatch,
                  source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(cols) + " values, found " +
                      std::to_string(tokens.size()));
    for (Index c = 0; c < cols; ++c) m(row, c) = parse_number(tokens[c], source, lineno);
    ++row;
  }
  if (!have_header) throw Error(ErrorCode::BadMagic, source + ": missing matrix header");
  if (row != rows)
    throw Error(ErrorCode::ShapeMismatch, source + ": expected " + std::to_string(rows) +
                                              " rows, found " + std::to_string(row));
  return m;
}

void format_matrix(std::ostream& out, const Matrix& m) {
  out << kMatrixMagic << ' ' << kMatrixVersion << ' ' << m.rows() << ' ' << m.cols()
      << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_matrix(in, path.string());
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  format_matrix(out, m);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

KeyValues parse_key_values(std::istream& in, const std::string& source) {
  KeyValues kv;
  std::set<std::string> seen;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(source, lineno, "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(source, lineno, "empty key");
    if (!seen.insert(key).second) parse_fail(source, lineno, "duplicate key '" + key + "'");
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_key_values(in, path.string());
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<long long> parse_index_list(const std::string& text) {
  std::vector<long long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto dash = item.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(parse_integer(item));
      continue;
    }
    const long long lo = parse_integer(trim(item.substr(0, dash)));
    const long long hi = parse_integer(trim(item.substr(dash + 1)));
    if (hi < lo) throw Error(ErrorCode::ParseError, "descending range '" + item + "'");
    for (long long i = lo; i <= hi; ++i) out.push_back(i);
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(item, "<list>", 1));
  }
  return out;
}

}  // namespace cusal::io
