#pragma once

// Matrix files: CSV (rows = grid points, columns = subjects; NA/NaN/empty
// read as missing, NA written) and a packed binary layout:
//   "FACE0001" | u64 rows | u64 cols | rows*cols f64, column-major.
// Binary integers and floats are little-endian.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "face/errors.hpp"
#include "face/linalg.hpp"

namespace face {

enum class MatrixFormat { csv, packed_binary };

inline constexpr char kBinaryMagic[9] = "FACE0001";

inline MatrixFormat format_from_string(const std::string& s) {
  if (s == "csv") return MatrixFormat::csv;
  if (s == "bin" || s == "binary" || s == "packed_binary") return MatrixFormat::packed_binary;
  throw ConfigError("unknown matrix format '" + s + "'; valid formats are csv, bin");
}

// .bin/.face -> packed binary, anything else -> csv.
inline MatrixFormat format_from_path(const std::string& path) {
  auto ends_with = [&](const char* suf) {
    const std::size_t n = std::strlen(suf);
    return path.size() >= n && path.compare(path.size() - n, n, suf) == 0;
  };
  return (ends_with(".bin") || ends_with(".face")) ? MatrixFormat::packed_binary : MatrixFormat::csv;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool is_missing_token(const std::string& tok) {
  return tok.empty() || tok == "NA" || tok == "NaN" || tok == "nan" || tok == "NAN";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// Missing entries become quiet NaN.
inline Matrix read_csv_matrix(std::istream& in, bool header, const std::string& name = "csv") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool skipped_header = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto toks = detail::split_csv_line(line);
    if (width == 0) width = toks.size();
    if (toks.size() != width) {
      throw InputError(name + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(toks.size()) + " fields; expected " + std::to_string(width));
    }
    std::vector<double> row(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (detail::is_missing_token(toks[c])) {
        row[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      std::size_t used = 0;
      try {
        row[c] = std::stod(toks[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != toks[c].size() || !std::isfinite(row[c])) {
        throw InputError(name + ": line " + std::to_string(line_no) + ", field " +
                         std::to_string(c + 1) + ": cannot parse '" + toks[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(name + ": no data rows");
  Matrix m(Index(rows.size()), Index(width));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  return m;
}

inline Matrix read_csv_matrix(const std::string& path, bool header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_csv_matrix(in, header, path);
}

// Full round-trip precision; non-finite entries written as NA.
inline void write_csv_matrix(std::ostream& out, const Matrix& m,
                             const std::vector<std::string>& header = {}) {
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
  }
  out << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      if (std::isfinite(m(r, c))) {
        out << m(r, c);
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

inline void write_csv_matrix(const std::string& path, const Matrix& m,
                             const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv_matrix(out, m, header);
  if (!out) throw InputError("write failed for '" + path + "'");
}

namespace detail {
static_assert(std::endian::native == std::endian::little,
              "packed binary I/O assumes a little-endian host");
}

inline void write_binary_matrix(std::ostream& out, const Matrix& m) {
  out.write(kBinaryMagic, 8);
  const std::uint64_t dims[2] = {std::uint64_t(m.rows()), std::uint64_t(m.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(m.data()),
            std::streamsize(sizeof(double) * std::size_t(m.size())));
}

inline void write_binary_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_binary_matrix(out, m);
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline Matrix read_binary_matrix(std::istream& in, const std::string& name = "binary") {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kBinaryMagic, 8) != 0) {
    throw InputError(name + ": missing FACE0001 header");
  }
  std::uint64_t dims[2];
  if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims))) {
    throw InputError(name + ": truncated dimensions");
  }
  if (dims[0] == 0 || dims[1] == 0 || dims[0] > (1ull << 40) / dims[1]) {
    throw InputError(name + ": implausible dimensions " + std::to_string(dims[0]) + " x " +
                     std::to_string(dims[1]));
  }
  Matrix m(static_cast<Index>(dims[0]), static_cast<Index>(dims[1]));
  if (!in.read(reinterpret_cast<char*>(m.data()),
               std::streamsize(sizeof(double) * std::size_t(m.size())))) {
    throw InputError(name + ": truncated payload");
  }
  return m;
}

inline Matrix read_binary_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_binary_matrix(in, path);
}

inline Matrix read_matrix(const std::string& path, MatrixFormat fmt, bool header) {
  return fmt == MatrixFormat::csv ? read_csv_matrix(path, header) : read_binary_matrix(path);
}

}  // namespace face
