#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "biflab/error.hpp"
#include "biflab/measure.hpp"
#include "biflab/potential.hpp"

namespace biflab {

inline constexpr std::string_view kToolName = "biflab";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::IoError, "SHA-256 computation failed");
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::StaleInput, "missing input file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

inline std::string file_hash(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

/// Locale-independent shortest-exact double formatting used in CSV output.
inline std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r |= ((v >> (8 * k)) & 0xffu) << (8 * (7 - k));
    return r;
  }
  return v;
}

class BinaryWriter {
 public:
  void u64(std::uint64_t v) {
    v = to_little(v);
    char b[8];
    std::memcpy(b, &v, 8);
    buf_.append(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  /// Metadata trailer: UTF-8 text followed by its byte length.
  void trailer(std::string_view text) {
    bytes(text);
    u64(text.size());
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::string_view data) : data_(data) {}
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    return to_little(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw Error(ErrorKind::IoError, "truncated binary grid file");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::string read_trailer(std::string_view data, std::size_t body_end) {
  if (data.size() < body_end + 8) return {};
  std::uint64_t len;
  std::memcpy(&len, data.data() + data.size() - 8, 8);
  len = to_little(len);
  if (body_end + len + 8 != data.size()) throw Error(ErrorKind::IoError, "corrupt metadata trailer");
  return std::string(data.substr(body_end, len));
}

}  // namespace detail

/// Potential grid file: little-endian header (re_min, im_min, re_max, im_max,
/// nx, ny, tol, iter_budget), row-major float64 values, then an optional
/// metadata trailer (text + u64 length).
inline std::string encode_potential(const PotentialGrid& g, std::string_view metadata = {}) {
  detail::BinaryWriter w;
  w.f64(g.region.min.real());
  w.f64(g.region.min.imag());
  w.f64(g.region.max.real());
  w.f64(g.region.max.imag());
  w.u64(static_cast<std::uint64_t>(g.nx));
  w.u64(static_cast<std::uint64_t>(g.ny));
  w.f64(g.tol);
  w.u64(static_cast<std::uint64_t>(g.iter_budget));
  for (double v : g.values) w.f64(v);
  if (!metadata.empty()) w.trailer(metadata);
  return w.str();
}

struct DecodedPotential {
  PotentialGrid grid;
  std::string metadata;
};

inline DecodedPotential decode_potential(std::string_view data) {
  detail::BinaryReader r(data);
  DecodedPotential d;
  auto& g = d.grid;
  const double a = r.f64(), b = r.f64(), c = r.f64(), e = r.f64();
  g.region = {{a, b}, {c, e}};
  g.nx = static_cast<int>(r.u64());
  g.ny = static_cast<int>(r.u64());
  g.tol = r.f64();
  g.iter_budget = static_cast<int>(r.u64());
  if (g.nx < 2 || g.ny < 2) throw Error(ErrorKind::IoError, "bad potential grid shape");
  g.h = g.region.width() / (g.nx - 1);
  const std::size_t count = static_cast<std::size_t>(g.nx) * g.ny;
  g.values.resize(count);
  for (auto& v : g.values) v = r.f64();
  d.metadata = detail::read_trailer(data, 64 + 8 * count);
  return d;
}

/// Measure grid file: same region and node-count header, then total_mass,
/// clipped_mass, masked_cells, the 64-character source hash, row-major
/// (nx-2)(ny-2) float64 masses, and the metadata trailer.
inline std::string encode_measure(const MeasureGrid& m, std::string_view metadata = {}) {
  detail::BinaryWriter w;
  w.f64(m.region.min.real());
  w.f64(m.region.min.imag());
  w.f64(m.region.max.real());
  w.f64(m.region.max.imag());
  w.u64(static_cast<std::uint64_t>(m.nx));
  w.u64(static_cast<std::uint64_t>(m.ny));
  w.f64(m.total_mass);
  w.f64(m.clipped_mass);
  w.u64(static_cast<std::uint64_t>(m.masked_cells));
  std::string hash = m.source_hash;
  hash.resize(64, '0');
  w.bytes(hash);
  for (double v : m.masses) w.f64(v);
  if (!metadata.empty()) w.trailer(metadata);
  return w.str();
}

struct DecodedMeasure {
  MeasureGrid grid;
  std::string metadata;
};

inline DecodedMeasure decode_measure(std::string_view data) {
  detail::BinaryReader r(data);
  DecodedMeasure d;
  auto& m = d.grid;
  const double a = r.f64(), b = r.f64(), c = r.f64(), e = r.f64();
  m.region = {{a, b}, {c, e}};
  m.nx = static_cast<int>(r.u64());
  m.ny = static_cast<int>(r.u64());
  if (m.nx < 3 || m.ny < 3) throw Error(ErrorKind::IoError, "bad measure grid shape");
  m.h = m.region.width() / (m.nx - 1);
  m.total_mass = r.f64();
  m.clipped_mass = r.f64();
  m.masked_cells = static_cast<std::int64_t>(r.u64());
  m.source_hash = r.bytes(64);
  const std::size_t count = static_cast<std::size_t>(m.nx - 2) * (m.ny - 2);
  m.masses.resize(count);
  for (auto& v : m.masses) v = r.f64();
  d.metadata = detail::read_trailer(data, 72 + 64 + 8 * count);
  return d;
}

/// CSV (lambda_re, lambda_im, L) of a potential grid.
inline std::string potential_csv(const PotentialGrid& g, std::string_view comment = {}) {
  std::string out;
  if (!comment.empty()) out += fmt::format("# {}\n", comment);
  out += "lambda_re,lambda_im,L\n";
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const Complex z = g.node(i, j);
      out += fmt::format("{},{},{}\n", fmt_double(z.real()), fmt_double(z.imag()), fmt_double(g.at(i, j)));
    }
  return out;
}

/// Minimal CSV reader: skips '#' comment lines, returns the header and rows.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw Error(ErrorKind::IoError, "CSV column missing: " + std::string(name));
  }
};

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = s.find(sep, start);
    out.emplace_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(1 + (line.size() > 1 && line[1] == ' ')));
      continue;
    }
    if (t.header.empty()) t.header = split(line, ',');
    else t.rows.push_back(split(line, ','));
  }
  return t;
}

inline double parse_double(const std::string& s) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v;
  in >> v;
  if (in.fail()) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw Error(ErrorKind::IoError, "not a number: " + s);
  }
  return v;
}

}  // namespace biflab
