#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "biflab/error.hpp"
#include "biflab/family.hpp"
#include "biflab/io.hpp"
#include "biflab/region.hpp"

namespace biflab {

/// Configuration problem tied to one "section.key" field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::ConfigError, field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct FamilyConfig {
  std::string builtin = "unicritical";  // unicritical | lattes4 | custom
  int degree = 2;
  std::vector<Polynomial> numerator;  // custom only
  std::vector<Polynomial> denominator;
  Polynomial marked_num{{Complex{0.0}, Complex{1.0}}};
  Polynomial marked_den{{Complex{1.0}}};
};

struct LaminarConfig {
  int n = 3;
  std::optional<double> beta;
  int subdivisions = 16;
  Region image_chart{{-2.0, -2.0}, {2.0, 2.0}};
  std::optional<Region> region;  // defaults to the grid region
  int grid = 256;
  int max_grid = 1024;
};

struct ExperimentConfig {
  FamilyConfig family;
  Region region{{-2.5, -2.0}, {1.5, 2.0}};
  int nx = 512;
  int ny = 512;
  int iter_budget = 2000;
  double tol = 1e-10;
  int sample_count = 500;
  std::uint64_t seed = 1;
  int n_max = 500;
  double r_max = 0.25;
  int levels = 3;
  bool potential_csv = false;
  std::optional<LaminarConfig> laminar;

  Family make_family() const {
    if (family.builtin == "unicritical") return unicritical_family(family.degree);
    if (family.builtin == "lattes4") return lattes4_family();
    Family f;
    f.name = "custom";
    f.degree = family.degree;
    f.numerator = family.numerator;
    f.denominator = family.denominator;
    f.marked_num = family.marked_num;
    f.marked_den = family.marked_den;
    f.validate();
    return f;
  }

  Region laminar_region() const { return laminar && laminar->region ? *laminar->region : region; }

  /// Deterministic text form covering every field; its SHA-256 is the config digest.
  std::string canonical() const;
  std::string digest() const { return sha256_hex(canonical()); }
};

/// Builtin defaults; the Lattes family uses a square region and n_max = 300.
inline ExperimentConfig default_config(const std::string& builtin) {
  ExperimentConfig c;
  c.family.builtin = builtin;
  if (builtin == "lattes4") {
    c.family.degree = 4;
    c.region = {{-2.0, -2.0}, {2.0, 2.0}};
    c.n_max = 300;
    c.sample_count = 200;
  }
  return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& field, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double x;
  in >> x;
  if (in.fail() || !in.eof() || !std::isfinite(x)) throw ConfigError(field, "expected a number, got '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& field, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  long long x;
  in >> x;
  if (in.fail() || !in.eof()) throw ConfigError(field, "expected an integer, got '" + v + "'");
  return x;
}

inline Complex parse_complex(const std::string& field, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() == 1) return {parse_real(field, trim(parts[0])), 0.0};
  if (parts.size() != 2) throw ConfigError(field, "expected 're,im', got '" + v + "'");
  return {parse_real(field, trim(parts[0])), parse_real(field, trim(parts[1]))};
}

inline Polynomial parse_polynomial(const std::string& field, const std::string& v) {
  std::vector<Complex> c;
  for (const auto& term : split(v, ';')) c.push_back(parse_complex(field, trim(term)));
  return Polynomial(std::move(c));
}

inline std::string format_complex(Complex z) { return fmt_double(z.real()) + "," + fmt_double(z.imag()); }

inline std::string format_polynomial(const Polynomial& p) {
  std::string s;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k) s += "; ";
    s += format_complex(p.coeffs()[k]);
  }
  return s;
}

class KeyValues {
 public:
  void set(const std::string& key, std::string value, int line) {
    if (values_.count(key)) throw ConfigError(key, "duplicate key (line " + std::to_string(line) + ")");
    values_[key] = std::move(value);
  }
  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }
  bool has_section(const std::string& section) const {
    for (const auto& [k, v] : values_)
      if (k.rfind(section + ".", 0) == 0) return true;
    return false;
  }
  const std::map<std::string, std::string>& remaining() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

template <typename T>
void require_range(const std::string& field, T v, T lo, T hi) {
  if (v < lo || v > hi) throw ConfigError(field, fmt::format("value {} outside [{}, {}]", v, lo, hi));
}

}  // namespace detail

inline std::string ExperimentConfig::canonical() const {
  using detail::format_complex;
  std::string s;
  s += "[family]\nbuiltin = " + family.builtin + "\n";
  s += fmt::format("degree = {}\n", family.degree);
  if (family.builtin == "custom") {
    for (std::size_t k = 0; k < family.numerator.size(); ++k)
      s += fmt::format("num.{} = {}\n", k, detail::format_polynomial(family.numerator[k]));
    for (std::size_t k = 0; k < family.denominator.size(); ++k)
      s += fmt::format("den.{} = {}\n", k, detail::format_polynomial(family.denominator[k]));
    s += "marked_num = " + detail::format_polynomial(family.marked_num) + "\n";
    s += "marked_den = " + detail::format_polynomial(family.marked_den) + "\n";
  }
  s += "[grid]\nlambda_min = " + format_complex(region.min) + "\nlambda_max = " + format_complex(region.max) + "\n";
  s += fmt::format("nx = {}\nny = {}\niter_budget = {}\ntol = {}\n", nx, ny, iter_budget, fmt_double(tol));
  s += fmt::format("[sampling]\ncount = {}\nseed = {}\n", sample_count, seed);
  s += fmt::format("[lyapunov]\nn_max = {}\n", n_max);
  s += fmt::format("[dimension]\nr_max = {}\nlevels = {}\n", fmt_double(r_max), levels);
  s += fmt::format("[output]\npotential_csv = {}\n", potential_csv ? "true" : "false");
  if (laminar) {
    s += fmt::format("[laminar]\nn = {}\n", laminar->n);
    if (laminar->beta) s += "beta = " + fmt_double(*laminar->beta) + "\n";
    s += fmt::format("subdivisions = {}\n", laminar->subdivisions);
    s += "image_min = " + format_complex(laminar->image_chart.min) + "\nimage_max = " + format_complex(laminar->image_chart.max) + "\n";
    if (laminar->region)
      s += "region_min = " + format_complex(laminar->region->min) + "\nregion_max = " + format_complex(laminar->region->max) + "\n";
    s += fmt::format("grid = {}\nmax_grid = {}\n", laminar->grid, laminar->max_grid);
  }
  return s;
}

/// Parses the sectioned "key = value" format. Unknown sections or keys,
/// duplicates, and out-of-range values raise ConfigError naming the field.
inline ExperimentConfig parse_config(std::string_view text) {
  using namespace detail;
  KeyValues kv;
  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  static const std::set<std::string> sections{"family", "grid", "sampling", "lyapunov", "dimension", "laminar", "output"};
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no), "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(line_no), "key outside any section");
    kv.set(section + "." + trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no);
  }

  const std::string builtin = kv.take("family.builtin").value_or("unicritical");
  if (builtin != "unicritical" && builtin != "lattes4" && builtin != "custom")
    throw ConfigError("family.builtin", "expected unicritical, lattes4 or custom");
  ExperimentConfig c = default_config(builtin);
  if (auto v = kv.take("family.degree")) {
    c.family.degree = static_cast<int>(parse_integer("family.degree", *v));
    require_range("family.degree", c.family.degree, 2, kMaxDegree);
    if (builtin == "lattes4" && c.family.degree != 4) throw ConfigError("family.degree", "lattes4 has degree 4");
  }
  if (builtin == "custom") {
    const int d = c.family.degree;
    for (int k = 0; k <= d; ++k) {
      for (const char* part : {"num", "den"}) {
        const std::string key = fmt::format("family.{}.{}", part, k);
        auto v = kv.take(key);
        Polynomial p = v ? parse_polynomial(key, *v) : Polynomial({Complex{}});
        (std::string(part) == "num" ? c.family.numerator : c.family.denominator).push_back(std::move(p));
      }
    }
    if (auto v = kv.take("family.marked_num")) c.family.marked_num = parse_polynomial("family.marked_num", *v);
    if (auto v = kv.take("family.marked_den")) c.family.marked_den = parse_polynomial("family.marked_den", *v);
  }

  if (auto v = kv.take("grid.lambda_min")) c.region.min = parse_complex("grid.lambda_min", *v);
  if (auto v = kv.take("grid.lambda_max")) c.region.max = parse_complex("grid.lambda_max", *v);
  if (!(c.region.width() > 0.0)) throw ConfigError("grid.lambda_max", "real part must exceed lambda_min");
  if (!(c.region.height() > 0.0)) throw ConfigError("grid.lambda_max", "imaginary part must exceed lambda_min");
  auto int_key = [&](const std::string& key, int& target, int lo, int hi) {
    if (auto v = kv.take(key)) {
      const long long x = parse_integer(key, *v);
      require_range<long long>(key, x, lo, hi);
      target = static_cast<int>(x);
    }
  };
  int_key("grid.nx", c.nx, 16, 16384);
  int_key("grid.ny", c.ny, 16, 16384);
  int_key("grid.iter_budget", c.iter_budget, 1, 10'000'000);
  if (auto v = kv.take("grid.tol")) {
    c.tol = parse_real("grid.tol", *v);
    if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("grid.tol", "must lie in (0, 1)");
  }
  int_key("sampling.count", c.sample_count, 1, 10'000'000);
  if (auto v = kv.take("sampling.seed")) {
    const long long x = parse_integer("sampling.seed", *v);
    if (x < 0) throw ConfigError("sampling.seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(x);
  }
  int_key("lyapunov.n_max", c.n_max, 10, 1'000'000);
  if (auto v = kv.take("dimension.r_max")) {
    c.r_max = parse_real("dimension.r_max", *v);
    if (!(c.r_max > 0.0)) throw ConfigError("dimension.r_max", "must be positive");
  }
  int_key("dimension.levels", c.levels, 2, 30);
  if (auto v = kv.take("output.potential_csv")) {
    if (*v != "true" && *v != "false") throw ConfigError("output.potential_csv", "expected true or false");
    c.potential_csv = *v == "true";
  }

  if (kv.has_section("laminar")) {
    LaminarConfig l;
    int_key("laminar.n", l.n, 0, 8);
    int_key("laminar.subdivisions", l.subdivisions, 1, 1024);
    int_key("laminar.grid", l.grid, 16, 8192);
    int_key("laminar.max_grid", l.max_grid, 16, 8192);
    if (l.max_grid < l.grid) throw ConfigError("laminar.max_grid", "must be >= laminar.grid");
    if (auto v = kv.take("laminar.beta")) {
      l.beta = parse_real("laminar.beta", *v);
      if (!(*l.beta > 0.0)) throw ConfigError("laminar.beta", "must be positive");
    }
    if (auto v = kv.take("laminar.image_min")) l.image_chart.min = parse_complex("laminar.image_min", *v);
    if (auto v = kv.take("laminar.image_max")) l.image_chart.max = parse_complex("laminar.image_max", *v);
    if (!(l.image_chart.width() > 0.0) || std::abs(l.image_chart.width() - l.image_chart.height()) > 1e-9 * l.image_chart.width())
      throw ConfigError("laminar.image_max", "image chart must be a nonempty square");
    auto rmin = kv.take("laminar.region_min");
    auto rmax = kv.take("laminar.region_max");
    if (rmin || rmax) {
      if (!rmin || !rmax) throw ConfigError("laminar.region_min", "region_min and region_max go together");
      l.region = Region{parse_complex("laminar.region_min", *rmin), parse_complex("laminar.region_max", *rmax)};
      if (!(l.region->width() > 0.0) || !(l.region->height() > 0.0)) throw ConfigError("laminar.region_max", "empty region");
    }
    c.laminar = l;
  }

  if (!kv.remaining().empty()) throw ConfigError(kv.remaining().begin()->first, "unknown key");
  if (builtin == "custom") {
    try {
      c.make_family();
    } catch (const Error& e) {
      throw ConfigError("family", e.what());
    }
  }
  return c;
}

}  // namespace biflab
