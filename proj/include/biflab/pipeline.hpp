#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include "json.hpp"

#include "biflab/config.hpp"
#include "biflab/dimension.hpp"
#include "biflab/error.hpp"
#include "biflab/io.hpp"
#include "biflab/laminar.hpp"
#include "biflab/lyapunov.hpp"
#include "biflab/measure.hpp"
#include "biflab/potential.hpp"

namespace biflab {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace artifact {
inline constexpr const char* kPotential = "potential.bin";
inline constexpr const char* kPotentialCsv = "potential.csv";
inline constexpr const char* kMeasure = "measure.bin";
inline constexpr const char* kSamples = "samples.csv";
inline constexpr const char* kExponents = "exponents.csv";
inline constexpr const char* kDimensionCsv = "dimension.csv";
inline constexpr const char* kDimension = "dimension.json";
inline constexpr const char* kVerdict = "verdict.json";
inline constexpr const char* kIslands = "islands.json";
inline constexpr const char* kError = "error.json";
}  // namespace artifact

struct Pipeline {
  ExperimentConfig cfg;
  fs::path out;
  unsigned threads = 0;

  fs::path path(const char* name) const { return out / name; }
  std::string digest() const { return cfg.digest(); }

  /// "biflab 0.1.0 config=<digest>[ source=<hash>]"
  std::string stamp(const std::string& source = {}) const {
    std::string s = fmt::format("{} {} config={}", kToolName, kToolVersion, digest());
    if (!source.empty()) s += " source=" + source;
    return s;
  }

  json json_header(const std::map<std::string, std::string>& sources = {}) const {
    json j;
    j["tool"] = std::string(kToolName);
    j["version"] = std::string(kToolVersion);
    j["config_digest"] = digest();
    for (const auto& [k, v] : sources) j["source_hash"][k] = v;
    return j;
  }

  void ensure_out() const {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create output directory " + out.string());
  }
};

namespace detail {

inline std::string stamp_field(const std::string& stamp, const std::string& key) {
  const std::string tag = key + "=";
  for (const auto& tok : split(stamp, ' '))
    if (tok.rfind(tag, 0) == 0) return tok.substr(tag.size());
  return {};
}

/// Refuses an artifact whose recorded source hash no longer matches the file on disk.
inline void check_source(const std::string& recorded, const fs::path& source, const std::string& what) {
  if (!fs::exists(source)) return;
  const std::string actual = file_hash(source);
  if (recorded != actual)
    throw Error(ErrorKind::StaleInput, what + " was produced from a different " + source.filename().string());
}

inline void require(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::StaleInput, "missing input " + p.string());
}

inline CsvTable read_csv(const fs::path& p) {
  require(p);
  return parse_csv(read_file(p));
}

inline std::string csv_source(const CsvTable& t) {
  for (const auto& c : t.comments) {
    std::string s = stamp_field(c, "source");
    if (!s.empty()) return s;
  }
  return {};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json load_json(const fs::path& p) {
  require(p);
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IoError, p.string() + ": " + e.what());
  }
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline std::vector<Complex> read_samples(const CsvTable& t) {
  const auto re = t.column("lambda_re"), im = t.column("lambda_im");
  std::vector<Complex> out;
  out.reserve(t.rows.size());
  for (const auto& r : t.rows) out.emplace_back(parse_double(r.at(re)), parse_double(r.at(im)));
  return out;
}

}  // namespace detail

// ---- stages --------------------------------------------------------------

inline PotentialGrid stage_potential(const Pipeline& p) {
  p.ensure_out();
  const Family fam = p.cfg.make_family();
  PotentialGrid g = potential_grid(fam, p.cfg.region, p.cfg.nx, p.cfg.ny, p.cfg.iter_budget, p.cfg.tol, p.threads);
  write_file(p.path(artifact::kPotential), encode_potential(g, p.stamp()));
  if (p.cfg.potential_csv) write_file(p.path(artifact::kPotentialCsv), potential_csv(g, p.stamp()));
  return g;
}

/// Writes measure.bin even when the grid turns out unusable, then raises UnusableGrid.
inline MeasureGrid stage_measure(const Pipeline& p) {
  const fs::path src = p.path(artifact::kPotential);
  detail::require(src);
  const std::string bytes = read_file(src);
  const DecodedPotential pot = decode_potential(bytes);
  MeasureGrid m = laplacian_measure_unchecked(pot.grid, p.threads);
  m.source_hash = sha256_hex(bytes);
  write_file(p.path(artifact::kMeasure), encode_measure(m, p.stamp(m.source_hash)));
  if (!m.usable())
    throw Error(ErrorKind::UnusableGrid, fmt::format("clipped mass fraction {} >= {}", m.clipped_fraction(), kMaxClippedFraction));
  return m;
}

inline MeasureGrid load_measure(const Pipeline& p) {
  const fs::path src = p.path(artifact::kMeasure);
  detail::require(src);
  DecodedMeasure dm = decode_measure(read_file(src));
  detail::check_source(dm.grid.source_hash, p.path(artifact::kPotential), "measure.bin");
  return std::move(dm.grid);
}

inline std::vector<Complex> stage_sample(const Pipeline& p) {
  const MeasureGrid m = load_measure(p);
  if (!m.usable()) throw Error(ErrorKind::UnusableGrid, "measure grid is unusable");
  const auto pts = sample(m, p.cfg.sample_count, p.cfg.seed);
  std::string out = fmt::format("# {} seed={}\n", p.stamp(file_hash(p.path(artifact::kMeasure))), p.cfg.seed);
  out += "index,lambda_re,lambda_im\n";
  for (std::size_t k = 0; k < pts.size(); ++k)
    out += fmt::format("{},{},{}\n", k, fmt_double(pts[k].real()), fmt_double(pts[k].imag()));
  write_file(p.path(artifact::kSamples), out);
  return pts;
}

inline std::vector<Complex> load_samples(const Pipeline& p, std::string* hash = nullptr) {
  const fs::path src = p.path(artifact::kSamples);
  const CsvTable t = detail::read_csv(src);
  detail::check_source(detail::csv_source(t), p.path(artifact::kMeasure), "samples.csv");
  if (hash) *hash = file_hash(src);
  return detail::read_samples(t);
}

inline std::vector<ExponentSeries> stage_lyapunov(const Pipeline& p) {
  std::string samples_hash;
  const auto pts = load_samples(p, &samples_hash);
  const Family fam = p.cfg.make_family();
  std::vector<ExponentSeries> series(pts.size());
  parallel_for(pts.size(), p.threads, [&](std::size_t k) { series[k] = exponent_series(fam, pts[k], p.cfg.n_max); });
  std::string out = fmt::format("# {}\n", p.stamp(samples_hash));
  out += "index,lambda_re,lambda_im,n,dyn,par,min_crit_dist,critical_hit,escape\n";
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string tail = fmt::format("{},{},{}", fmt_double(s.min_crit_dist), opt(s.critical_hit), opt(s.escape));
    for (std::size_t m = 0; m < s.n_values.size(); ++m)
      out += fmt::format("{},{},{},{},{},{},{}\n", k, fmt_double(s.lambda.real()), fmt_double(s.lambda.imag()),
                         s.n_values[m], fmt_double(s.dyn[m]), fmt_double(s.par[m]), tail);
    if (s.n_values.empty())
      out += fmt::format("{},{},{},,,,{}\n", k, fmt_double(s.lambda.real()), fmt_double(s.lambda.imag()), tail);
  }
  write_file(p.path(artifact::kExponents), out);
  return series;
}

inline PackingEstimate stage_dimension(const Pipeline& p) {
  const MeasureGrid m = load_measure(p);
  std::string samples_hash;
  const auto pts = load_samples(p, &samples_hash);
  const PackingEstimate est = upper_packing(m, pts, p.cfg.r_max, p.cfg.levels, p.threads);

  std::string csv = fmt::format("# {}\n", p.stamp(samples_hash));
  csv += "index,lambda_re,lambda_im,slope,limsup\n";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& e = est.per_sample[k];
    csv += fmt::format("{},{},{},{},{}\n", k, fmt_double(pts[k].real()), fmt_double(pts[k].imag()),
                       e ? fmt_double(e->slope) : "", e ? fmt_double(e->limsup_proxy) : "");
  }
  write_file(p.path(artifact::kDimensionCsv), csv);

  json j = p.json_header({{"samples", samples_hash}, {"measure", file_hash(p.path(artifact::kMeasure))}});
  j["Dstar"] = est.dstar;
  j["percentiles"] = {{"p50", est.p50}, {"p90", est.p90}, {"p95", est.p95}, {"p99", est.p99}};
  j["histogram"] = {{"bin_width", kHistogramBinWidth}, {"counts", est.histogram}};
  j["valid"] = est.valid;
  j["rejected"] = est.rejected;
  j["r_max"] = p.cfg.r_max;
  j["levels"] = p.cfg.levels;
  write_file(p.path(artifact::kDimension), detail::dump(j));
  return est;
}

struct VerdictSummary {
  double fraction_holds_half = 0.0;
  double fraction_holds_refined = 0.0;
  double dstar = 0.0;
  double clipped_fraction = 0.0;
  double median_dyn = 0.0;
  double mean_dyn = 0.0;
  double median_horizon = 0.0;  // median of the last n reached
  int evaluated = 0;
  int critical_hits = 0;
  int escaped = 0;
  int empty = 0;  // no usable step
  int transfer_findings = 0;
};

inline VerdictSummary stage_verify_ce(const Pipeline& p) {
  std::string samples_hash;
  const auto pts = load_samples(p, &samples_hash);
  const CsvTable ex = detail::read_csv(p.path(artifact::kExponents));
  if (detail::csv_source(ex) != samples_hash) throw Error(ErrorKind::StaleInput, "exponents.csv does not match samples.csv");
  const json dim = detail::load_json(p.path(artifact::kDimension));
  if (!dim.contains("source_hash") || dim["source_hash"].value("samples", std::string()) != samples_hash)
    throw Error(ErrorKind::StaleInput, "dimension.json does not match samples.csv");
  const MeasureGrid m = load_measure(p);
  const int d = p.cfg.make_family().degree;

  std::vector<ExponentSeries> series(pts.size());
  const auto ci = ex.column("index"), cn = ex.column("n"), cd = ex.column("dyn"), cp = ex.column("par"),
             cm = ex.column("min_crit_dist"), ch = ex.column("critical_hit"), ce = ex.column("escape");
  for (const auto& r : ex.rows) {
    const auto k = static_cast<std::size_t>(std::stoul(r.at(ci)));
    if (k >= series.size()) throw Error(ErrorKind::StaleInput, "exponents.csv has more samples than samples.csv");
    auto& s = series[k];
    s.lambda = pts[k];
    s.min_crit_dist = parse_double(r.at(cm));
    if (!r.at(ch).empty()) s.critical_hit = std::stoi(r.at(ch));
    if (!r.at(ce).empty()) s.escape = std::stoi(r.at(ce));
    if (r.at(cn).empty()) continue;
    s.n_values.push_back(std::stoi(r.at(cn)));
    s.dyn.push_back(parse_double(r.at(cd)));
    s.par.push_back(parse_double(r.at(cp)));
  }

  VerdictSummary v;
  v.dstar = dim.at("Dstar").get<double>();
  v.clipped_fraction = m.clipped_fraction();
  int half = 0, refined = 0;
  std::vector<double> last, reach;
  for (const auto& s : series) {
    v.critical_hits += s.critical_hit.has_value();
    v.escaped += s.escape.has_value();
    if (s.empty()) {
      ++v.empty;
      continue;
    }
    const CeVerdict cv = ce_verdict(s, d, v.dstar);
    half += cv.holds_half;
    refined += cv.holds_refined;
    last.push_back(s.last_dyn());
    reach.push_back(s.n_values.back());
    v.transfer_findings += transfer_direction_violated(s);
  }
  v.evaluated = static_cast<int>(last.size());
  if (v.evaluated > 0) {
    v.fraction_holds_half = static_cast<double>(half) / v.evaluated;
    v.fraction_holds_refined = static_cast<double>(refined) / v.evaluated;
    v.median_dyn = percentile(last, 0.5);
    v.mean_dyn = std::accumulate(last.begin(), last.end(), 0.0) / v.evaluated;
    v.median_horizon = percentile(reach, 0.5);
  }

  json j = p.json_header({{"samples", samples_hash},
                          {"exponents", file_hash(p.path(artifact::kExponents))},
                          {"dimension", file_hash(p.path(artifact::kDimension))}});
  j["fraction_holds_half"] = v.fraction_holds_half;
  j["fraction_holds_refined"] = v.fraction_holds_refined;
  j["Dstar"] = v.dstar;
  j["clipped_fraction"] = v.clipped_fraction;
  j["median_dyn"] = v.median_dyn;
  j["mean_dyn"] = v.mean_dyn;
  j["log_d"] = std::log(static_cast<double>(d));
  j["n_max"] = p.cfg.n_max;
  j["median_horizon"] = v.median_horizon;
  j["samples"] = {{"total", pts.size()}, {"evaluated", v.evaluated}, {"critical_hit", v.critical_hits}, {"escaped", v.escaped},
                  {"empty", v.empty}};
  j["transfer_findings"] = v.transfer_findings;
  write_file(p.path(artifact::kVerdict), detail::dump(j));
  return v;
}

inline json island_report_json(const IslandReport& r) {
  json j;
  j["n"] = r.n;
  j["beta"] = std::isnan(r.beta) ? json(nullptr) : json(r.beta);
  j["subdivisions"] = r.subdivisions;
  j["image_chart"] = {{"min", detail::complex_json(r.image_chart.min)}, {"max", detail::complex_json(r.image_chart.max)}};
  j["region"] = {{"min", detail::complex_json(r.region.min)}, {"max", detail::complex_json(r.region.max)}};
  j["grid"] = r.grid;
  j["R_n"] = r.ramifications ? json(*r.ramifications) : json(nullptr);
  j["d_n_expected"] = r.d_n_expected;
  j["total_degree"] = r.total_degree();
  j["island_degree"] = r.island_degree();
  json squares = json::array();
  for (const auto& sq : r.squares) {
    json s;
    s["id"] = sq.id;
    s["image_min"] = detail::complex_json(sq.image_min);
    s["image_max"] = detail::complex_json(sq.image_max);
    s["resolution_exceeded"] = sq.resolution_exceeded;
    json comps = json::array();
    for (const auto& c : sq.components)
      comps.push_back({{"seed", detail::complex_json(c.seed)},
                       {"degree", c.degree},
                       {"ramifications", c.ramifications},
                       {"is_island", c.is_island},
                       {"area", c.area},
                       {"cells", c.cells},
                       {"touches_region_boundary", c.touches_region_boundary}});
    s["components"] = std::move(comps);
    squares.push_back(std::move(s));
  }
  j["squares"] = std::move(squares);
  return j;
}

inline IslandReport stage_laminar(const Pipeline& p, std::optional<int> n_override = std::nullopt) {
  if (!p.cfg.laminar) throw ConfigError("laminar", "section [laminar] is required for this stage");
  p.ensure_out();
  const LaminarConfig& l = *p.cfg.laminar;
  const int n = n_override.value_or(l.n);
  if (n < 0 || n > 8) throw ConfigError("laminar.n", "value outside [0, 8]");
  const Family fam = p.cfg.make_family();
  IslandOptions opt;
  opt.subdivisions = l.subdivisions;
  opt.grid = l.grid;
  opt.max_grid = l.max_grid;
  opt.threads = p.threads;
  const Region region = p.cfg.laminar_region();
  IslandReport r = l.beta && n > 0 ? classify_islands_beta(fam, n, *l.beta, l.image_chart, region, opt)
                                   : classify_islands(fam, n, l.image_chart, region, opt);
  json j = p.json_header();
  j.update(island_report_json(r));
  if (r.ramifications && n > 0) j["bound_constant"] = *r.ramifications / std::pow(static_cast<double>(fam.degree), n);
  write_file(p.path(artifact::kIslands), detail::dump(j));
  return r;
}

/// potential -> measure -> sample -> lyapunov -> dimension -> verify-ce, plus laminar when configured.
inline VerdictSummary run_pipeline(const Pipeline& p) {
  stage_potential(p);
  stage_measure(p);
  stage_sample(p);
  stage_lyapunov(p);
  stage_dimension(p);
  VerdictSummary v = stage_verify_ce(p);
  if (p.cfg.laminar) stage_laminar(p);
  return v;
}

// ---- errors --------------------------------------------------------------

/// 2 for usage problems (config, arguments, missing or stale inputs, I/O), 1 otherwise.
inline int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::StaleInput:
    case ErrorKind::IoError:
      return 2;
    default:
      return 1;
  }
}

inline json error_json(const Error& e, const std::string& stage) {
  json j;
  j["tool"] = std::string(kToolName);
  j["version"] = std::string(kToolVersion);
  j["stage"] = stage;
  j["error"] = std::string(to_string(e.kind()));
  j["message"] = e.what();
  j["exit_code"] = exit_code(e.kind());
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
  return j;
}

}  // namespace biflab
