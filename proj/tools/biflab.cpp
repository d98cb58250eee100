// biflab command-line driver.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "biflab/biflab.hpp"

namespace {

struct Options {
  std::string config;
  std::string builtin;
  std::string out;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
};

std::string show(double v) { return fmt::format("{:.6g}", v); }

std::filesystem::path resolve_out(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv("BIFLAB_OUT"); env && *env) return env;
  return "biflab_out";
}

biflab::Pipeline make_pipeline(const Options& o) {
  biflab::Pipeline p;
  if (!o.config.empty()) {
    p.cfg = biflab::parse_config(biflab::read_file(o.config));
  } else if (!o.builtin.empty()) {
    if (o.builtin != "unicritical" && o.builtin != "lattes4")
      throw biflab::ConfigError("family.builtin", "expected unicritical or lattes4");
    p.cfg = biflab::default_config(o.builtin);
  } else {
    throw biflab::ConfigError("config", "pass --config PATH or --builtin NAME");
  }
  if (o.seed) p.cfg.seed = *o.seed;
  p.out = resolve_out(o);
  p.threads = o.threads;
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"biflab: bifurcation measure experiments"};
  app.set_version_flag("--version", std::string(biflab::kToolVersion));
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "experiment config file")->option_text("PATH");
  app.add_option("--builtin", o.builtin, "use the default config of a builtin family (unicritical, lattes4)");
  app.add_option("--out", o.out, "output directory (default $BIFLAB_OUT or ./biflab_out)")->option_text("DIR");
  app.add_option("--threads", o.threads, "worker cap, 0 = hardware concurrency");
  app.add_option("--seed", o.seed, "overrides sampling.seed");
  app.add_option("--n", o.n, "iterate for the laminar stage");

  std::string stage;
  for (const char* name : {"potential", "measure", "sample", "lyapunov", "dimension", "laminar", "verify-ce", "run"})
    app.add_subcommand(name)->fallthrough()->callback([&stage, name] { stage = name; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const biflab::Pipeline pipeline = make_pipeline(o);
    const biflab::Pipeline* p = &pipeline;
    if (stage == "potential") {
      const auto g = biflab::stage_potential(*p);
      std::cout << "potential: " << g.nx << "x" << g.ny << " nodes, " << g.nonconverged << " non-converged\n";
    } else if (stage == "measure") {
      const auto m = biflab::stage_measure(*p);
      std::cout << "measure: total_mass " << show(m.total_mass) << ", clipped fraction "
                << show(m.clipped_fraction()) << "\n";
    } else if (stage == "sample") {
      std::cout << "sample: " << biflab::stage_sample(*p).size() << " samples\n";
    } else if (stage == "lyapunov") {
      std::cout << "lyapunov: " << biflab::stage_lyapunov(*p).size() << " series\n";
    } else if (stage == "dimension") {
      std::cout << "dimension: Dstar " << show(biflab::stage_dimension(*p).dstar) << "\n";
    } else if (stage == "laminar") {
      const auto r = biflab::stage_laminar(*p, o.n);
      std::cout << "laminar: n " << r.n << ", R_n " << (r.ramifications ? std::to_string(*r.ramifications) : "n/a")
                << ", island degree " << r.island_degree() << "/" << r.total_degree() << "\n";
    } else {
      const auto v = stage == "run" ? biflab::run_pipeline(*p) : biflab::stage_verify_ce(*p);
      std::cout << "fraction_holds_half " << show(v.fraction_holds_half) << "\n"
                << "fraction_holds_refined " << show(v.fraction_holds_refined) << "\n"
                << "Dstar " << show(v.dstar) << "\n"
                << "clipped_fraction " << show(v.clipped_fraction) << "\n";
    }
    return 0;
  } catch (const biflab::Error& e) {
    const auto j = biflab::error_json(e, stage);
    std::cerr << j.dump() << "\n";
    const std::filesystem::path dir = resolve_out(o);
    try {
      std::filesystem::create_directories(dir);
      biflab::write_file(dir / biflab::artifact::kError, biflab::detail::dump(j));
    } catch (const std::exception&) {
    }
    return biflab::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"Internal\",\"message\":" << biflab::json(e.what()).dump() << "}\n";
    return 1;
  }
}
