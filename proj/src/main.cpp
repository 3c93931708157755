#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "nsfbox/config.hpp"
#include "nsfbox/experiments.hpp"
#include "nsfbox/io.hpp"
#include "nsfbox/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIdentity = 4;

struct CliOpts {
  std::string config_path;
  std::string output_dir;  // empty: use config value
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool quiet = false;
};

std::uint64_t effective_seed(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  return opt.seed_given ? opt.seed : cfg.seed;
}

std::string output_dir(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  return opt.output_dir.empty() ? cfg.output_dir : opt.output_dir;
}

template <int D>
int do_run(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  using namespace nsfbox;
  const std::string dir = output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  Problem<D> prob = build_problem<D>(cfg, effective_seed(cfg, opt), opt.threads);
  RunResult<D> res = drive_run<D>(cfg, prob, nullptr, cfg.vtk_every > 0 ? dir : std::string());
  if (cfg.csv_every > 0) write_diagnostics_csv(res.rows, dir + "/diagnostics.csv");
  {
    std::ofstream out(dir + "/config_resolved.txt", std::ios::binary);
    out << serialize_config(cfg);
  }
  if (!res.solver_ok) {
    std::cerr << "solver failure: " << res.message << "\n";
    return kExitSolver;
  }
  if (!res.identities_ok) {
    std::cerr << "identity failure: " << res.message << "\n";
    return kExitIdentity;
  }
  if (!opt.quiet) {
    std::cout << "completed " << res.accepted_steps << " steps to t = "
              << format_shortest(res.final_state.t) << "\n";
    std::cout << "  mass " << format_shortest(total_mass<D>(res.final_state, prob.grid))
              << ", rho in [" << format_shortest(res.monitor.min_rho) << ", "
              << format_shortest(res.monitor.max_rho) << "], theta in ["
              << format_shortest(res.monitor.min_theta) << ", "
              << format_shortest(res.monitor.max_theta) << "]\n";
    if (cfg.check_identities)
      std::cout << "  worst balance residual (relative): "
                << format_shortest(res.max_identity_rel) << "\n";
    if (cfg.csv_every > 0) std::cout << "  wrote " << dir << "/diagnostics.csv\n";
  }
  return kExitOk;
}

template <int D>
int do_verify(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  using namespace nsfbox;
  Problem<D> prob = build_problem<D>(cfg, effective_seed(cfg, opt), opt.threads);
  VerifyReport rep = verify_problem<D>(cfg, prob, effective_seed(cfg, opt));
  if (!opt.quiet || !rep.ok)
    for (const std::string& line : rep.lines) std::cout << line << "\n";
  if (!rep.ok) {
    std::cerr << "verification failed\n";
    return kExitIdentity;
  }
  if (!opt.quiet) std::cout << "verification passed\n";
  return kExitOk;
}

template <int D>
int do_ref(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  using namespace nsfbox;
  const std::string dir = output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  ReferenceTrajectory<D> ref =
      generate_reference<D>(cfg, effective_seed(cfg, opt), opt.threads);
  std::ofstream index(dir + "/ref_index.txt", std::ios::binary);
  index << "n = " << ref.grid.n << "\n";
  index << "dt_snap = " << format_shortest(ref.dt_snap) << "\n";
  index << "count = " << ref.states.size() << "\n";
  for (std::size_t k = 0; k < ref.states.size(); ++k) {
    std::string num = std::to_string(k);
    while (num.size() < 6) num.insert(num.begin(), '0');
    write_state_bin<D>(ref.states[k], ref.grid, dir + "/ref_" + num + ".bin");
  }
  if (!opt.quiet)
    std::cout << "wrote " << ref.states.size() << " reference snapshots (n = " << ref.grid.n
              << ") to " << dir << "\n";
  return kExitOk;
}

template <int D>
int do_study(const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  using namespace nsfbox;
  const std::string dir = output_dir(cfg, opt);
  std::filesystem::create_directories(dir);
  EOCTable table = convergence_study<D>(cfg, effective_seed(cfg, opt), opt.threads);
  {
    std::ofstream out(dir + "/eoc.csv", std::ios::binary);
    out << eoc_table_csv(table);
  }
  const std::string text = eoc_table_text(table);
  {
    std::ofstream out(dir + "/eoc.txt", std::ios::binary);
    out << text;
  }
  if (!opt.quiet) std::cout << text;
  return kExitOk;
}

template <int D>
int dispatch(const std::string& cmd, const nsfbox::RunConfig& cfg, const CliOpts& opt) {
  if (cmd == "run") return do_run<D>(cfg, opt);
  if (cmd == "verify") return do_verify<D>(cfg, opt);
  if (cmd == "ref") return do_ref<D>(cfg, opt);
  return do_study<D>(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-volume solver for a heat-conducting compressible gas with "
               "penalized solid obstacles on a periodic box"};
  app.require_subcommand(1);
  CliOpts opt;

  const auto add_common = [&](CLI::App* sc) {
    sc->add_option("config", opt.config_path, "configuration file")->required();
    sc->add_option("--output-dir", opt.output_dir, "override the configured output directory");
    sc->add_option("--seed", opt.seed, "override the configured random seed")
        ->each([&](const std::string&) { opt.seed_given = true; });
    sc->add_option("--threads", opt.threads, "assembly parallelism")
        ->check(CLI::Range(1, 64));
    sc->add_flag("--quiet", opt.quiet, "suppress progress output");
  };
  add_common(app.add_subcommand("run", "time-step a configured problem"));
  add_common(app.add_subcommand("study", "convergence sweep against a fine reference"));
  add_common(app.add_subcommand("verify", "operator identities and one-step balance checks"));
  add_common(app.add_subcommand("ref", "generate and store a fine-grid reference"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  nsfbox::ConfigResult parsed = nsfbox::parse_config_file(opt.config_path);
  if (!parsed.ok()) {
    std::cerr << "config errors in '" << opt.config_path << "':\n";
    for (const std::string& e : parsed.errors) std::cerr << "  " << e << "\n";
    return kExitConfig;
  }

  try {
    if (parsed.config.dim == 2) return dispatch<2>(cmd, parsed.config, opt);
    return dispatch<3>(cmd, parsed.config, opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
