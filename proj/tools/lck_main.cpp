#include "lck/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct RunFlags {
  std::string manifold = "hopf{n=2}";
  std::vector<std::string> suites;
  int samples = 100;
  std::uint64_t seed = 0;
  std::string mode = "fd";
  double fd_step = 1e-5;
  std::optional<double> tol_id;
  double tol_chain = 1e-3;
  double tol_ode = 1e-6;
  std::string json_path;
  bool text = false;
  std::vector<double> at;
  bool parallel = false;
  bool timing = false;
};

lck::SuiteConfig to_config(const RunFlags& f) {
  lck::SuiteConfig c;
  c.manifold = f.manifold;
  c.suites = f.suites;
  c.samples = f.samples;
  c.seed = f.seed;
  c.settings.mode = f.mode == "analytic" ? lck::DiffMode::analytic : lck::DiffMode::fd;
  c.settings.fd_step = f.fd_step;
  c.settings.tol_id_override = f.tol_id;
  c.settings.tol_chain = f.tol_chain;
  c.settings.tol_ode = f.tol_ode;
  if (!f.at.empty()) c.at = Eigen::Map<const lck::Vec>(f.at.data(), static_cast<Eigen::Index>(f.at.size()));
  c.parallel = f.parallel;
  c.timing = f.timing;
  return c;
}

// CLI11 only reads config files for the top-level app, so the subcommand applies its own.
void apply_config_file(CLI::App& run, const std::string& path) {
  for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.name == "config") throw lck::ParameterError("config files cannot nest");
    CLI::Option* op = run.get_option_no_throw("--" + item.name);
    if (op == nullptr) throw lck::ParameterError("unknown config key '" + item.fullname() + "'");
    if (op->count() > 0) continue;
    op->add_result(item.inputs);
    op->run_callback();
  }
}

int run_command(const RunFlags& f) {
  const lck::SuiteConfig config = to_config(f);
  const lck::Report report = lck::run(config);
  if (!f.json_path.empty()) {
    const std::string out = lck::emit_json(report);
    if (f.json_path == "-") {
      std::cout << out;
    } else {
      std::ofstream file(f.json_path, std::ios::binary);
      if (!file) throw lck::ParameterError("cannot write " + f.json_path);
      file << out;
    }
  }
  if (f.text || f.json_path.empty()) std::cout << lck::emit_text(report);
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of locally conformally Kaehler geometry"};
  app.require_subcommand(1);

  RunFlags f;
  CLI::App* run = app.add_subcommand("run", "Run verification suites on a manifold");
  std::string config_path;
  run->add_option("--config", config_path, "Flat key=value file with the same fields as the flags; flags win")
      ->check(CLI::ExistingFile);
  run->add_option("--manifold", f.manifold, "Zoo selector, e.g. hopf{n=3} or calabi{ell=sin,b=pi}");
  run->add_option("--suite", f.suites, "Suite names")
      ->check(CLI::IsMember(lck::known_suites()))
      ->expected(0, -1);
  run->add_option("--samples", f.samples)->check(CLI::PositiveNumber);
  run->add_option("--seed", f.seed);
  run->add_option("--mode", f.mode)->check(CLI::IsMember({"fd", "analytic"}));
  run->add_option("--fd-step", f.fd_step)->check(CLI::PositiveNumber);
  run->add_option("--tol-id", f.tol_id, "Identity tolerance (default 1e-4 fd, 1e-8 analytic)");
  run->add_option("--tol-chain", f.tol_chain)->check(CLI::PositiveNumber);
  run->add_option("--tol-ode", f.tol_ode)->check(CLI::PositiveNumber);
  auto* json = run->add_option("--json", f.json_path, "Write the JSON report here ('-' for stdout)");
  run->add_flag("--text", f.text, "Print the text summary")->excludes(json);
  run->add_option("--at", f.at, "Evaluate pointwise suites at this coordinate point only")->delimiter(',');
  run->add_flag("--parallel", f.parallel, "Sample points on worker threads (LCK_THREADS caps the count)");
  run->add_flag("--timing", f.timing, "Include wall time in the report");

  CLI::App* list = app.add_subcommand("list", "List manifold families and suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*list) {
      std::cout << "manifolds:\n";
      for (const std::string& m : lck::zoo_families()) std::cout << "  " << m << "\n";
      std::cout << "suites:\n";
      for (const std::string& s : lck::known_suites()) std::cout << "  " << s << "\n";
      return 0;
    }
    if (!config_path.empty()) apply_config_file(*run, config_path);
    return run_command(f);
  } catch (const CLI::Error& e) {
    std::cerr << "lck: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const lck::ParameterError& e) {
    std::cerr << "lck: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const lck::Error& e) {
    std::cerr << "lck: " << e.what() << "\n";
    return 2;
  }
}
