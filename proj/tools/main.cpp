#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vflow/driver.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vflow::ParseError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-phase compressible flow simulator and certifier"};
  app.require_subcommand(1);

  std::string scenario_path, manifest_path, out_dir = "out";
  int n_tests = 50, levels = 3;
  std::uint64_t seed = 1;
  std::vector<double> eps_list{1.0, 0.1, 0.01};

  auto* sim = app.add_subcommand("simulate", "run a scenario");
  sim->add_option("scenario", scenario_path)->required();
  sim->add_option("--out", out_dir);

  auto* cert = app.add_subcommand("certify", "audit a snapshot series");
  cert->add_option("manifest", manifest_path)->required();
  cert->add_option("--tests", n_tests);
  cert->add_option("--seed", seed);

  auto* conv = app.add_subcommand("convergence", "refinement study");
  conv->add_option("scenario", scenario_path)->required();
  conv->add_option("--levels", levels)->check(CLI::Range(2, 6));
  conv->add_option("--out", out_dir);

  auto* prox = app.add_subcommand("prox-table", "envelope diagnostics");
  prox->add_option("scenario", scenario_path)->required();
  prox->add_option("--eps", eps_list);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const vflow::Scenario scn = vflow::parse_scenario(slurp(scenario_path));
      const vflow::SimulateResult res = vflow::cmd_simulate(scn, out_dir);
      if (res.exit_code == 3)
        std::cerr << "topology change at t = " << res.stop_time
                  << "; series valid up to stop\n";
      return res.exit_code;
    }
    if (cert->parsed()) {
      const int rc = vflow::cmd_certify(manifest_path, n_tests, seed);
      std::cout << (rc == 0 ? "certification PASS\n" : "certification FAIL\n");
      return rc;
    }
    if (conv->parsed()) {
      const vflow::Scenario scn = vflow::parse_scenario(slurp(scenario_path));
      const vflow::ConvergenceResult res =
          vflow::convergence_study(scn, levels);
      std::filesystem::create_directories(out_dir);
      vflow::detail::write_file_atomic(out_dir + "/convergence.csv",
                                       vflow::encode_convergence_csv(res));
      std::cout << vflow::encode_convergence_csv(res);
      return 0;
    }
    if (prox->parsed()) {
      const vflow::Scenario scn = vflow::parse_scenario(slurp(scenario_path));
      std::cout << vflow::prox_table(*scn.f1, eps_list);
      return 0;
    }
  } catch (const vflow::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const vflow::MalformedTrajectory& e) {
    std::cerr << "malformed series: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
