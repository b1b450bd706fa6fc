#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "tsb/runner.hpp"

int main(int argc, char** argv) {
  // pin the blas backend to one thread; parallelism lives in the work queue
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  setenv("OMP_NUM_THREADS", "1", 0);

  CLI::App app{"two-scale superlattice band solver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  int threads = 1;

  const std::vector<std::string> names = {"micro",   "constants",   "bands",
                                          "compare", "asymptotics", "checks"};
  const std::vector<std::string> blurbs = {
      "locate and gauge the conical degeneracy",
      "extract closed-form model constants and validate block structure",
      "emit band diagrams along the standard path",
      "match the model cone branch against the exact spectrum",
      "error sweeps over momentum scale and potential strength",
      "self-consistency checks: weak form, folding, symmetry, spans"};
  for (size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", config_path, "path to a key=value config file");
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_option("--threads", threads, "worker thread count")
        ->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    tsb::RunConfig cfg;
    if (!config_path.empty()) cfg = tsb::load_config(config_path);
    if (!out_override.empty()) cfg.output_dir = out_override;
    const std::string command = app.get_subcommands().front()->get_name();
    return tsb::run_command(command, cfg, threads, std::cout);
  } catch (const tsb::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
