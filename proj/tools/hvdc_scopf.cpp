// Command-line front end: runs one study and writes its report tables.
//
// Exit codes: 0 optimal, 2 infeasible, 3 iteration limit, 4 input error.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hvdc/io.hpp"
#include "hvdc/stf.hpp"
#include "hvdc/studies.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code(hvdc::nlp::Status s) {
  switch (s) {
    case hvdc::nlp::Status::Optimal:
      return 0;
    case hvdc::nlp::Status::Infeasible:
      return 2;
    case hvdc::nlp::Status::IterationLimit:
      return 3;
  }
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Security-constrained OPF for multi-conductor HVDC grids"};
  app.set_version_flag("--version", std::string(HVDC_SCOPF_VERSION));

  std::string grid_path, config_path, study, out_dir, dump_tableau;
  std::optional<int> nb, threads;
  std::optional<double> offset_limit;
  std::optional<std::uint64_t> seed;
  bool no_offset_limit = false;
  app.add_option("--grid", grid_path, "grid JSON file")->required();
  app.add_option("--config", config_path, "study configuration JSON file");
  app.add_option("--study", study, "opf | scopf | sweep-nb | nls")
      ->check(CLI::IsMember({"opf", "scopf", "sweep-nb", "nls"}));
  app.add_option("--nb", nb, "symmetric stations per state (N_b)");
  app.add_option("--offset-limit-kv", offset_limit, "neutral offset limit in kV");
  app.add_flag("--no-offset-limit", no_offset_limit, "drop any configured offset limit");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "multi-start seed");
  app.add_option("--dump-tableau", dump_tableau,
                 "write the base-topology tableau (matrix market) to this file and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 4;
  }

  try {
    const auto grid = hvdc::io::load_grid(grid_path);
    if (!dump_tableau.empty()) {
      std::ofstream f(dump_tableau);
      hvdc::stf::assemble_tableau(grid, {}).dump(f);
      return f ? 0 : 4;
    }
    hvdc::io::StudyConfig config;
    std::string config_text;
    if (!config_path.empty()) {
      config = hvdc::io::load_config(config_path);
      config_text = slurp(config_path);
    } else if (study.empty()) {
      throw hvdc::InputError("give --config or --study");
    }
    // Flags override the configuration file.
    if (!study.empty()) {
      config = hvdc::io::parse_config(R"({"schema_version": 1, "study": ")" + study + R"("})");
      if (!config_path.empty()) {
        auto file = hvdc::io::load_config(config_path);
        file.study = config.study;
        config = file;
      }
    }
    if (nb) {
      config.nb = *nb;
      config.nb_range.reset();
    }
    if (offset_limit) config.offset_limit_kv = *offset_limit;
    if (no_offset_limit) config.offset_limit_kv.reset();
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (threads) config.threads = *threads;
    if (seed) config.multistart.seed = *seed;

    const hvdc::studies::Inputs inputs{grid_path, slurp(grid_path), config_path, config_text};
    const auto status = hvdc::studies::run_study(grid, config, inputs, std::cout);
    return exit_code(status);
  } catch (const hvdc::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const hvdc::stf::TopologyError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  }
}
