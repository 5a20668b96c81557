#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "hvdc/io.hpp"
#include "hvdc/studies.hpp"

namespace hvdc::studies {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("hvdc_tests_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Both neutrals grounded: a balanced station can sit next to an unbalanced one.
Grid grounded_chain() {
  auto d = testing::bipolar_chain(0.01, 0.02, 0.5, 1500).data();
  d.dc_nodes[5].grounded = true;
  d.dc_nodes[5].grounding_resistance_ohm = 1.0;
  return Grid(d);
}

io::StudyConfig chain_sweep(const fs::path& out) {
  io::StudyConfig c;
  c.study = io::Study::SweepNb;
  c.outage = "S1a";
  c.nb_range = std::pair{0, 0};
  c.multistart.starts = 2;
  c.out_dir = out.string();
  return c;
}

TEST(Studies, SweepOutputsAreDeterministic) {
  const auto grid = grounded_chain();
  std::ostringstream log;
  const auto a = scratch("det");
  const std::vector<std::string> files{"summary.csv", "stations.csv", "offsets.csv",
                                       "assignments.csv", "solver.log", "manifest.json"};
  EXPECT_EQ(run_study(grid, chain_sweep(a), {}, log), nlp::Status::Optimal);
  std::vector<std::string> first;
  for (const auto& f : files) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    first.push_back(slurp(a / f));
  }
  EXPECT_EQ(run_study(grid, chain_sweep(a), {}, log), nlp::Status::Optimal);
  for (std::size_t k = 0; k < files.size(); ++k) EXPECT_EQ(slurp(a / files[k]), first[k]) << files[k];
  const auto summary = slurp(a / "summary.csv");
  EXPECT_EQ(summary.rfind("case,nb,offset_limit_kv,nls,status,objective", 0), 0u);
}

TEST(Studies, NoOutageAllSymmetricHasZeroOffsets) {
  const auto grid = testing::bipolar_chain(0.01, 0.02, 0.5, 1500);
  io::StudyConfig c;
  c.multistart.starts = 1;
  const auto r = run_opf(grid, c);
  ASSERT_EQ(r.solution.status, nlp::Status::Optimal);
  EXPECT_LE(r.max_offset_kv(), 1e-8 * 400);
}

TEST(Studies, ScopfCostsAtLeastTheBaseCaseOpf) {
  const auto grid = testing::bipolar_chain(0.01, 0.02, 0.5, 1500);
  io::StudyConfig opf;
  opf.multistart.starts = 1;
  const auto single = run_opf(grid, opf);
  io::StudyConfig sc;
  sc.study = io::Study::Scopf;
  sc.contingencies = {"S1a"};
  sc.nb = 0;
  sc.multistart.starts = 1;
  const auto coupled = run_scopf(grid, sc);
  ASSERT_EQ(coupled.size(), 1u);
  ASSERT_EQ(single.solution.status, nlp::Status::Optimal);
  ASSERT_EQ(coupled[0].solution.status, nlp::Status::Optimal);
  EXPECT_GE(coupled[0].solution.objective, single.solution.objective * (1 - 1e-9));
}

TEST(Studies, ScopfReserveVariablesAndCoupling) {
  auto d = testing::bipolar_chain(0.01, 0.02, 0.5, 1500).data();
  d.generators.push_back(Generator{"G2", "bus2", 70.0, 5.0, 1.0, 500.0, 0.0, false});
  const Grid grid(d);
  const std::vector<std::string> k{"S1a", "S1b", "S2a", "S2b"};
  opf::OpfOptions o;
  o.nb = 0;
  const auto p = opf::build_scopf(grid, {k}, o);
  const auto all = opf::enumerate_assignments(p);
  ASSERT_EQ(all.size(), 1u);
  const auto inst = p.instantiate(all.front());
  int up = 0, down = 0, coupling = 0;
  for (const auto& v : inst.problem.variables()) {
    up += v.name.rfind("reserve_up.", 0) == 0;
    down += v.name.rfind("reserve_down.", 0) == 0;
  }
  for (const auto& c : inst.problem.constraints()) {
    if (c.name.find(".reserve_up.") != std::string::npos ||
        c.name.find(".reserve_down.") != std::string::npos) {
      ++coupling;
    }
  }
  EXPECT_EQ(up, 2);
  EXPECT_EQ(down, 2);
  EXPECT_EQ(coupling, 2 * 2 * 4);
  EXPECT_THROW(opf::build_scopf(grid, {}, {}), InputError);
  EXPECT_THROW(opf::build_scopf(grid, {{"S1a", "S1a"}}, {}), InputError);
}

// The command-line tool, run as a child process.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(HVDC_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("cli");
  const auto grid_path = dir / "grid.json";
  io::save_grid(testing::bipolar_chain(0.01, 0.02, 0.5, 1500), grid_path);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };
  const auto g = "--grid " + grid_path.string() + " --out-dir " + (dir / "out").string();
  EXPECT_EQ(run_cli(g), 4);  // neither --study nor --config
  EXPECT_EQ(run_cli(g + " --study opf"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  // N_b = 2 with a faulted station: no valid assignment.
  const auto infeasible = write("inf.json", R"({"schema_version": 1, "study": "opf",
      "outage": "S1a", "nb": 2})");
  EXPECT_EQ(run_cli(g + " --config " + infeasible), 2);
  const auto short_run = write("iter.json", R"({"schema_version": 1, "study": "opf",
      "solver": {"max_iter": 1}, "multistart": {"starts": 1}})");
  EXPECT_EQ(run_cli(g + " --config " + short_run), 3);
  EXPECT_EQ(run_cli("--grid " + (dir / "missing.json").string()), 4);
  EXPECT_EQ(run_cli(g + " --study opf --nb 7"), 4);
  EXPECT_EQ(run_cli("--bogus-flag"), 4);
  EXPECT_EQ(run_cli("--version"), 0);
}

}  // namespace
}  // namespace hvdc::studies
