#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hvdc/io.hpp"
#include "hvdc/minlp.hpp"

namespace hvdc::opf {
namespace {

const Grid& shipped() {
  static const Grid g = io::load_grid(HVDC_DATA_DIR "/meshed_dc_grid.json");
  return g;
}

OpfOptions outage_case(int nb, bool faulted_flag = true) {
  OpfOptions o;
  o.outage = "Cb-A1+";
  o.nb = nb;
  o.faulted_counts_as_asymmetric = faulted_flag;
  return o;
}

// Neutral stations with a path to ground once `open` lines are removed;
// breadth-first search over the neutral conductors only.
bool all_neutrals_grounded(const Grid& g, const std::set<std::string>& open) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& l : g.dc_lines()) {
    if (l.conductor_role != ConductorRole::Neutral || open.contains(l.id)) continue;
    adj[l.from_node].push_back(l.to_node);
    adj[l.to_node].push_back(l.from_node);
  }
  for (auto s : g.bipolar_stations()) {
    std::set<std::string> seen{g.converter_stations()[s].neutral_node};
    std::vector<std::string> todo(seen.begin(), seen.end());
    bool ok = false;
    while (!todo.empty()) {
      const auto n = todo.back();
      todo.pop_back();
      if (g.dc_nodes()[*g.node_index(n)].grounded) ok = true;
      for (const auto& m : adj[n]) {
        if (seen.insert(m).second) todo.push_back(m);
      }
    }
    if (!ok) return false;
  }
  return true;
}

TEST(Enumeration, FaultedStationCountsAsAsymmetric) {
  const auto& g = shipped();
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(3))).size(), 1u);
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(2))).size(), 3u);
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(1))).size(), 3u);
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(0))).size(), 1u);
  EXPECT_TRUE(enumerate_assignments(build_opf(g, outage_case(4))).empty());
}

TEST(Enumeration, FaultedStationFreeWhenFlagOff) {
  const auto& g = shipped();
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(3, false))).size(), 4u);
  EXPECT_EQ(enumerate_assignments(build_opf(g, outage_case(4, false))).size(), 1u);
}

TEST(Enumeration, CatalogueOfFourWithCountRow) {
  const auto p = build_opf(shipped(), outage_case(3));
  ASSERT_EQ(p.catalogue().size(), 4u);
  EXPECT_EQ(p.catalogue()[0].label(), "beta[0,Cb-A1]");
  EXPECT_EQ(p.catalogue()[0].fixed, 0);
  const auto a = enumerate_assignments(p);
  EXPECT_EQ(a[0].values, (std::vector<int>{0, 1, 1, 1}));
}

TEST(Enumeration, GuardMatchesConnectivityOracle) {
  auto o = outage_case(0);
  o.nls_candidates = {"LD-6", "LD-7", "LD-9"};
  const auto p = build_opf(shipped(), o);
  std::size_t expected = 0;
  for (int mask = 0; mask < 8; ++mask) {
    std::set<std::string> open;
    for (int k = 0; k < 3; ++k) {
      if (!((mask >> k) & 1)) open.insert(o.nls_candidates[static_cast<std::size_t>(k)]);
    }
    if (all_neutrals_grounded(shipped(), open)) ++expected;
  }
  EXPECT_EQ(expected, 7u);
  EXPECT_EQ(enumerate_assignments(p).size(), expected);
}

TEST(Enumeration, CapRecommendsBranchAndBound) {
  auto o = outage_case(0);
  o.nls_candidates = {"LD-6", "LD-7", "LD-9"};
  const auto p = build_opf(shipped(), o);
  try {
    enumerate_assignments(p, 4);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("branch-and-bound"), std::string::npos);
  }
}

TEST(Guard, ShippedGridCases) {
  const auto& g = shipped();
  stf::Topology t;
  t.set("LD-7", 0).set("LD-9", 0);
  EXPECT_TRUE(nls_guard(g, t));
  EXPECT_TRUE(nls_guard(g, {}));
  stf::Topology cut;
  cut.set("LD-1", 0).set("LD-2", 0).set("LD-9", 0);
  const auto r = nls_guard(g, cut);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.ungrounded, std::vector<std::string>{"Cb-A1"});
}

TEST(Solve, TwoBinaryToyIsMinimumOfTable) {
  // Both betas free (at-least 0): four assignments, each solved directly.
  const auto grid = testing::bipolar_chain(0.01, 0.02, 0.5, 1500);
  OpfOptions o;
  o.outage = "S1a";
  o.nb = 0;
  o.nb_mode = NbMode::AtLeast;
  o.faulted_counts_as_asymmetric = false;
  const auto p = build_opf(grid, o);
  ASSERT_EQ(enumerate_assignments(p).size(), 4u);
  double best = 1e300;
  for (const auto& a : enumerate_assignments(p)) {
    const auto inst = p.instantiate(a);
    const auto s = nlp::solve(inst.problem, inst.flat_start);
    if (s.status == nlp::Status::Optimal) best = std::min(best, p.currency(s.objective));
  }
  MinlpOptions mo;
  mo.multistart.starts = 1;
  const auto sol = solve_minlp(p, mo);
  ASSERT_EQ(sol.status, nlp::Status::Optimal);
  EXPECT_NEAR(sol.objective, best, 1e-6 * best);
  EXPECT_EQ(sol.table.size(), 4u);
  mo.strategy = Strategy::BranchAndBound;
  const auto bb = solve_minlp(p, mo);
  ASSERT_EQ(bb.status, nlp::Status::Optimal);
  EXPECT_NEAR(bb.objective, best, 1e-6 * best);
}

TEST(Solve, BranchAndBoundMatchesEnumerationOnShippedSweep) {
  MinlpOptions e;
  e.multistart.starts = 1;
  auto b = e;
  b.strategy = Strategy::BranchAndBound;
  for (int nb : {2, 1}) {
    const auto p = build_opf(shipped(), outage_case(nb));
    const auto se = solve_minlp(p, e);
    const auto sb = solve_minlp(p, b);
    ASSERT_EQ(se.status, nlp::Status::Optimal);
    ASSERT_EQ(sb.status, nlp::Status::Optimal);
    EXPECT_NEAR(sb.objective, se.objective, 1e-6 * se.objective) << "nb=" << nb;
  }
}

TEST(Solve, ThreadsDoNotChangeTheResult) {
  auto o = outage_case(1);
  const auto p = build_opf(shipped(), o);
  MinlpOptions one;
  one.multistart.starts = 1;
  auto three = one;
  three.threads = 3;
  std::ostringstream a, b;
  write_assignment_table(a, p, solve_minlp(p, one));
  write_assignment_table(b, p, solve_minlp(p, three));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Solve, NoValidAssignmentIsInfeasibleWithReason) {
  const auto p = build_opf(shipped(), outage_case(4));
  const auto s = solve_minlp(p, {});
  EXPECT_EQ(s.status, nlp::Status::Infeasible);
  ASSERT_FALSE(s.diagnostics.empty());
  EXPECT_NE(s.diagnostics[0].find("Cb-A1"), std::string::npos);
}

TEST(Solve, DescribeAndSets) {
  auto o = outage_case(2);
  o.nls_candidates = {"LD-6"};
  const auto p = build_opf(shipped(), o);
  const Assignment a{{0, 1, 0, 1, 0}};
  EXPECT_EQ(describe(p, a), "s0:beta=Cb-A1:0,Cb-B1:1,Cb-C2:0,Cb-D1:1|gamma=LD-6:0");
  EXPECT_EQ(asymmetric_set(p, a, 0), (std::vector<std::string>{"Cb-A1", "Cb-C2"}));
  EXPECT_EQ(disconnected_lines(p, a, 0), std::vector<std::string>{"LD-6"});
}

}  // namespace
}  // namespace hvdc::opf
