#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "hvdc/stf.hpp"
#include "oracles.hpp"

namespace hvdc::stf {
namespace {

using testing::bipolar_chain;

TableauElement line_element(std::string id, std::string a, std::string b, double r,
                            double gamma = 1.0) {
  return {std::move(id), ElementKind::Line, {std::move(a), std::move(b)},
          stamp_dc_line(r, gamma), gamma, r};
}

TEST(Stamp, LineMatchesClosedForm) {
  const auto s = stamp_dc_line(0.02, 1.0);
  EXPECT_EQ(s.f_u(0, 0), 1.0);
  EXPECT_EQ(s.f_u(0, 1), -1.0);
  EXPECT_EQ(s.f_u(1, 0), 0.0);
  EXPECT_EQ(s.f_i(0, 0), 0.0);
  EXPECT_EQ(s.f_i(0, 1), 0.02);
  EXPECT_EQ(s.f_i(1, 0), 1.0);
  EXPECT_EQ(s.f_i(1, 1), 1.0);
}

TEST(Stamp, LineOhmsLawExample) {
  // gamma = 1, R = 0.01, u = (1.00, 0.99): F_i i = -F_u u.
  const auto s = stamp_dc_line(0.01, 1.0);
  const Eigen::Vector2d u(1.00, 0.99);
  const Eigen::Vector2d i = s.f_i.fullPivLu().solve(-s.f_u * u);
  EXPECT_NEAR(i(0), 1.0, 1e-12);
  EXPECT_NEAR(i(1), -1.0, 1e-12);
}

TEST(Stamp, OutOfServiceLineCarriesNothing) {
  const auto s = stamp_dc_line(0.05, 0.0);
  const Eigen::Vector2d i = s.f_i.fullPivLu().solve(-s.f_u * Eigen::Vector2d(1.0, 0.3));
  EXPECT_EQ(i(0), 0.0);
  EXPECT_EQ(i(1), 0.0);
}

TEST(Stamp, AffineFormMatchesDirectStamp) {
  const auto a = stamp_dc_line_affine(0.03);
  for (double g : {0.0, 0.25, 1.0}) {
    const auto d = stamp_dc_line(0.03, g);
    EXPECT_EQ((a.at(g).f_u - d.f_u).norm(), 0.0);
    EXPECT_EQ((a.at(g).f_i - d.f_i).norm(), 0.0);
  }
  const auto sw = stamp_dc_switch_affine();
  EXPECT_EQ((sw.at(1.0).f_i - stamp_dc_switch(1.0).f_i).norm(), 0.0);
}

TEST(Stamp, SwitchIdentities) {
  const auto closed = stamp_dc_switch(1.0);
  // u_i = u_j and i_i = -i_j: a point satisfying both is a null vector.
  const Eigen::Vector2d u(0.98, 0.98), i(-0.5, 0.5);
  EXPECT_EQ((closed.f_u * u + closed.f_i * i).norm(), 0.0);
  const auto open = stamp_dc_switch(0.0);
  EXPECT_EQ(open.f_u.norm(), 0.0);
  EXPECT_EQ(open.f_i, Eigen::Matrix2d::Identity());
}

TEST(Incidence, OnePlusOnePerPort) {
  std::vector<std::string> nodes{"a", "b", "c"};
  std::vector<TableauElement> el{line_element("x", "a", "b", 0.1),
                                 line_element("y", "b", "c", 0.1)};
  const auto a = assemble_incidence(nodes, el);
  ASSERT_EQ(a.rows(), 3);
  ASSERT_EQ(a.cols(), 4);
  const Eigen::MatrixXd d(a);
  for (int p = 0; p < 4; ++p) EXPECT_EQ(d.col(p).sum(), 1.0);
  EXPECT_EQ(d(0, 0), 1.0);
  EXPECT_EQ(d(1, 1), 1.0);
  EXPECT_EQ(d(1, 2), 1.0);
  EXPECT_EQ(d(2, 3), 1.0);
}

TEST(Incidence, DanglingNodeNamesElement) {
  std::vector<std::string> nodes{"a"};
  std::vector<TableauElement> el{line_element("bad-line", "a", "zz", 0.1)};
  try {
    assemble_incidence(nodes, el);
    FAIL();
  } catch (const TopologyError& e) {
    EXPECT_NE(std::string(e.what()).find("bad-line"), std::string::npos);
  }
}

TEST(Tableau, MatchesNodalOracleOnRandomNetworks) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> inj(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + t % 8;
    const auto branches = testing::random_network(rng, n, n / 2);
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < n; ++k) ids.push_back("n" + std::to_string(k));
    std::vector<TableauElement> el;
    for (std::size_t b = 0; b < branches.size(); ++b) {
      el.push_back(line_element("l" + std::to_string(b), ids[branches[b].a],
                                ids[branches[b].b], branches[b].r));
    }
    TableauSystem sys(ids, el, {0});
    Eigen::VectorXd injection(static_cast<Eigen::Index>(n));
    for (auto& v : injection) v = inj(rng);
    const auto state = sys.solve(injection);
    const auto oracle = testing::nodal_voltages(n, branches, 0, injection);
    for (std::size_t k = 1; k < n; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      EXPECT_NEAR(state.node_voltage(kk), oracle(kk), 1e-9 * std::max(1.0, std::abs(oracle(kk))));
    }
    EXPECT_LE(tableau_residual(sys, state).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Tableau, ResidualRejectsBadDimensions) {
  TableauSystem sys({"a", "b"}, {line_element("x", "a", "b", 0.1)}, {0});
  TableauState bad;
  bad.node_voltage = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(tableau_residual(sys, bad), std::invalid_argument);
}

TEST(Tableau, FloatingInjectionThrows) {
  TableauSystem sys({"a", "b", "c"}, {line_element("x", "a", "b", 0.1)}, {0});
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(3);
  inj(2) = 0.5;
  EXPECT_THROW(sys.solve(inj), TopologyError);
}

TEST(GridTableau, GroundNodeAndGroundingElement) {
  const auto grid = bipolar_chain(0.01, 0.02, 0.5, 1000);
  const auto sys = assemble_tableau(grid, {});
  EXPECT_EQ(sys.node_count(), grid.dc_nodes().size() + 1);
  EXPECT_EQ(sys.node_ids().back(), std::string(kGroundNode));
  bool found = false;
  for (const auto& e : sys.elements()) {
    if (e.id == grounding_element_id("M1")) {
      found = true;
      EXPECT_EQ(e.kind, ElementKind::Grounding);
      EXPECT_NEAR(e.resistance_pu, 0.5 / 160.0, 1e-15);
    }
  }
  EXPECT_TRUE(found);
}

TEST(GridTableau, NeutralOffsetFollowsOhmsLaw) {
  // 0.1 pu drawn out of M2 returns through LM and the ground at M1.
  const auto grid = bipolar_chain(0.01, 0.02, 0.5, 1000);
  const auto sys = assemble_tableau(grid, {});
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.node_count()));
  inj(static_cast<Eigen::Index>(sys.node_index("M2"))) = -0.1;
  const auto st = sys.solve(inj);
  const double rg = 0.5 / 160.0;
  EXPECT_NEAR(st.node_voltage(static_cast<Eigen::Index>(sys.node_index("M1"))), -0.1 * rg, 1e-12);
  EXPECT_NEAR(st.node_voltage(static_cast<Eigen::Index>(sys.node_index("M2"))),
              -0.1 * (rg + 0.02), 1e-12);
}

TEST(GridTableau, SwitchingOutTheOnlyReturnThrows) {
  const auto grid = bipolar_chain(0.01, 0.02, 0.5, 1000);
  Topology t;
  t.set("LM", 0.0);
  EXPECT_EQ(ungrounded_neutral_stations(grid, t), std::vector<std::string>{"S2"});
  EXPECT_THROW(assemble_tableau(grid, t), TopologyError);
  EXPECT_TRUE(ungrounded_neutral_stations(grid, {}).empty());
}

TEST(GridTableau, DumpListsBlocks) {
  const auto sys = assemble_tableau(bipolar_chain(0.01, 0.02, 0.5, 1000), {});
  std::ostringstream os;
  sys.dump(os);
  const auto s = os.str();
  EXPECT_NE(s.find("LM"), std::string::npos);
  EXPECT_NE(s.find("GND"), std::string::npos);
}

}  // namespace
}  // namespace hvdc::stf
