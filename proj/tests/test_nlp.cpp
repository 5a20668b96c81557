#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hvdc/nlp.hpp"
#include "hvdc/opf.hpp"

namespace hvdc::nlp {
namespace {

// Central differences of the constraint vector, one column at a time.
std::vector<std::vector<double>> fd_jacobian(const NlpProblem& p, std::vector<double> x,
                                             double h) {
  std::vector<std::vector<double>> cols(p.n(), std::vector<double>(p.m()));
  std::vector<double> gp(p.m()), gm(p.m());
  for (std::size_t k = 0; k < p.n(); ++k) {
    const double x0 = x[k];
    x[k] = x0 + h;
    p.constraints(x, gp);
    x[k] = x0 - h;
    p.constraints(x, gm);
    x[k] = x0;
    for (std::size_t r = 0; r < p.m(); ++r) cols[k][r] = (gp[r] - gm[r]) / (2 * h);
  }
  return cols;
}

std::vector<double> random_point(const NlpProblem& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(p.n());
  for (std::size_t k = 0; k < p.n(); ++k) {
    const auto& v = p.variables()[k];
    const double lo = v.lower > -kBoundInf ? v.lower : -2.0;
    const double hi = v.upper < kBoundInf ? v.upper : 2.0;
    x[k] = lo + (hi - lo) * u(rng);
  }
  return x;
}

TEST(NlpBuilder, RejectsUnknownVariable) {
  NlpBuilder b;
  b.add_variable("x", 0, 1);
  Constraint c;
  c.expr.add(3, 1.0);
  b.add_constraint(c);
  EXPECT_THROW(b.build(), std::invalid_argument);
}

TEST(NlpBuilder, TightenIntersectsBounds) {
  NlpBuilder b;
  const auto x = b.add_variable("x", -1, 1);
  b.tighten_bounds(x, 0, 5);
  EXPECT_EQ(b.variable(x).lower, 0.0);
  EXPECT_EQ(b.variable(x).upper, 1.0);
}

TEST(NlpProblem, PowerRowJacobianIsProductRule) {
  // p - u i = 0: jacobian (1, -i, -u).
  NlpBuilder b;
  const auto p = b.add_variable("p", -kInf, kInf);
  const auto u = b.add_variable("u", -kInf, kInf);
  const auto i = b.add_variable("i", -kInf, kInf);
  Constraint c;
  c.expr.add(p, 1.0).add(u, i, -1.0);
  b.add_constraint(c);
  const auto prob = b.build();
  const std::vector<double> x{0.3, 1.02, -0.7};
  std::vector<double> jac(prob.jacobian_pattern().size());
  prob.jacobian(x, jac);
  ASSERT_EQ(prob.jacobian_pattern().size(), 3u);
  EXPECT_DOUBLE_EQ(jac[0], 1.0);
  EXPECT_DOUBLE_EQ(jac[1], 0.7);
  EXPECT_DOUBLE_EQ(jac[2], -1.02);
  EXPECT_EQ(prob.variable_index("u"), 1u);
  EXPECT_THROW(prob.variable_index("w"), std::out_of_range);
}

TEST(NlpProblem, LinearRowJacobianIsConstant) {
  NlpBuilder b;
  const auto x = b.add_variable("x", -kInf, kInf);
  const auto y = b.add_variable("y", -kInf, kInf);
  Constraint c;
  c.expr.add(x, 2.0).add(y, -3.0);
  b.add_constraint(c);
  const auto prob = b.build();
  std::vector<double> j1(2), j2(2);
  prob.jacobian(std::vector<double>{0.1, 5.0}, j1);
  prob.jacobian(std::vector<double>{-7.0, 2.0}, j2);
  EXPECT_EQ(j1, j2);
}

TEST(NlpProblem, OpfDerivativesMatchFiniteDifferences) {
  const auto grid = testing::bipolar_chain(0.01, 0.02, 0.5, 1500);
  opf::OpfOptions o;
  o.outage = "S1a";
  o.nb = 0;
  o.offset_limit_kv = 4.0;
  o.nls_candidates = {"LM"};
  const auto problem = opf::build_opf(grid, o);
  std::vector<std::pair<double, double>> relaxed(problem.catalogue().size(), {0.0, 1.0});
  std::vector<opf::Instance> instances;
  instances.push_back(problem.instantiate(opf::Assignment{{0, 0, 1}}));
  instances.push_back(problem.instantiate_relaxed(relaxed));
  for (const auto& inst : instances) {
    const auto& p = inst.problem;
    std::mt19937_64 rng(5);
    for (int t = 0; t < 5; ++t) {
      const auto x = random_point(p, rng);
      std::vector<double> jac(p.jacobian_pattern().size());
      p.jacobian(x, jac);
      const auto fd = fd_jacobian(p, x, 1e-6);
      for (std::size_t k = 0; k < jac.size(); ++k) {
        const auto [r, c] = p.jacobian_pattern()[k];
        EXPECT_NEAR(jac[k], fd[c][r], 1e-5 * std::max(1.0, std::abs(jac[k])));
      }
      // Entries outside the pattern are zero.
      double total = 0.0;
      for (const auto& col : fd) {
        for (double v : col) total += std::abs(v);
      }
      double in_pattern = 0.0;
      for (double v : jac) in_pattern += std::abs(v);
      EXPECT_NEAR(total, in_pattern, 1e-5 * std::max(1.0, in_pattern));

      // Gradient and Hessian of the Lagrangian against differences too.
      std::vector<double> lambda(p.m());
      std::uniform_real_distribution<double> l(-1.0, 1.0);
      for (auto& v : lambda) v = l(rng);
      std::vector<double> hess(p.hessian_pattern().size());
      p.hessian(x, 1.0, lambda, hess);
      auto lag_grad = [&](std::vector<double> xx) {
        std::vector<double> g(p.n()), j(p.jacobian_pattern().size());
        p.gradient(xx, g);
        p.jacobian(xx, j);
        for (std::size_t k = 0; k < j.size(); ++k) {
          const auto [r, c] = p.jacobian_pattern()[k];
          g[c] += lambda[r] * j[k];
        }
        return g;
      };
      for (std::size_t k = 0; k < hess.size(); ++k) {
        const auto [r, c] = p.hessian_pattern()[k];
        auto xp = x, xm = x;
        xp[c] += 1e-6;
        xm[c] -= 1e-6;
        const double fdv = (lag_grad(xp)[r] - lag_grad(xm)[r]) / 2e-6;
        EXPECT_NEAR(hess[k], fdv, 1e-5 * std::max(1.0, std::abs(hess[k])));
      }
    }
  }
}

}  // namespace
}  // namespace hvdc::nlp
