#include "hvdc/ipm.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace hvdc::nlp {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Optimal:
      return "optimal";
    case Status::Infeasible:
      return "infeasible";
    case Status::IterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

void SolverOptions::validate() const {
  if (!(tol > 0.0) || !(constr_viol_tol > 0.0) || !(dual_inf_tol > 0.0) ||
      !(compl_inf_tol > 0.0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(tau_min > 0.0 && tau_min < 1.0)) {
    throw std::invalid_argument("fraction-to-boundary tau must lie in (0, 1)");
  }
  if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
  if (!(mu_init > 0.0)) throw std::invalid_argument("mu_init must be positive");
  if (!(mu_linear_decrease > 0.0 && mu_linear_decrease < 1.0)) {
    throw std::invalid_argument("mu_linear_decrease must lie in (0, 1)");
  }
  if (!(mu_superlinear_power > 1.0 && mu_superlinear_power < 2.0)) {
    throw std::invalid_argument("mu_superlinear_power must lie in (1, 2)");
  }
}

double KktReport::max_scaled() const {
  return std::max({scaled_stationarity, feasibility, scaled_complementarity,
                   sign_violation});
}

std::string format_log_header() {
  return "iter    objective        inf_pr    inf_du    lg(mu)  alpha_du  alpha_pr  lg(rg) ls";
}

std::string format_log_line(const IterationRecord& r) {
  char buf[160];
  const double lg_mu = std::log10(std::max(r.mu, 1e-300));
  char rg[16];
  if (r.regularization > 0.0) {
    std::snprintf(rg, sizeof rg, "%6.1f", std::log10(r.regularization));
  } else {
    std::snprintf(rg, sizeof rg, "%6s", "-");
  }
  std::snprintf(buf, sizeof buf, "%4d%c %15.8e %9.2e %9.2e %7.1f %9.2e %9.2e %s %2d", r.iter,
                r.kind, r.objective, r.inf_pr, r.inf_du, lg_mu, r.alpha_du, r.alpha_pr, rg,
                r.ls_trials);
  return buf;
}

void write_log(std::ostream& os, const Solution& solution) {
  os << format_log_header() << "\n";
  for (const auto& r : solution.log) os << format_log_line(r) << "\n";
  os << "status: " << to_string(solution.status);
  if (!solution.message.empty()) os << " (" << solution.message << ")";
  os << "\n";
}

namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kStaticReg = 1e-8;
constexpr double kappa_sigma = 1e10;
constexpr double kappa_d = 1e-4;
constexpr double gamma_theta = 1e-5;
constexpr double gamma_phi = 1e-8;
constexpr double s_theta = 1.1;
constexpr double s_phi = 2.3;
constexpr double eta_phi = 1e-4;
constexpr double delta_switch = 1.0;
constexpr double gamma_alpha = 0.05;
constexpr double kappa_soc = 0.99;
constexpr double delta_w_init = 1e-4;
constexpr double delta_w_min = 1e-20;
constexpr double delta_w_max = 1e40;
constexpr double kappa_w_minus = 1.0 / 3.0;
constexpr double kappa_w_plus = 8.0;
constexpr double kappa_w_plus_first = 100.0;

bool finite_bound(double v) { return std::abs(v) < kBoundInf; }

double push_amount(double bound, double other, bool has_other, double push,
                   double frac) {
  double p = push * std::max(1.0, std::abs(bound));
  if (has_other) p = std::min(p, frac * (other - bound));
  return p;
}

// Primal-dual interior point iterations on the reduced problem: fixed
// variables are removed and every inequality row gets a slack, so the
// iterate is w = (x_free, s) with C(w) = 0 and box bounds on w.
class InteriorPoint {
 public:
  InteriorPoint(const NlpProblem& problem, const SolverOptions& options)
      : p_(problem), opt_(options) {
    setup();
  }

  Solution run(std::span<const double> start);

 private:
  void setup();
  std::vector<double> full_x(const Vec& w) const;
  bool evaluate(const Vec& w);  // fills cached quantities at w
  bool constraint_residual(const Vec& w, Vec& c, double& f) const;
  void assemble_kkt(const Vec& w, const Vec& zl, const Vec& zu, double delta_w,
                    double delta_c);
  bool factorize(int& neg, int& zero);
  Vec solve_kkt(const Vec& rhs);
  double error(const Vec& w, const Vec& y, const Vec& zl, const Vec& zu, double mu,
               double& inf_pr, double& inf_du, double& compl_) const;
  double fraction_to_boundary(const Vec& w, const Vec& dw, double tau) const;
  double fraction_to_boundary_z(const Vec& z, const Vec& dz, double tau,
                                const std::vector<bool>& active) const;
  Vec bound_dist_l(const Vec& w) const;
  Vec bound_dist_u(const Vec& w) const;
  bool restore(Vec& w, Vec& y, Vec& zl, Vec& zu, double mu, double theta);
  Solution finish(Status status, const Vec& w, const Vec& y, const Vec& zl,
                  const Vec& zu, std::string message);

  const NlpProblem& p_;
  SolverOptions opt_;

  std::size_t nx_ = 0, ns_ = 0, nw_ = 0, m_ = 0;
  std::vector<std::size_t> free_;
  std::vector<long> reduced_;
  std::vector<double> fixed_;
  std::vector<long> slack_of_row_;
  std::vector<double> row_offset_;
  std::vector<double> lower_, upper_;
  std::vector<bool> has_l_, has_u_;

  // KKT structure
  SpMat kkt_;
  std::vector<int> diag_slot_;
  std::vector<int> dual_slot_;
  std::vector<int> hess_slot_;  // -1 when the entry involves a fixed variable
  std::vector<int> jac_slot_;
  std::vector<int> slack_jac_slot_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  SpMat kkt_true_;

  // Cached evaluations at the current iterate.
  double f_ = 0.0;
  Vec grad_;  // size nw
  Vec c_;     // size m
  std::vector<double> jac_vals_;
  std::vector<double> hess_vals_;

  std::vector<IterationRecord> log_;
  int restorations_ = 0;
  int iter_ = 0;
};

void InteriorPoint::setup() {
  const auto n = p_.n();
  m_ = p_.m();
  reduced_.assign(n, -1);
  fixed_.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = p_.variables()[k];
    if (finite_bound(v.lower) && v.lower == v.upper) {
      fixed_[k] = v.lower;
    } else {
      reduced_[k] = static_cast<long>(free_.size());
      free_.push_back(k);
    }
  }
  nx_ = free_.size();
  slack_of_row_.assign(m_, -1);
  row_offset_.assign(m_, 0.0);
  std::vector<double> slack_l, slack_u;
  for (std::size_t r = 0; r < m_; ++r) {
    const auto& c = p_.constraints()[r];
    if (c.is_equality()) {
      row_offset_[r] = c.lower;
    } else {
      slack_of_row_[r] = static_cast<long>(ns_++);
      slack_l.push_back(c.lower);
      slack_u.push_back(c.upper);
    }
  }
  nw_ = nx_ + ns_;
  lower_.resize(nw_);
  upper_.resize(nw_);
  has_l_.resize(nw_);
  has_u_.resize(nw_);
  for (std::size_t i = 0; i < nw_; ++i) {
    double l, u;
    if (i < nx_) {
      l = p_.variables()[free_[i]].lower;
      u = p_.variables()[free_[i]].upper;
    } else {
      l = slack_l[i - nx_];
      u = slack_u[i - nx_];
    }
    has_l_[i] = finite_bound(l);
    has_u_[i] = finite_bound(u);
    lower_[i] = has_l_[i] ? l : -kInf;
    upper_[i] = has_u_[i] ? u : kInf;
  }

  // KKT sparsity: primal diagonal, Hessian, Jacobian, slack columns, dual diagonal.
  const auto dim = static_cast<int>(nw_ + m_);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < dim; ++i) t.emplace_back(i, i, 1.0);
  for (const auto& [r, c] : p_.hessian_pattern()) {
    if (reduced_[r] >= 0 && reduced_[c] >= 0 && r != c) {
      t.emplace_back(static_cast<int>(reduced_[r]), static_cast<int>(reduced_[c]), 1.0);
    }
  }
  for (const auto& [r, c] : p_.jacobian_pattern()) {
    if (reduced_[c] >= 0) {
      t.emplace_back(static_cast<int>(nw_ + r), static_cast<int>(reduced_[c]), 1.0);
    }
  }
  for (std::size_t r = 0; r < m_; ++r) {
    if (slack_of_row_[r] >= 0) {
      t.emplace_back(static_cast<int>(nw_ + r), static_cast<int>(nx_ + slack_of_row_[r]),
                     1.0);
    }
  }
  kkt_.resize(dim, dim);
  kkt_.setFromTriplets(t.begin(), t.end());
  kkt_.makeCompressed();

  auto slot = [this](int row, int col) {
    const int* inner = kkt_.innerIndexPtr();
    const int* outer = kkt_.outerIndexPtr();
    const int* it = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
    return static_cast<int>(it - inner);
  };
  diag_slot_.resize(nw_);
  for (std::size_t i = 0; i < nw_; ++i) {
    diag_slot_[i] = slot(static_cast<int>(i), static_cast<int>(i));
  }
  dual_slot_.resize(m_);
  for (std::size_t r = 0; r < m_; ++r) {
    dual_slot_[r] = slot(static_cast<int>(nw_ + r), static_cast<int>(nw_ + r));
  }
  hess_slot_.clear();
  for (const auto& [r, c] : p_.hessian_pattern()) {
    if (reduced_[r] >= 0 && reduced_[c] >= 0) {
      hess_slot_.push_back(slot(static_cast<int>(reduced_[r]), static_cast<int>(reduced_[c])));
    } else {
      hess_slot_.push_back(-1);
    }
  }
  jac_slot_.clear();
  for (const auto& [r, c] : p_.jacobian_pattern()) {
    jac_slot_.push_back(reduced_[c] >= 0 ? slot(static_cast<int>(nw_ + r),
                                                static_cast<int>(reduced_[c]))
                                         : -1);
  }
  slack_jac_slot_.assign(m_, -1);
  for (std::size_t r = 0; r < m_; ++r) {
    if (slack_of_row_[r] >= 0) {
      slack_jac_slot_[r] = slot(static_cast<int>(nw_ + r),
                                static_cast<int>(nx_ + slack_of_row_[r]));
    }
  }
  jac_vals_.resize(p_.jacobian_pattern().size());
  hess_vals_.resize(p_.hessian_pattern().size());
}

std::vector<double> InteriorPoint::full_x(const Vec& w) const {
  std::vector<double> x = fixed_;
  for (std::size_t i = 0; i < nx_; ++i) x[free_[i]] = w[static_cast<Eigen::Index>(i)];
  return x;
}

bool InteriorPoint::constraint_residual(const Vec& w, Vec& c, double& f) const {
  const auto x = full_x(w);
  std::vector<double> g(m_);
  p_.constraints(x, g);
  f = p_.objective(x);
  c.resize(static_cast<Eigen::Index>(m_));
  for (std::size_t r = 0; r < m_; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    c[ri] = slack_of_row_[r] >= 0
                ? g[r] - w[static_cast<Eigen::Index>(nx_ + slack_of_row_[r])]
                : g[r] - row_offset_[r];
  }
  return std::isfinite(f) && c.allFinite();
}

bool InteriorPoint::evaluate(const Vec& w) {
  if (!constraint_residual(w, c_, f_)) return false;
  const auto x = full_x(w);
  std::vector<double> g(p_.n());
  p_.gradient(x, g);
  grad_ = Vec::Zero(static_cast<Eigen::Index>(nw_));
  for (std::size_t i = 0; i < nx_; ++i) grad_[static_cast<Eigen::Index>(i)] = g[free_[i]];
  p_.jacobian(x, jac_vals_);
  return grad_.allFinite();
}

Vec InteriorPoint::bound_dist_l(const Vec& w) const {
  Vec d = Vec::Zero(w.size());
  for (std::size_t i = 0; i < nw_; ++i) {
    if (has_l_[i]) d[static_cast<Eigen::Index>(i)] = w[static_cast<Eigen::Index>(i)] - lower_[i];
  }
  return d;
}

Vec InteriorPoint::bound_dist_u(const Vec& w) const {
  Vec d = Vec::Zero(w.size());
  for (std::size_t i = 0; i < nw_; ++i) {
    if (has_u_[i]) d[static_cast<Eigen::Index>(i)] = upper_[i] - w[static_cast<Eigen::Index>(i)];
  }
  return d;
}

void InteriorPoint::assemble_kkt(const Vec& w, const Vec& zl, const Vec& zu,
                                 double delta_w, double delta_c) {
  double* v = kkt_.valuePtr();
  std::fill(v, v + kkt_.nonZeros(), 0.0);
  for (std::size_t k = 0; k < hess_vals_.size(); ++k) {
    if (hess_slot_[k] >= 0) v[hess_slot_[k]] += hess_vals_[k];
  }
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double sigma = 0.0;
    if (has_l_[i]) sigma += zl[ii] / (w[ii] - lower_[i]);
    if (has_u_[i]) sigma += zu[ii] / (upper_[i] - w[ii]);
    v[diag_slot_[i]] += sigma + delta_w;
  }
  for (std::size_t k = 0; k < jac_vals_.size(); ++k) {
    if (jac_slot_[k] >= 0) v[jac_slot_[k]] += jac_vals_[k];
  }
  for (std::size_t r = 0; r < m_; ++r) {
    if (slack_jac_slot_[r] >= 0) v[slack_jac_slot_[r]] = -1.0;
    v[dual_slot_[r]] = -delta_c;
  }
}

bool InteriorPoint::factorize(int& neg, int& zero) {
  kkt_true_ = kkt_;
  SpMat reg = kkt_;
  double* v = reg.valuePtr();
  for (std::size_t i = 0; i < nw_; ++i) v[diag_slot_[i]] += kStaticReg;
  for (std::size_t r = 0; r < m_; ++r) v[dual_slot_[r]] -= kStaticReg;
  if (!analyzed_) {
    ldlt_.analyzePattern(reg);
    analyzed_ = true;
  }
  ldlt_.factorize(reg);
  neg = 0;
  zero = 0;
  if (ldlt_.info() != Eigen::Success) {
    zero = 1;
    return false;
  }
  const Vec d = ldlt_.vectorD();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (!std::isfinite(d[k])) {
      zero = 1;
      return false;
    }
    if (d[k] < 0.0) ++neg;
    if (d[k] == 0.0) ++zero;
  }
  return true;
}

Vec InteriorPoint::solve_kkt(const Vec& rhs) {
  Vec x = ldlt_.solve(rhs);
  // Refine against the system without the static regularization.
  for (int k = 0; k < 10; ++k) {
    Vec r = rhs - kkt_true_.selfadjointView<Eigen::Lower>() * x;
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (!(rn > 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))) break;
    Vec dx = ldlt_.solve(r);
    if (!dx.allFinite()) break;
    x += dx;
  }
  return x;
}

double InteriorPoint::fraction_to_boundary(const Vec& w, const Vec& dw,
                                           double tau) const {
  double alpha = 1.0;
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (has_l_[i] && dw[ii] < 0.0) {
      alpha = std::min(alpha, -tau * (w[ii] - lower_[i]) / dw[ii]);
    }
    if (has_u_[i] && dw[ii] > 0.0) {
      alpha = std::min(alpha, tau * (upper_[i] - w[ii]) / dw[ii]);
    }
  }
  return alpha;
}

double InteriorPoint::fraction_to_boundary_z(const Vec& z, const Vec& dz, double tau,
                                             const std::vector<bool>& active) const {
  double alpha = 1.0;
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (active[i] && dz[ii] < 0.0) alpha = std::min(alpha, -tau * z[ii] / dz[ii]);
  }
  return alpha;
}

Solution InteriorPoint::finish(Status status, const Vec& w, const Vec& y, const Vec& zl,
                               const Vec& zu, std::string message) {
  Solution s;
  s.status = status;
  s.x = full_x(w);
  s.lambda.assign(y.data(), y.data() + y.size());
  s.z_lower.assign(p_.n(), 0.0);
  s.z_upper.assign(p_.n(), 0.0);
  for (std::size_t i = 0; i < nx_; ++i) {
    s.z_lower[free_[i]] = zl[static_cast<Eigen::Index>(i)];
    s.z_upper[free_[i]] = zu[static_cast<Eigen::Index>(i)];
  }
  // Fixed variables: both bounds active, multiplier from stationarity.
  if (nx_ < p_.n()) {
    std::vector<double> g(p_.n());
    p_.gradient(s.x, g);
    std::vector<double> jv(p_.jacobian_pattern().size());
    p_.jacobian(s.x, jv);
    for (std::size_t k = 0; k < jv.size(); ++k) {
      const auto& [r, c] = p_.jacobian_pattern()[k];
      g[c] += jv[k] * s.lambda[r];
    }
    for (std::size_t k = 0; k < p_.n(); ++k) {
      if (reduced_[k] >= 0) continue;
      if (g[k] >= 0.0) {
        s.z_lower[k] = g[k];
      } else {
        s.z_upper[k] = -g[k];
      }
    }
  }
  s.objective = p_.objective(s.x);
  double inf_pr = 0.0, inf_du = 0.0, compl_ = 0.0;
  error(w, y, zl, zu, 0.0, inf_pr, inf_du, compl_);
  // Solver-side claim, computed from the internal slack formulation.
  const double n_mult = static_cast<double>(m_ + 2 * nw_);
  const double sum_mult = y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>();
  const double s_d = std::max(opt_.s_max, n_mult > 0 ? sum_mult / n_mult : 0.0) / opt_.s_max;
  const double n_z = static_cast<double>(2 * nw_);
  const double s_c =
      std::max(opt_.s_max, n_z > 0 ? (zl.lpNorm<1>() + zu.lpNorm<1>()) / n_z : 0.0) /
      opt_.s_max;
  s.kkt.stationarity = inf_du;
  s.kkt.feasibility = inf_pr;
  s.kkt.complementarity = compl_;
  s.kkt.scaled_stationarity = inf_du / s_d;
  s.kkt.scaled_complementarity = compl_ / s_c;
  s.iterations = iter_;
  s.restorations = restorations_;
  s.log = std::move(log_);
  s.message = std::move(message);
  return s;
}

double InteriorPoint::error(const Vec& w, const Vec& y, const Vec& zl, const Vec& zu,
                            double mu, double& inf_pr, double& inf_du,
                            double& compl_) const {
  // Dual residual grad f + J^T y - zl + zu in the reduced space.
  Vec r = grad_ - zl + zu;
  for (std::size_t k = 0; k < jac_vals_.size(); ++k) {
    const auto& [row, col] = p_.jacobian_pattern()[k];
    if (reduced_[col] >= 0) {
      r[static_cast<Eigen::Index>(reduced_[col])] += jac_vals_[k] * y[static_cast<Eigen::Index>(row)];
    }
  }
  for (std::size_t row = 0; row < m_; ++row) {
    if (slack_of_row_[row] >= 0) {
      r[static_cast<Eigen::Index>(nx_ + slack_of_row_[row])] -= y[static_cast<Eigen::Index>(row)];
    }
  }
  inf_du = nw_ > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0;
  inf_pr = m_ > 0 ? c_.lpNorm<Eigen::Infinity>() : 0.0;
  compl_ = 0.0;
  const Vec dl = bound_dist_l(w);
  const Vec du = bound_dist_u(w);
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (has_l_[i]) compl_ = std::max(compl_, std::abs(zl[ii] * dl[ii] - mu));
    if (has_u_[i]) compl_ = std::max(compl_, std::abs(zu[ii] * du[ii] - mu));
  }
  const double n_mult = static_cast<double>(m_ + 2 * nw_);
  const double sum_mult = y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>();
  const double s_d = std::max(opt_.s_max, n_mult > 0 ? sum_mult / n_mult : 0.0) / opt_.s_max;
  const double n_z = static_cast<double>(2 * nw_);
  const double s_c =
      std::max(opt_.s_max, n_z > 0 ? (zl.lpNorm<1>() + zu.lpNorm<1>()) / n_z : 0.0) /
      opt_.s_max;
  return std::max({inf_du / s_d, inf_pr, compl_ / s_c});
}

Solution InteriorPoint::run(std::span<const double> start) {
  if (start.size() != p_.n()) {
    throw std::invalid_argument("start point has wrong dimension");
  }
  for (double v : start) {
    if (!std::isfinite(v)) throw std::invalid_argument("start point is not finite");
  }
  const auto nwi = static_cast<Eigen::Index>(nw_);
  const auto mi = static_cast<Eigen::Index>(m_);

  // Initial primal point pushed strictly inside the bounds.
  Vec w(nwi);
  for (std::size_t i = 0; i < nx_; ++i) w[static_cast<Eigen::Index>(i)] = start[free_[i]];
  {
    std::vector<double> x = fixed_;
    for (std::size_t i = 0; i < nx_; ++i) x[free_[i]] = start[free_[i]];
    std::vector<double> g(m_);
    p_.constraints(x, g);
    for (std::size_t r = 0; r < m_; ++r) {
      if (slack_of_row_[r] >= 0) {
        w[static_cast<Eigen::Index>(nx_ + slack_of_row_[r])] = g[r];
      }
    }
  }
  auto push_inside = [this](Vec& v) {
    for (std::size_t i = 0; i < nw_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        const double pl = push_amount(lower_[i], upper_[i], has_u_[i], opt_.bound_push,
                                      opt_.bound_frac);
        v[ii] = std::max(v[ii], lower_[i] + pl);
      }
      if (has_u_[i]) {
        const double pu = push_amount(-upper_[i], -lower_[i], has_l_[i], opt_.bound_push,
                                      opt_.bound_frac);
        v[ii] = std::min(v[ii], upper_[i] - pu);
      }
    }
  };
  push_inside(w);

  Vec y = Vec::Zero(mi);
  Vec zl = Vec::Zero(nwi);
  Vec zu = Vec::Zero(nwi);
  for (std::size_t i = 0; i < nw_; ++i) {
    if (has_l_[i]) zl[static_cast<Eigen::Index>(i)] = 1.0;
    if (has_u_[i]) zu[static_cast<Eigen::Index>(i)] = 1.0;
  }
  if (!evaluate(w)) {
    throw std::invalid_argument("problem functions are not finite at the start point");
  }

  double mu = opt_.mu_init;
  double tau = std::max(opt_.tau_min, 1.0 - mu);
  const double mu_min = opt_.tol / 10.0;
  double theta0 = c_.lpNorm<1>();
  double theta_max = 1e4 * std::max(1.0, theta0);
  double theta_min = 1e-4 * std::max(1.0, theta0);
  std::vector<std::pair<double, double>> filter;
  auto reset_filter = [&] { filter.assign(1, {theta_max, -kInf}); };
  reset_filter();
  double delta_w_last = 0.0;

  // Barrier objective with damping of one-sided bounds.
  auto phi = [&](const Vec& v, double f) {
    double val = f;
    for (std::size_t i = 0; i < nw_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        val -= mu * std::log(v[ii] - lower_[i]);
        if (!has_u_[i]) val += kappa_d * mu * (v[ii] - lower_[i]);
      }
      if (has_u_[i]) {
        val -= mu * std::log(upper_[i] - v[ii]);
        if (!has_l_[i]) val += kappa_d * mu * (upper_[i] - v[ii]);
      }
    }
    return val;
  };
  auto grad_phi = [&](const Vec& v) {
    Vec gphi = grad_;
    for (std::size_t i = 0; i < nw_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        gphi[ii] -= mu / (v[ii] - lower_[i]);
        if (!has_u_[i]) gphi[ii] += kappa_d * mu;
      }
      if (has_u_[i]) {
        gphi[ii] += mu / (upper_[i] - v[ii]);
        if (!has_l_[i]) gphi[ii] -= kappa_d * mu;
      }
    }
    return gphi;
  };
  auto jac_t_times = [&](const Vec& v) {
    Vec out = Vec::Zero(nwi);
    for (std::size_t k = 0; k < jac_vals_.size(); ++k) {
      const auto& [row, col] = p_.jacobian_pattern()[k];
      if (reduced_[col] >= 0) {
        out[static_cast<Eigen::Index>(reduced_[col])] += jac_vals_[k] * v[static_cast<Eigen::Index>(row)];
      }
    }
    for (std::size_t row = 0; row < m_; ++row) {
      if (slack_of_row_[row] >= 0) {
        out[static_cast<Eigen::Index>(nx_ + slack_of_row_[row])] -= v[static_cast<Eigen::Index>(row)];
      }
    }
    return out;
  };
  auto min_slack = [&](const Vec& v) {
    double s = kInf;
    for (std::size_t i = 0; i < nw_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (has_l_[i]) s = std::min(s, v[ii] - lower_[i]);
      if (has_u_[i]) s = std::min(s, upper_[i] - v[ii]);
    }
    return s;
  };

  IterationRecord rec;
  char pending_kind = ' ';
  for (iter_ = 0;; ++iter_) {
    double inf_pr, inf_du, compl_;
    const double e0 = error(w, y, zl, zu, 0.0, inf_pr, inf_du, compl_);
    rec.iter = iter_;
    rec.objective = f_;
    rec.inf_pr = inf_pr;
    rec.inf_du = inf_du;
    rec.mu = mu;
    rec.min_slack = min_slack(w);
    rec.kind = pending_kind;
    pending_kind = ' ';
    log_.push_back(rec);

    if (e0 <= opt_.tol && inf_pr <= opt_.constr_viol_tol && inf_du <= opt_.dual_inf_tol &&
        compl_ <= opt_.compl_inf_tol) {
      return finish(Status::Optimal, w, y, zl, zu, "");
    }
    if (iter_ >= opt_.max_iter) {
      return finish(Status::IterationLimit, w, y, zl, zu, "maximum iterations reached");
    }
    if (w.lpNorm<Eigen::Infinity>() > 1e20) {
      return finish(Status::IterationLimit, w, y, zl, zu, "iterates diverging");
    }

    // Monotone barrier update.
    for (;;) {
      double a, b, c;
      const double emu = error(w, y, zl, zu, mu, a, b, c);
      if (emu > opt_.barrier_tol_factor * mu || mu <= mu_min) break;
      const double next = std::max(
          mu_min, std::min(opt_.mu_linear_decrease * mu, std::pow(mu, opt_.mu_superlinear_power)));
      if (next >= mu) break;
      mu = next;
      tau = std::max(opt_.tau_min, 1.0 - mu);
      reset_filter();
    }

    // Hessian of the Lagrangian at the current iterate.
    {
      const auto x = full_x(w);
      p_.hessian(x, 1.0, std::span<const double>(y.data(), m_), hess_vals_);
    }

    // Inertia-corrected factorization.
    double delta_w = 0.0;
    double delta_c = 0.0;
    bool factor_ok = false;
    for (int attempt = 0; attempt < 200; ++attempt) {
      assemble_kkt(w, zl, zu, delta_w, delta_c);
      int neg = 0, zero = 0;
      const bool ok = factorize(neg, zero);
      if (ok && zero == 0 && neg == static_cast<int>(m_)) {
        factor_ok = true;
        break;
      }
      if (zero > 0 && delta_c == 0.0) {
        delta_c = 1e-8 * std::pow(mu, 0.25);
      }
      if (delta_w == 0.0) {
        delta_w = delta_w_last == 0.0 ? delta_w_init
                                      : std::max(delta_w_min, kappa_w_minus * delta_w_last);
      } else {
        delta_w *= delta_w_last == 0.0 ? kappa_w_plus_first : kappa_w_plus;
      }
      if (delta_w > delta_w_max) break;
    }
    if (!factor_ok) {
      return finish(Status::IterationLimit, w, y, zl, zu,
                    "unable to obtain a usable KKT factorization");
    }
    if (delta_w > 0.0) delta_w_last = delta_w;
    rec.regularization = delta_w;

    const Vec gphi = grad_phi(w);
    Vec rhs(nwi + mi);
    rhs.head(nwi) = -(gphi + jac_t_times(y));
    rhs.tail(mi) = -c_;
    const Vec sol = solve_kkt(rhs);
    if (!sol.allFinite()) {
      return finish(Status::IterationLimit, w, y, zl, zu, "non-finite search direction");
    }
    Vec dw = sol.head(nwi);
    Vec dy = sol.tail(mi);

    auto z_steps = [&](const Vec& step, Vec& dzl, Vec& dzu) {
      dzl = Vec::Zero(nwi);
      dzu = Vec::Zero(nwi);
      for (std::size_t i = 0; i < nw_; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (has_l_[i]) {
          const double d = w[ii] - lower_[i];
          dzl[ii] = mu / d - zl[ii] - zl[ii] / d * step[ii];
        }
        if (has_u_[i]) {
          const double d = upper_[i] - w[ii];
          dzu[ii] = mu / d - zu[ii] + zu[ii] / d * step[ii];
        }
      }
    };

    // Filter line search.
    const double theta = c_.lpNorm<1>();
    const double phi_cur = phi(w, f_);
    const double gpd = gphi.dot(dw);
    const double alpha_max = fraction_to_boundary(w, dw, tau);
    double alpha_min = gamma_theta;
    if (gpd < 0.0) {
      alpha_min = std::min(gamma_theta, gamma_phi * theta / (-gpd));
      if (theta <= theta_min) {
        alpha_min = std::min(alpha_min, delta_switch * std::pow(theta, s_theta) /
                                            std::pow(-gpd, s_phi));
      }
    }
    alpha_min *= gamma_alpha;

    auto acceptable = [&](double theta_t, double phi_t, double alpha, bool& f_type) {
      for (const auto& [ft, fp] : filter) {
        if (theta_t >= ft && phi_t >= fp) return false;
      }
      const bool switching =
          gpd < 0.0 && alpha * std::pow(-gpd, s_phi) > delta_switch * std::pow(theta, s_theta);
      if (theta <= theta_min && switching) {
        f_type = true;
        return phi_t <= phi_cur + eta_phi * alpha * gpd;
      }
      f_type = false;
      return theta_t <= (1.0 - gamma_theta) * theta || phi_t <= phi_cur - gamma_phi * theta;
    };

    bool accepted = false;
    bool f_type = false;
    double alpha = alpha_max;
    int trials = 0;
    Vec w_new, step = dw, step_y = dy;
    double alpha_used = alpha;
    Vec c_trial;
    double f_trial = 0.0;
    while (alpha >= alpha_min || trials == 0) {
      ++trials;
      Vec wt = w + alpha * dw;
      const bool finite = constraint_residual(wt, c_trial, f_trial);
      if (finite) {
        const double theta_t = c_trial.lpNorm<1>();
        const double phi_t = phi(wt, f_trial);
        if (std::isfinite(phi_t) && acceptable(theta_t, phi_t, alpha, f_type)) {
          accepted = true;
          w_new = wt;
          alpha_used = alpha;
          break;
        }
        // Second-order corrections on the first trial.
        if (trials == 1 && theta_t >= theta && opt_.max_soc > 0) {
          Vec c_soc = alpha * c_ + c_trial;
          double theta_soc_old = theta;
          double theta_soc = theta_t;
          for (int k = 0; k < opt_.max_soc; ++k) {
            if (k > 0 && theta_soc > kappa_soc * theta_soc_old) break;
            Vec rhs_soc(nwi + mi);
            rhs_soc.head(nwi) = -(gphi + jac_t_times(y));
            rhs_soc.tail(mi) = -c_soc;
            const Vec s2 = solve_kkt(rhs_soc);
            if (!s2.allFinite()) break;
            const Vec dw_soc = s2.head(nwi);
            const double a_soc = fraction_to_boundary(w, dw_soc, tau);
            Vec ws = w + a_soc * dw_soc;
            Vec c_s;
            double f_s = 0.0;
            if (!constraint_residual(ws, c_s, f_s)) break;
            theta_soc_old = theta_soc;
            theta_soc = c_s.lpNorm<1>();
            const double phi_s = phi(ws, f_s);
            if (std::isfinite(phi_s) && acceptable(theta_soc, phi_s, alpha, f_type)) {
              accepted = true;
              w_new = ws;
              step = dw_soc;
              step_y = s2.tail(mi);
              alpha_used = a_soc;
              break;
            }
            c_soc = a_soc * c_soc + c_s;
          }
          if (accepted) break;
        }
      }
      alpha *= 0.5;
    }
    rec.ls_trials = trials;

    if (!accepted) {
      if (theta <= opt_.constr_viol_tol) {
        // Feasible but stuck: take the shortest tried step and carry on.
        w_new = w + alpha * 2.0 * dw;
        alpha_used = alpha * 2.0;
        f_type = true;
      } else if (opt_.allow_restoration && restorations_ < opt_.max_restorations) {
        ++restorations_;
        if (!restore(w, y, zl, zu, mu, theta)) {
          if (!evaluate(w)) {
            throw std::runtime_error("problem functions not finite after restoration");
          }
          return finish(Status::Infeasible, w, y, zl, zu,
                        "restoration phase converged to an infeasible point");
        }
        if (!evaluate(w)) {
          throw std::runtime_error("problem functions not finite after restoration");
        }
        theta_max = 1e4 * std::max(1.0, c_.lpNorm<1>());
        theta_min = 1e-4 * std::max(1.0, c_.lpNorm<1>());
        reset_filter();
        rec.alpha_pr = 0.0;
        rec.alpha_du = 0.0;
        pending_kind = 'r';
        continue;
      } else {
        return finish(opt_.allow_restoration ? Status::IterationLimit : Status::Infeasible, w,
                      y, zl, zu, "line search failed");
      }
    }

    if (!f_type) {
      filter.emplace_back((1.0 - gamma_theta) * theta, phi_cur - gamma_phi * theta);
    }

    Vec dzl, dzu;
    z_steps(step, dzl, dzu);
    const double alpha_z = std::min(fraction_to_boundary_z(zl, dzl, tau, has_l_),
                                    fraction_to_boundary_z(zu, dzu, tau, has_u_));
    w = w_new;
    y += alpha_used * step_y;
    zl += alpha_z * dzl;
    zu += alpha_z * dzu;
    for (std::size_t i = 0; i < nw_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        const double d = w[ii] - lower_[i];
        zl[ii] = std::max(std::min(zl[ii], kappa_sigma * mu / d), mu / (kappa_sigma * d));
      }
      if (has_u_[i]) {
        const double d = upper_[i] - w[ii];
        zu[ii] = std::max(std::min(zu[ii], kappa_sigma * mu / d), mu / (kappa_sigma * d));
      }
    }
    rec.alpha_pr = alpha_used;
    rec.alpha_du = alpha_z;
    if (!evaluate(w)) {
      return finish(Status::IterationLimit, w, y, zl, zu, "function evaluation failed");
    }
  }
}

bool InteriorPoint::restore(Vec& w, Vec& y, Vec& zl, Vec& zu, double mu, double theta) {
  // l1 feasibility problem: min rho * sum(p + n) + zeta/2 * sum D^2 (x - x_R)^2
  // subject to g(x) - p + n in [g_l, g_u], p, n >= 0.
  const auto xr = full_x(w);
  std::vector<double> g(m_);
  p_.constraints(xr, g);

  NlpBuilder b;
  for (std::size_t k = 0; k < p_.n(); ++k) {
    const auto& v = p_.variables()[k];
    b.add_variable(v.name, v.lower, v.upper, v.scenario);
  }
  const double rho = opt_.restoration_penalty;
  const double zeta = std::sqrt(mu);
  double viol_inf = 0.0;
  std::vector<double> viol(m_);
  for (std::size_t r = 0; r < m_; ++r) {
    const auto& c = p_.constraints()[r];
    viol[r] = g[r] - std::clamp(g[r], c.lower, c.upper);
    viol_inf = std::max(viol_inf, std::abs(viol[r]));
  }
  const double mu_r = std::max(mu, viol_inf);
  std::vector<double> start(xr);
  for (std::size_t r = 0; r < m_; ++r) {
    const auto& c = p_.constraints()[r];
    const auto pv = b.add_variable("restoration.p." + std::to_string(r), 0.0, kInf);
    const auto nv = b.add_variable("restoration.n." + std::to_string(r), 0.0, kInf);
    Constraint row = c;
    row.name = "restoration." + c.name;
    row.expr.add(pv, -1.0).add(nv, 1.0);
    b.add_constraint(std::move(row));
    b.objective().add(pv, rho).add(nv, rho);
    const double cv = viol[r];
    const double a = (mu_r - rho * cv) / (2.0 * rho);
    const double nval = a + std::sqrt(a * a + mu_r * cv / (2.0 * rho));
    start.push_back(cv + nval);
    start.push_back(nval);
  }
  for (std::size_t i = 0; i < nx_; ++i) {
    const auto k = free_[i];
    const double d = std::min(1.0, 1.0 / std::max(std::abs(xr[k]), 1e-300));
    const double c2 = 0.5 * zeta * d * d;
    b.objective().add(k, k, c2).add(k, -2.0 * c2 * xr[k]);
    b.objective().constant += c2 * xr[k] * xr[k];
  }
  const NlpProblem rp = b.build();
  SolverOptions ro = opt_;
  ro.allow_restoration = false;
  ro.mu_init = mu_r;
  InteriorPoint inner(rp, ro);
  Solution rs = inner.run(start);

  std::vector<double> x_new(rs.x.begin(), rs.x.begin() + static_cast<long>(p_.n()));
  p_.constraints(x_new, g);
  double theta_new = 0.0;
  for (std::size_t r = 0; r < m_; ++r) {
    const auto& c = p_.constraints()[r];
    theta_new += std::abs(g[r] - std::clamp(g[r], c.lower, c.upper));
  }
  const bool progress = theta_new <= 0.9 * theta || theta_new <= opt_.constr_viol_tol;

  for (std::size_t i = 0; i < nx_; ++i) w[static_cast<Eigen::Index>(i)] = x_new[free_[i]];
  for (std::size_t r = 0; r < m_; ++r) {
    if (slack_of_row_[r] >= 0) w[static_cast<Eigen::Index>(nx_ + slack_of_row_[r])] = g[r];
  }
  // Keep the new point strictly interior.
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (has_l_[i] && has_u_[i]) {
      const double span = upper_[i] - lower_[i];
      w[ii] = std::clamp(w[ii], lower_[i] + 1e-8 * span, upper_[i] - 1e-8 * span);
    } else if (has_l_[i]) {
      w[ii] = std::max(w[ii], lower_[i] + 1e-8 * std::max(1.0, std::abs(lower_[i])));
    } else if (has_u_[i]) {
      w[ii] = std::min(w[ii], upper_[i] - 1e-8 * std::max(1.0, std::abs(upper_[i])));
    }
  }
  for (std::size_t r = 0; r < m_; ++r) y[static_cast<Eigen::Index>(r)] = 0.0;
  for (std::size_t i = 0; i < nw_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    zl[ii] = has_l_[i] ? std::min(1.0, mu / (w[ii] - lower_[i])) : 0.0;
    zu[ii] = has_u_[i] ? std::min(1.0, mu / (upper_[i] - w[ii])) : 0.0;
    if (i < nx_) {
      const auto k = free_[i];
      if (has_l_[i] && rs.z_lower[k] > 0.0) zl[ii] = std::max(zl[ii], rs.z_lower[k]);
      if (has_u_[i] && rs.z_upper[k] > 0.0) zu[ii] = std::max(zu[ii], rs.z_upper[k]);
    }
  }
  return progress;
}

}  // namespace

Solution solve(const NlpProblem& problem, std::span<const double> start,
               const SolverOptions& options) {
  options.validate();
  InteriorPoint ipm(problem, options);
  return ipm.run(start);
}

KktReport check_kkt(const NlpProblem& problem, std::span<const double> x,
                    std::span<const double> lambda, std::span<const double> z_lower,
                    std::span<const double> z_upper, double s_max) {
  const auto n = problem.n();
  const auto m = problem.m();
  if (x.size() != n || lambda.size() != m || z_lower.size() != n || z_upper.size() != n) {
    throw std::invalid_argument("check_kkt: dimension mismatch");
  }
  KktReport rep;
  std::vector<double> r(n);
  problem.gradient(x, r);
  std::vector<double> jv(problem.jacobian_pattern().size());
  problem.jacobian(x, jv);
  for (std::size_t k = 0; k < jv.size(); ++k) {
    const auto& [row, col] = problem.jacobian_pattern()[k];
    r[col] += jv[k] * lambda[row];
  }
  for (std::size_t i = 0; i < n; ++i) {
    r[i] += -z_lower[i] + z_upper[i];
    rep.stationarity = std::max(rep.stationarity, std::abs(r[i]));
  }

  std::vector<double> g(m);
  problem.constraints(x, g);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& c = problem.constraints()[k];
    const bool lo = finite_bound(c.lower);
    const bool hi = finite_bound(c.upper);
    if (lo) rep.feasibility = std::max(rep.feasibility, c.lower - g[k]);
    if (hi) rep.feasibility = std::max(rep.feasibility, g[k] - c.upper);
    if (c.is_equality()) continue;
    const double l = lambda[k];
    if (l > 0.0) {
      if (hi) {
        rep.complementarity = std::max(rep.complementarity, l * std::abs(c.upper - g[k]));
      } else {
        rep.sign_violation = std::max(rep.sign_violation, l);
      }
    } else if (l < 0.0) {
      if (lo) {
        rep.complementarity = std::max(rep.complementarity, -l * std::abs(g[k] - c.lower));
      } else {
        rep.sign_violation = std::max(rep.sign_violation, -l);
      }
    }
  }
  double zsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = problem.variables()[i];
    const bool lo = finite_bound(v.lower);
    const bool hi = finite_bound(v.upper);
    if (lo) rep.feasibility = std::max(rep.feasibility, v.lower - x[i]);
    if (hi) rep.feasibility = std::max(rep.feasibility, x[i] - v.upper);
    rep.sign_violation = std::max({rep.sign_violation, -z_lower[i], -z_upper[i]});
    if (lo && v.lower != v.upper) {
      rep.complementarity = std::max(rep.complementarity, std::abs(z_lower[i] * (x[i] - v.lower)));
    } else if (!lo) {
      rep.sign_violation = std::max(rep.sign_violation, std::abs(z_lower[i]));
    }
    if (hi && v.lower != v.upper) {
      rep.complementarity = std::max(rep.complementarity, std::abs(z_upper[i] * (v.upper - x[i])));
    } else if (!hi) {
      rep.sign_violation = std::max(rep.sign_violation, std::abs(z_upper[i]));
    }
    zsum += std::abs(z_lower[i]) + std::abs(z_upper[i]);
  }
  double lsum = 0.0;
  for (double l : lambda) lsum += std::abs(l);
  const double n_mult = static_cast<double>(m + 2 * n);
  const double s_d = std::max(s_max, n_mult > 0 ? (lsum + zsum) / n_mult : 0.0) / s_max;
  const double s_c = std::max(s_max, n > 0 ? zsum / (2.0 * static_cast<double>(n)) : 0.0) / s_max;
  rep.scaled_stationarity = rep.stationarity / s_d;
  rep.scaled_complementarity = rep.complementarity / s_c;
  return rep;
}

KktReport check_kkt(const NlpProblem& problem, const Solution& solution) {
  return check_kkt(problem, solution.x, solution.lambda, solution.z_lower, solution.z_upper);
}

std::vector<double> perturbed_start(const NlpProblem& problem, std::span<const double> start,
                                    std::uint64_t seed, int index, double scale) {
  if (start.size() != problem.n()) {
    throw std::invalid_argument("perturbed_start: dimension mismatch");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  // Explicit 53-bit mantissa draw keeps the stream identical across
  // standard library implementations.
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<double> x(start.begin(), start.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& v = problem.variables()[i];
    const double u = 2.0 * uniform() - 1.0;
    const bool lo = finite_bound(v.lower);
    const bool hi = finite_bound(v.upper);
    if (lo && hi && v.lower == v.upper) continue;
    const double width = (lo && hi) ? (v.upper - v.lower) : std::max(1.0, std::abs(x[i]));
    x[i] += scale * width * u;
    if (lo) x[i] = std::max(x[i], v.lower);
    if (hi) x[i] = std::min(x[i], v.upper);
  }
  return x;
}

Solution solve_multistart(const NlpProblem& problem, std::span<const double> start,
                          const SolverOptions& options, const MultiStartOptions& multi) {
  Solution best = solve(problem, start, options);
  for (int k = 1; k < multi.starts; ++k) {
    const auto x0 = perturbed_start(problem, start, multi.seed, k, multi.perturbation);
    Solution s = solve(problem, x0, options);
    if (s.status != Status::Optimal) continue;
    if (best.status != Status::Optimal || s.objective < best.objective - 1e-12 * (1.0 + std::abs(best.objective))) {
      best = std::move(s);
    }
  }
  return best;
}

}  // namespace hvdc::nlp
