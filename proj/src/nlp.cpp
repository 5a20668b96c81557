#include "hvdc/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hvdc::nlp {

ConstraintSet& ConstraintSet::append(ConstraintSet other) {
  for (auto& r : other.rows) rows.push_back(std::move(r));
  for (auto& b : other.bounds) bounds.push_back(b);
  return *this;
}

std::size_t NlpBuilder::add_variable(std::string name, double lower, double upper,
                                     int scenario) {
  variables_.push_back({std::move(name), lower, upper, scenario});
  return variables_.size() - 1;
}

std::size_t NlpBuilder::add_constraint(Constraint row) {
  constraints_.push_back(std::move(row));
  return constraints_.size() - 1;
}

void NlpBuilder::tighten_bounds(std::size_t var, double lower, double upper) {
  auto& v = variables_.at(var);
  v.lower = std::max(v.lower, lower);
  v.upper = std::min(v.upper, upper);
}

void NlpBuilder::apply(const ConstraintSet& set) {
  for (const auto& r : set.rows) add_constraint(r);
  for (const auto& b : set.bounds) tighten_bounds(b.var, b.lower, b.upper);
}

namespace {

void check_expression(const Expression& e, std::size_t n, const std::string& where) {
  auto bad = [&](const std::string& what) {
    throw std::invalid_argument(where + ": " + what);
  };
  if (!std::isfinite(e.constant)) bad("non-finite constant");
  for (const auto& t : e.linear) {
    if (t.var >= n) bad("unknown variable index " + std::to_string(t.var));
    if (!std::isfinite(t.coef)) bad("non-finite coefficient");
  }
  for (const auto& t : e.bilinear) {
    if (t.a >= n || t.b >= n) bad("unknown variable index in product term");
    if (!std::isfinite(t.coef)) bad("non-finite coefficient");
  }
}

double evaluate(const Expression& e, std::span<const double> x) {
  double v = e.constant;
  for (const auto& t : e.linear) v += t.coef * x[t.var];
  for (const auto& t : e.bilinear) v += t.coef * x[t.a] * x[t.b];
  return v;
}

std::pair<std::size_t, std::size_t> lower_entry(std::size_t a, std::size_t b) {
  return {std::max(a, b), std::min(a, b)};
}

}  // namespace

NlpProblem NlpBuilder::build() const {
  const auto n = variables_.size();
  for (const auto& v : variables_) {
    if (std::isnan(v.lower) || std::isnan(v.upper)) {
      throw std::invalid_argument("variable '" + v.name + "' has NaN bound");
    }
    if (v.lower > v.upper) {
      throw std::invalid_argument("variable '" + v.name + "' has empty bounds");
    }
  }
  check_expression(objective_, n, "objective");
  for (const auto& c : constraints_) {
    check_expression(c.expr, n, "constraint '" + c.name + "'");
    if (std::isnan(c.lower) || std::isnan(c.upper) || c.lower > c.upper) {
      throw std::invalid_argument("constraint '" + c.name + "' has invalid bounds");
    }
  }
  NlpProblem p;
  p.variables_ = variables_;
  p.constraints_ = constraints_;
  p.objective_ = objective_;
  p.finalize();
  return p;
}

void NlpProblem::finalize() {
  name_lookup_.clear();
  for (std::size_t k = 0; k < variables_.size(); ++k) {
    if (!name_lookup_.emplace(variables_[k].name, k).second) {
      throw std::invalid_argument("duplicate variable name '" + variables_[k].name + "'");
    }
  }

  jac_pattern_.clear();
  jac_linear_slot_.clear();
  jac_bilinear_slot_.clear();
  row_linear_begin_.assign(constraints_.size() + 1, 0);
  row_bilinear_begin_.assign(constraints_.size() + 1, 0);
  std::vector<std::size_t> cols;
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const auto& e = constraints_[r].expr;
    cols.clear();
    for (const auto& t : e.linear) cols.push_back(t.var);
    for (const auto& t : e.bilinear) {
      cols.push_back(t.a);
      cols.push_back(t.b);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    const auto base = jac_pattern_.size();
    for (auto c : cols) jac_pattern_.emplace_back(r, c);
    auto slot = [&](std::size_t var) {
      return base + static_cast<std::size_t>(
                        std::lower_bound(cols.begin(), cols.end(), var) - cols.begin());
    };
    row_linear_begin_[r] = jac_linear_slot_.size();
    row_bilinear_begin_[r] = jac_bilinear_slot_.size();
    for (const auto& t : e.linear) jac_linear_slot_.push_back(slot(t.var));
    for (const auto& t : e.bilinear) {
      jac_bilinear_slot_.push_back(slot(t.a));
      jac_bilinear_slot_.push_back(slot(t.b));
    }
  }
  row_linear_begin_.back() = jac_linear_slot_.size();
  row_bilinear_begin_.back() = jac_bilinear_slot_.size();

  hess_pattern_.clear();
  for (const auto& t : objective_.bilinear) hess_pattern_.push_back(lower_entry(t.a, t.b));
  for (const auto& c : constraints_) {
    for (const auto& t : c.expr.bilinear) hess_pattern_.push_back(lower_entry(t.a, t.b));
  }
  std::sort(hess_pattern_.begin(), hess_pattern_.end());
  hess_pattern_.erase(std::unique(hess_pattern_.begin(), hess_pattern_.end()),
                      hess_pattern_.end());
  auto hslot = [this](std::size_t a, std::size_t b) {
    auto key = lower_entry(a, b);
    return static_cast<std::size_t>(
        std::lower_bound(hess_pattern_.begin(), hess_pattern_.end(), key) -
        hess_pattern_.begin());
  };
  hess_obj_slot_.clear();
  for (const auto& t : objective_.bilinear) hess_obj_slot_.push_back(hslot(t.a, t.b));
  hess_row_slot_.clear();
  for (const auto& c : constraints_) {
    for (const auto& t : c.expr.bilinear) hess_row_slot_.push_back(hslot(t.a, t.b));
  }
}

namespace {

void require_size(std::span<const double> s, std::size_t n, const char* what) {
  if (s.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(n) + ", got " + std::to_string(s.size()));
  }
}

}  // namespace

double NlpProblem::objective(std::span<const double> x) const {
  require_size(x, n(), "objective");
  return evaluate(objective_, x);
}

void NlpProblem::gradient(std::span<const double> x, std::span<double> grad) const {
  require_size(x, n(), "gradient");
  if (grad.size() != n()) throw std::invalid_argument("gradient: output size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  for (const auto& t : objective_.linear) grad[t.var] += t.coef;
  for (const auto& t : objective_.bilinear) {
    grad[t.a] += t.coef * x[t.b];
    grad[t.b] += t.coef * x[t.a];
  }
}

void NlpProblem::constraints(std::span<const double> x, std::span<double> g) const {
  require_size(x, n(), "constraints");
  if (g.size() != m()) throw std::invalid_argument("constraints: output size mismatch");
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    g[r] = evaluate(constraints_[r].expr, x);
  }
}

void NlpProblem::jacobian(std::span<const double> x, std::span<double> values) const {
  require_size(x, n(), "jacobian");
  if (values.size() != jac_pattern_.size()) {
    throw std::invalid_argument("jacobian: output size mismatch");
  }
  std::fill(values.begin(), values.end(), 0.0);
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    const auto& e = constraints_[r].expr;
    const auto lb = row_linear_begin_[r];
    for (std::size_t k = 0; k < e.linear.size(); ++k) {
      values[jac_linear_slot_[lb + k]] += e.linear[k].coef;
    }
    const auto bb = row_bilinear_begin_[r];
    for (std::size_t k = 0; k < e.bilinear.size(); ++k) {
      const auto& t = e.bilinear[k];
      values[jac_bilinear_slot_[bb + 2 * k]] += t.coef * x[t.b];
      values[jac_bilinear_slot_[bb + 2 * k + 1]] += t.coef * x[t.a];
    }
  }
}

void NlpProblem::hessian(std::span<const double> x, double obj_factor,
                         std::span<const double> lambda,
                         std::span<double> values) const {
  require_size(x, n(), "hessian");
  require_size(lambda, m(), "hessian multipliers");
  if (values.size() != hess_pattern_.size()) {
    throw std::invalid_argument("hessian: output size mismatch");
  }
  std::fill(values.begin(), values.end(), 0.0);
  // A square term c*x^2 has second derivative 2c on the diagonal; a cross
  // term c*x_a*x_b has c in the (a, b) slot.
  auto weight = [](const BilinearTerm& t) { return t.a == t.b ? 2.0 * t.coef : t.coef; };
  for (std::size_t k = 0; k < objective_.bilinear.size(); ++k) {
    values[hess_obj_slot_[k]] += obj_factor * weight(objective_.bilinear[k]);
  }
  std::size_t slot = 0;
  for (std::size_t r = 0; r < constraints_.size(); ++r) {
    for (const auto& t : constraints_[r].expr.bilinear) {
      values[hess_row_slot_[slot++]] += lambda[r] * weight(t);
    }
  }
}

std::size_t NlpProblem::variable_index(const std::string& name) const {
  auto it = name_lookup_.find(name);
  if (it == name_lookup_.end()) throw std::out_of_range("unknown variable '" + name + "'");
  return it->second;
}

void NlpProblem::dump(std::ostream& os) const {
  auto bound = [&os](double v) {
    if (v <= -kBoundInf) {
      os << "-inf";
    } else if (v >= kBoundInf) {
      os << "inf";
    } else {
      os << v;
    }
  };
  auto expr = [&](const Expression& e) {
    for (const auto& t : e.linear) os << " " << t.coef << "*" << variables_[t.var].name;
    for (const auto& t : e.bilinear) {
      os << " " << t.coef << "*" << variables_[t.a].name << "*" << variables_[t.b].name;
    }
    if (e.constant != 0.0) os << " " << e.constant;
  };
  os << "# variables " << n() << "\n";
  for (std::size_t k = 0; k < n(); ++k) {
    const auto& v = variables_[k];
    os << "var " << k << " " << v.name << " scenario " << v.scenario << " [";
    bound(v.lower);
    os << ", ";
    bound(v.upper);
    os << "]\n";
  }
  os << "# constraints " << m() << "\n";
  for (std::size_t r = 0; r < m(); ++r) {
    const auto& c = constraints_[r];
    os << "con " << r << " " << c.name << " scenario " << c.scenario << " [";
    bound(c.lower);
    os << ", ";
    bound(c.upper);
    os << "] :";
    expr(c.expr);
    os << "\n";
  }
  os << "# objective\nobj :";
  expr(objective_);
  os << "\n# jacobian nnz " << jac_pattern_.size() << "\n";
  for (const auto& [r, c] : jac_pattern_) os << "J " << r << " " << c << "\n";
  os << "# hessian nnz " << hess_pattern_.size() << "\n";
  for (const auto& [r, c] : hess_pattern_) os << "H " << r << " " << c << "\n";
}

}  // namespace hvdc::nlp
