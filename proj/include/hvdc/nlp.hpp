#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hvdc::nlp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Bounds at or beyond this magnitude are treated as absent.
inline constexpr double kBoundInf = 1e19;

struct Variable {
  std::string name;
  double lower = -kInf;
  double upper = kInf;
  int scenario = 0;
};

struct LinearTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

/// coef * x[a] * x[b]; a == b gives a square term.
struct BilinearTerm {
  std::size_t a = 0;
  std::size_t b = 0;
  double coef = 0.0;
};

/// Smooth function made of linear and bilinear terms plus a constant.
struct Expression {
  std::vector<LinearTerm> linear;
  std::vector<BilinearTerm> bilinear;
  double constant = 0.0;

  Expression& add(std::size_t var, double coef) {
    linear.push_back({var, coef});
    return *this;
  }
  Expression& add(std::size_t a, std::size_t b, double coef) {
    bilinear.push_back({a, b, coef});
    return *this;
  }
};

/// lower <= expr(x) <= upper; equality when lower == upper.
struct Constraint {
  std::string name;
  Expression expr;
  double lower = 0.0;
  double upper = 0.0;
  int scenario = 0;

  bool is_equality() const { return lower == upper; }
};

/// Bundle produced by the per-element constraint generators: new rows plus
/// tightened variable bounds.
struct ConstraintSet {
  struct BoundUpdate {
    std::size_t var = 0;
    double lower = -kInf;
    double upper = kInf;
  };

  std::vector<Constraint> rows;
  std::vector<BoundUpdate> bounds;

  ConstraintSet& append(ConstraintSet other);
};

class NlpProblem;

class NlpBuilder {
 public:
  std::size_t add_variable(std::string name, double lower, double upper,
                           int scenario = 0);
  std::size_t add_constraint(Constraint row);
  /// Intersects the current bounds with [lower, upper].
  void tighten_bounds(std::size_t var, double lower, double upper);
  void apply(const ConstraintSet& set);

  Expression& objective() { return objective_; }
  std::size_t variable_count() const { return variables_.size(); }
  std::size_t constraint_count() const { return constraints_.size(); }
  const Variable& variable(std::size_t k) const { return variables_.at(k); }

  /// Throws std::invalid_argument when a term references an unknown variable
  /// or a coefficient is not finite.
  NlpProblem build() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Expression objective_;
};

/// Immutable smooth program
///   min f(x)  s.t.  g_l <= g(x) <= g_u,  x_l <= x <= x_u
/// with f and g linear plus bilinear. Derivative patterns are fixed at
/// construction; evaluation is reentrant.
class NlpProblem {
 public:
  NlpProblem() = default;

  std::size_t n() const { return variables_.size(); }
  std::size_t m() const { return constraints_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Expression& objective_expression() const { return objective_; }

  double objective(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> grad) const;
  void constraints(std::span<const double> x, std::span<double> g) const;

  /// (row, col) pairs, row-major and sorted, no duplicates.
  const std::vector<std::pair<std::size_t, std::size_t>>& jacobian_pattern() const {
    return jac_pattern_;
  }
  void jacobian(std::span<const double> x, std::span<double> values) const;

  /// Lower triangle (row >= col) of the Lagrangian Hessian
  ///   obj_factor * grad^2 f + sum_k lambda_k grad^2 g_k.
  const std::vector<std::pair<std::size_t, std::size_t>>& hessian_pattern() const {
    return hess_pattern_;
  }
  void hessian(std::span<const double> x, double obj_factor,
               std::span<const double> lambda, std::span<double> values) const;

  /// Variable lookup by name; throws std::out_of_range if absent.
  std::size_t variable_index(const std::string& name) const;

  /// Structured text listing of variables, constraints and sparsity.
  void dump(std::ostream& os) const;

 private:
  friend class NlpBuilder;

  void finalize();

  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Expression objective_;

  std::vector<std::pair<std::size_t, std::size_t>> jac_pattern_;
  // Per linear term / bilinear term of each row: slot in the value array.
  std::vector<std::size_t> jac_linear_slot_;
  std::vector<std::size_t> jac_bilinear_slot_;  // two slots per term
  std::vector<std::size_t> row_linear_begin_;
  std::vector<std::size_t> row_bilinear_begin_;

  std::vector<std::pair<std::size_t, std::size_t>> hess_pattern_;
  std::vector<std::size_t> hess_obj_slot_;
  std::vector<std::size_t> hess_row_slot_;  // flattened over all bilinear terms
  std::unordered_map<std::string, std::size_t> name_lookup_;
};

}  // namespace hvdc::nlp
