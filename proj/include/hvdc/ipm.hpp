#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hvdc/nlp.hpp"

namespace hvdc::nlp {

enum class Status { Optimal, Infeasible, IterationLimit };

std::string_view to_string(Status status);

struct SolverOptions {
  double tol = 1e-6;              // scaled KKT error
  double constr_viol_tol = 1e-8;  // absolute primal infeasibility
  double dual_inf_tol = 1.0;
  double compl_inf_tol = 1e-4;
  int max_iter = 200;
  double mu_init = 0.1;
  double mu_linear_decrease = 0.2;
  double mu_superlinear_power = 1.5;
  double barrier_tol_factor = 10.0;
  double tau_min = 0.995;
  double bound_push = 1e-2;
  double bound_frac = 1e-2;
  double s_max = 100.0;
  int max_soc = 4;
  bool allow_restoration = true;
  int max_restorations = 8;
  double restoration_penalty = 1000.0;

  /// Throws std::invalid_argument on non-positive tolerances or tau outside (0, 1).
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double inf_pr = 0.0;
  double inf_du = 0.0;
  double mu = 0.0;
  double alpha_pr = 0.0;
  double alpha_du = 0.0;
  double regularization = 0.0;
  int ls_trials = 0;
  // Smallest distance of any bounded primal component to its bound.
  double min_slack = 0.0;
  char kind = ' ';  // 'r' marks the step that left restoration
};

std::string format_log_header();
std::string format_log_line(const IterationRecord& record);

struct KktReport {
  double stationarity = 0.0;
  double feasibility = 0.0;
  double complementarity = 0.0;
  double sign_violation = 0.0;
  double scaled_stationarity = 0.0;
  double scaled_complementarity = 0.0;

  double max_scaled() const;
};

/// Multipliers follow L = f + lambda^T g - z_L^T (x - x_l) + z_U^T (x - x_u):
/// lambda_k >= 0 when row k sits at its upper bound, <= 0 at its lower bound.
struct Solution {
  Status status = Status::IterationLimit;
  std::vector<double> x;
  std::vector<double> lambda;
  std::vector<double> z_lower;
  std::vector<double> z_upper;
  double objective = 0.0;
  KktReport kkt;  // as claimed by the solver
  int iterations = 0;
  int restorations = 0;
  std::vector<IterationRecord> log;
  std::string message;
};

/// Primal-dual interior point method with filter line search. `start` must
/// have problem.n() entries; it is pushed into the bounds before iterating.
Solution solve(const NlpProblem& problem, std::span<const double> start,
               const SolverOptions& options = {});

/// Recomputes the KKT conditions from the problem callbacks and the given
/// point and multipliers only.
KktReport check_kkt(const NlpProblem& problem, std::span<const double> x,
                    std::span<const double> lambda, std::span<const double> z_lower,
                    std::span<const double> z_upper, double s_max = 100.0);
KktReport check_kkt(const NlpProblem& problem, const Solution& solution);

void write_log(std::ostream& os, const Solution& solution);

struct MultiStartOptions {
  int starts = 4;  // flat start plus starts - 1 perturbed ones
  std::uint64_t seed = 7;
  double perturbation = 0.1;
};

/// Deterministic perturbation of a start point, kept inside the bounds.
std::vector<double> perturbed_start(const NlpProblem& problem,
                                    std::span<const double> start,
                                    std::uint64_t seed, int index, double scale);

/// Solves from the flat start and the perturbed starts and keeps the best
/// optimal solution (lowest objective, earliest start on ties). When none is
/// optimal the flat-start result is returned.
Solution solve_multistart(const NlpProblem& problem, std::span<const double> start,
                          const SolverOptions& options, const MultiStartOptions& multi);

}  // namespace hvdc::nlp
