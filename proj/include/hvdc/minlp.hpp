#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hvdc/ipm.hpp"
#include "hvdc/opf.hpp"
#include "hvdc/stf.hpp"

namespace hvdc::opf {

enum class Strategy { Enumerate, BranchAndBound };

std::string_view to_string(Strategy strategy);

struct MinlpOptions {
  Strategy strategy = Strategy::Enumerate;
  nlp::SolverOptions solver;
  nlp::MultiStartOptions multistart;
  int threads = 1;
  std::size_t enumeration_cap = std::size_t{1} << 16;
  int max_nodes = 10000;  // branch-and-bound only
  // Extra start by variable name, e.g. the optimum of a more restricted
  // case; names missing from an instance keep their flat-start values.
  std::vector<std::pair<std::string, double>> warm_start;
};

/// Named values of a solved instance, usable as MinlpOptions::warm_start.
std::vector<std::pair<std::string, double>> named_point(const nlp::NlpProblem& problem,
                                                        std::span<const double> x);

struct GuardResult {
  bool ok = true;
  std::vector<std::string> ungrounded;  // station ids

  explicit operator bool() const { return ok; }
};

/// Every neutral subnetwork holding a converter neutral terminal must still
/// reach a grounded node under the given line statuses.
GuardResult nls_guard(const Grid& grid, const stf::Topology& topology);

/// Assignments that satisfy the N_b rule, the fixed entries and the ground
/// guard of every state, in lexicographic catalogue order. Throws InputError
/// when the raw combination count exceeds `cap` (use branch-and-bound).
std::vector<Assignment> enumerate_assignments(const MinlpProblem& problem,
                                              std::size_t cap = std::size_t{1} << 16);

/// One solved (or rejected) assignment.
struct AssignmentResult {
  Assignment assignment;
  nlp::Status status = nlp::Status::Infeasible;
  double objective = 0.0;     // currency
  double reserve_cost = 0.0;  // currency
  double max_offset_kv = 0.0;
  double kkt_residual = 0.0;  // independent check, scaled
  int iterations = 0;
  std::string diagnostic;
};

struct MinlpSolution {
  nlp::Status status = nlp::Status::Infeasible;
  std::optional<Assignment> best;
  std::optional<Instance> instance;  // program of the best assignment
  nlp::Solution solution;            // continuous solution of the best assignment
  double objective = 0.0;            // currency
  std::vector<AssignmentResult> table;
  std::size_t explored = 0;  // NLPs solved
  std::vector<std::string> diagnostics;
};

MinlpSolution solve_minlp(const MinlpProblem& problem, const MinlpOptions& options = {});

/// Sorted ids of stations with beta = 0 in one state.
std::vector<std::string> asymmetric_set(const MinlpProblem& problem,
                                        const Assignment& assignment, int scenario);

/// Sorted ids of NLS candidates with gamma = 0 in one state.
std::vector<std::string> disconnected_lines(const MinlpProblem& problem,
                                            const Assignment& assignment, int scenario);

/// Compact text form, e.g. "s1:beta=Cb-A1:0,Cb-B1:1|gamma=LD-7:1".
std::string describe(const MinlpProblem& problem, const Assignment& assignment);

/// Per-assignment CSV:
///   assignment,status,objective,reserve_cost,max_offset_kv,kkt_residual,iterations,diagnostic
void write_assignment_table(std::ostream& os, const MinlpProblem& problem,
                            const MinlpSolution& solution);

}  // namespace hvdc::opf
