#include "hvdc/minlp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace hvdc::opf {

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::Enumerate ? "enumerate" : "branch-and-bound";
}

std::vector<std::pair<std::string, double>> named_point(const nlp::NlpProblem& problem,
                                                        std::span<const double> x) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(problem.n());
  for (std::size_t k = 0; k < problem.n() && k < x.size(); ++k) {
    out.emplace_back(problem.variables()[k].name, x[k]);
  }
  return out;
}

GuardResult nls_guard(const Grid& grid, const stf::Topology& topology) {
  GuardResult r;
  r.ungrounded = stf::ungrounded_neutral_stations(grid, topology);
  r.ok = r.ungrounded.empty();
  return r;
}

namespace {

// Valid local assignments of one state: values for its catalogue positions.
std::vector<std::vector<int>> local_assignments(const MinlpProblem& problem, int scenario,
                                                const std::vector<std::size_t>& positions,
                                                std::size_t cap) {
  const auto& cat = problem.catalogue();
  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (!cat[positions[k]].fixed) free.push_back(k);
  }
  if (free.size() >= 63 || (std::size_t{1} << free.size()) > cap) {
    throw InputError("state " + std::to_string(scenario) + " has " +
                     std::to_string(free.size()) +
                     " free binaries, beyond the enumeration cap; use branch-and-bound");
  }
  std::vector<std::vector<int>> out;
  const std::size_t total = std::size_t{1} << free.size();
  std::vector<int> values(positions.size());
  for (std::size_t mask = 0; mask < total; ++mask) {
    for (std::size_t k = 0; k < positions.size(); ++k) {
      values[k] = cat[positions[k]].fixed.value_or(0);
    }
    // Most significant bit on the first free entry gives lexicographic order.
    for (std::size_t f = 0; f < free.size(); ++f) {
      values[free[f]] = static_cast<int>((mask >> (free.size() - 1 - f)) & 1U);
    }
    std::vector<int> betas;
    stf::Topology topo;
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const auto& v = cat[positions[k]];
      if (v.kind == BinaryKind::Beta) {
        betas.push_back(values[k]);
      } else {
        topo.set(v.element, values[k]);
      }
    }
    if (!converter::satisfies_count(betas, problem.nb(), problem.options().nb_mode)) continue;
    if (!nls_guard(problem.grid(), topo)) continue;
    out.push_back(values);
  }
  return out;
}

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

// Orders equal-cost assignments: the lexicographically smallest asymmetric
// sets win, then the fewest disconnected lines.
std::vector<std::string> tie_key(const MinlpProblem& problem, const Assignment& a) {
  std::vector<std::string> key;
  for (std::size_t k = 0; k < problem.scenarios().size(); ++k) {
    for (auto& s : asymmetric_set(problem, a, static_cast<int>(k))) {
      key.push_back(std::to_string(k) + ":" + s);
    }
  }
  key.push_back("~");
  for (std::size_t k = 0; k < problem.scenarios().size(); ++k) {
    for (auto& s : disconnected_lines(problem, a, static_cast<int>(k))) {
      key.push_back(std::to_string(k) + ":" + s);
    }
  }
  return key;
}

bool better(const MinlpProblem& problem, const AssignmentResult& a, const AssignmentResult& b) {
  if (relative_gap(a.objective, b.objective) > 1e-9) return a.objective < b.objective;
  return tie_key(problem, a.assignment) < tie_key(problem, b.assignment);
}

struct Solved {
  AssignmentResult result;
  std::optional<Instance> instance;
  nlp::Solution solution;
};

// Flat start overwritten by the named warm-start values, clamped to bounds.
std::vector<double> warm_point(const Instance& inst, const MinlpOptions& options) {
  auto x = inst.flat_start;
  const auto& vars = inst.problem.variables();
  for (const auto& [name, value] : options.warm_start) {
    std::size_t k = 0;
    try {
      k = inst.problem.variable_index(name);
    } catch (const std::out_of_range&) {
      continue;
    }
    x[k] = std::clamp(value, vars[k].lower, vars[k].upper);
  }
  return x;
}

nlp::Solution solve_instance(const Instance& inst, const MinlpOptions& options) {
  auto sol = nlp::solve_multistart(inst.problem, inst.flat_start, options.solver,
                                   options.multistart);
  if (options.warm_start.empty()) return sol;
  auto warm = nlp::solve(inst.problem, warm_point(inst, options), options.solver);
  if (warm.status != nlp::Status::Optimal) return sol;
  if (sol.status != nlp::Status::Optimal ||
      warm.objective < sol.objective - 1e-9 * std::max(1.0, std::abs(sol.objective))) {
    return warm;
  }
  return sol;
}

Solved solve_assignment(const MinlpProblem& problem, const Assignment& a,
                        const MinlpOptions& options) {
  Solved out;
  out.result.assignment = a;
  try {
    auto inst = problem.instantiate(a);
    auto sol = solve_instance(inst, options);
    out.result.status = sol.status;
    out.result.iterations = sol.iterations;
    out.result.objective = problem.currency(sol.objective);
    out.result.kkt_residual = nlp::check_kkt(inst.problem, sol).max_scaled();
    if (sol.status == nlp::Status::Optimal) {
      out.result.reserve_cost = reserve_cost(problem, inst, sol.x);
      out.result.max_offset_kv = max_neutral_offset_kv(problem, inst, sol.x);
    } else {
      out.result.diagnostic = sol.message;
    }
    out.instance = std::move(inst);
    out.solution = std::move(sol);
  } catch (const stf::TopologyError& e) {
    out.result.status = nlp::Status::Infeasible;
    out.result.diagnostic = e.what();
  }
  return out;
}

void finish(const MinlpProblem& problem, MinlpSolution& out, std::optional<Solved> best,
            bool any_iteration_limit) {
  if (best) {
    out.status = nlp::Status::Optimal;
    out.best = best->result.assignment;
    out.objective = best->result.objective;
    out.instance = std::move(best->instance);
    out.solution = std::move(best->solution);
    return;
  }
  out.status = any_iteration_limit ? nlp::Status::IterationLimit : nlp::Status::Infeasible;
  if (out.table.empty()) {
    std::ostringstream msg;
    msg << "no binary assignment satisfies N_b = " << problem.nb();
    for (std::size_t k = 0; k < problem.scenarios().size(); ++k) {
      const auto& sc = problem.scenarios()[k];
      for (auto s : problem.grid().bipolar_stations()) {
        if (sc.overlay.station_outage(problem.grid(), s) &&
            problem.options().faulted_counts_as_asymmetric) {
          msg << "; faulted station " << problem.grid().converter_stations()[s].id
              << " cannot operate symmetrically in state '" << sc.name << "'";
        }
      }
    }
    out.diagnostics.push_back(msg.str());
  }
  for (const auto& r : out.table) {
    out.diagnostics.push_back(describe(problem, r.assignment) + ": " +
                              std::string(nlp::to_string(r.status)) +
                              (r.diagnostic.empty() ? "" : " (" + r.diagnostic + ")"));
  }
}

MinlpSolution run_enumeration(const MinlpProblem& problem, const MinlpOptions& options) {
  MinlpSolution out;
  const auto assignments = enumerate_assignments(problem, options.enumeration_cap);
  std::vector<Solved> solved(assignments.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < assignments.size(); k = next++) {
      solved[k] = solve_assignment(problem, assignments[k], options);
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads,
                                                static_cast<int>(assignments.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // Reduction in enumeration order keeps the result independent of timing.
  std::optional<std::size_t> best;
  bool any_limit = false;
  for (std::size_t k = 0; k < solved.size(); ++k) {
    out.table.push_back(solved[k].result);
    const auto& r = solved[k].result;
    any_limit = any_limit || r.status == nlp::Status::IterationLimit;
    if (r.status != nlp::Status::Optimal) continue;
    if (!best || better(problem, r, solved[*best].result)) best = k;
  }
  out.explored = assignments.size();
  std::optional<Solved> winner;
  if (best) winner = std::move(solved[*best]);
  finish(problem, out, std::move(winner), any_limit);
  return out;
}

// Depth-first branch-and-bound over the relaxed big-M programs.
class BranchAndBound {
 public:
  BranchAndBound(const MinlpProblem& problem, const MinlpOptions& options)
      : problem_(problem), options_(options) {}

  MinlpSolution run() {
    const auto& cat = problem_.catalogue();
    std::vector<std::pair<double, double>> root(cat.size(), {0.0, 1.0});
    for (std::size_t k = 0; k < cat.size(); ++k) {
      if (cat[k].fixed) root[k] = {double(*cat[k].fixed), double(*cat[k].fixed)};
    }
    stack_.push_back(root);
    while (!stack_.empty()) {
      if (static_cast<int>(out_.explored) >= options_.max_nodes) {
        out_.diagnostics.push_back("node limit reached");
        hit_limit_ = true;
        break;
      }
      auto node = std::move(stack_.back());
      stack_.pop_back();
      process(node);
    }
    finish(problem_, out_, std::move(incumbent_), hit_limit_);
    return std::move(out_);
  }

 private:
  bool all_fixed(const std::vector<std::pair<double, double>>& b) const {
    return std::all_of(b.begin(), b.end(), [](const auto& p) { return p.first == p.second; });
  }

  void leaf(const std::vector<std::pair<double, double>>& b) {
    Assignment a;
    for (const auto& p : b) a.values.push_back(static_cast<int>(std::lround(p.first)));
    for (const auto& seen : leaves_) {
      if (seen == a) return;
    }
    leaves_.push_back(a);
    // Count rule and ground guard on the integral point.
    for (std::size_t k = 0; k < problem_.scenarios().size(); ++k) {
      const int kk = static_cast<int>(k);
      std::vector<int> betas;
      for (auto pos : problem_.catalogue_of(kk)) {
        if (problem_.catalogue()[pos].kind == BinaryKind::Beta) betas.push_back(a.values[pos]);
      }
      if (!problem_.scenarios()[k].has_binaries) continue;
      if (!converter::satisfies_count(betas, problem_.nb(), problem_.options().nb_mode)) return;
      if (!nls_guard(problem_.grid(), problem_.topology(a, kk))) return;
    }
    auto s = solve_assignment(problem_, a, options_);
    ++out_.explored;
    out_.table.push_back(s.result);
    if (s.result.status == nlp::Status::IterationLimit) hit_limit_ = true;
    if (s.result.status != nlp::Status::Optimal) return;
    if (!incumbent_ || better(problem_, s.result, incumbent_->result)) incumbent_ = std::move(s);
  }

  void process(const std::vector<std::pair<double, double>>& b) {
    if (all_fixed(b)) {
      leaf(b);
      return;
    }
    const auto inst = problem_.instantiate_relaxed(b);
    const auto sol = solve_instance(inst, options_);
    ++out_.explored;
    if (sol.status != nlp::Status::Optimal) {
      if (sol.status == nlp::Status::IterationLimit) {
        // No bound available: branch anyway rather than lose the subtree.
        branch(b, inst, nullptr);
      }
      return;
    }
    const double bound = problem_.currency(sol.objective);
    if (incumbent_ && bound >= incumbent_->result.objective -
                                   1e-9 * std::max(1.0, std::abs(incumbent_->result.objective))) {
      return;
    }
    branch(b, inst, &sol.x);
  }

  void branch(const std::vector<std::pair<double, double>>& b, const Instance& inst,
              const std::vector<double>* x) {
    std::optional<std::size_t> pick;
    double best_frac = -1.0;
    double value = 0.5;
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (b[k].first == b[k].second) continue;
      const double v = x ? (*x)[inst.layout.binary_vars[k]] : 0.5;
      const double frac = 0.5 - std::abs(v - std::round(v));
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        pick = k;
        value = v;
      }
    }
    if (!pick) return;
    if (x && best_frac < 1e-6) {
      // Integral relaxation: its value is the best completion of the node.
      auto fixed = b;
      for (std::size_t k = 0; k < b.size(); ++k) {
        if (b[k].first != b[k].second) {
          const double v = std::round((*x)[inst.layout.binary_vars[k]]);
          fixed[k] = {v, v};
        }
      }
      leaf(fixed);
      // Other completions remain possible when the guard or count rule
      // rejects this one; keep exploring around it.
      if (incumbent_ && incumbent_->result.assignment == leaves_.back()) return;
    }
    auto down = b, up = b;
    down[*pick] = {0.0, 0.0};
    up[*pick] = {1.0, 1.0};
    // The child nearer to the relaxed value is explored first.
    if (value >= 0.5) {
      stack_.push_back(std::move(down));
      stack_.push_back(std::move(up));
    } else {
      stack_.push_back(std::move(up));
      stack_.push_back(std::move(down));
    }
  }

  const MinlpProblem& problem_;
  const MinlpOptions& options_;
  MinlpSolution out_;
  std::vector<std::vector<std::pair<double, double>>> stack_;
  std::vector<Assignment> leaves_;
  std::optional<Solved> incumbent_;
  bool hit_limit_ = false;
};

}  // namespace

std::vector<Assignment> enumerate_assignments(const MinlpProblem& problem, std::size_t cap) {
  const auto& cat = problem.catalogue();
  std::vector<std::vector<std::size_t>> positions;
  std::vector<std::vector<std::vector<int>>> locals;
  double total = 1.0;
  for (std::size_t k = 0; k < problem.scenarios().size(); ++k) {
    const int kk = static_cast<int>(k);
    if (!problem.scenarios()[k].has_binaries) continue;
    auto pos = problem.catalogue_of(kk);
    auto loc = local_assignments(problem, kk, pos, cap);
    total *= static_cast<double>(loc.size());
    positions.push_back(std::move(pos));
    locals.push_back(std::move(loc));
  }
  if (total > static_cast<double>(cap)) {
    throw InputError("enumeration would visit " + std::to_string(static_cast<long long>(total)) +
                     " joint assignments, above the cap of " + std::to_string(cap) +
                     "; use branch-and-bound");
  }
  std::vector<Assignment> out;
  if (total == 0.0) return out;
  std::vector<std::size_t> digit(locals.size(), 0);
  while (true) {
    Assignment a;
    a.values.assign(cat.size(), 0);
    for (std::size_t s = 0; s < locals.size(); ++s) {
      const auto& v = locals[s][digit[s]];
      for (std::size_t k = 0; k < positions[s].size(); ++k) a.values[positions[s][k]] = v[k];
    }
    out.push_back(std::move(a));
    // Odometer with the last state varying fastest.
    std::size_t s = locals.size();
    while (s > 0) {
      --s;
      if (++digit[s] < locals[s].size()) break;
      digit[s] = 0;
      if (s == 0) return out;
    }
    if (locals.empty()) return out;
  }
}

MinlpSolution solve_minlp(const MinlpProblem& problem, const MinlpOptions& options) {
  if (options.threads < 1) throw InputError("threads must be >= 1");
  options.solver.validate();
  if (options.strategy == Strategy::Enumerate) return run_enumeration(problem, options);
  return BranchAndBound(problem, options).run();
}

std::vector<std::string> asymmetric_set(const MinlpProblem& problem,
                                        const Assignment& assignment, int scenario) {
  std::vector<std::string> out;
  for (auto k : problem.catalogue_of(scenario)) {
    const auto& v = problem.catalogue()[k];
    if (v.kind == BinaryKind::Beta && assignment.values.at(k) == 0) out.push_back(v.element);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> disconnected_lines(const MinlpProblem& problem,
                                            const Assignment& assignment, int scenario) {
  std::vector<std::string> out;
  for (auto k : problem.catalogue_of(scenario)) {
    const auto& v = problem.catalogue()[k];
    if (v.kind == BinaryKind::Gamma && assignment.values.at(k) == 0) out.push_back(v.element);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string describe(const MinlpProblem& problem, const Assignment& assignment) {
  std::string out;
  for (std::size_t k = 0; k < problem.scenarios().size(); ++k) {
    const auto pos = problem.catalogue_of(static_cast<int>(k));
    if (pos.empty()) continue;
    std::string beta, gamma;
    for (auto p : pos) {
      const auto& v = problem.catalogue()[p];
      auto& dst = v.kind == BinaryKind::Beta ? beta : gamma;
      if (!dst.empty()) dst += ",";
      dst += v.element + ":" + std::to_string(assignment.values.at(p));
    }
    if (!out.empty()) out += " ";
    out += "s" + std::to_string(k) + ":beta=" + beta;
    if (!gamma.empty()) out += "|gamma=" + gamma;
  }
  return out.empty() ? "-" : out;
}

void write_assignment_table(std::ostream& os, const MinlpProblem& problem,
                            const MinlpSolution& solution) {
  os << "assignment,status,objective,reserve_cost,max_offset_kv,kkt_residual,iterations,"
        "diagnostic\n";
  char buf[256];
  for (const auto& r : solution.table) {
    std::string diag = r.diagnostic;
    std::replace(diag.begin(), diag.end(), '"', '\'');
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.3e,%d", r.objective, r.reserve_cost,
                  r.max_offset_kv, r.kkt_residual, r.iterations);
    os << '"' << describe(problem, r.assignment) << "\"," << nlp::to_string(r.status) << ','
       << buf << ",\"" << diag << "\"\n";
  }
}

}  // namespace hvdc::opf
