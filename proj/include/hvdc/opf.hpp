#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hvdc/converter.hpp"
#include "hvdc/grid.hpp"
#include "hvdc/nlp.hpp"
#include "hvdc/scenario.hpp"
#include "hvdc/stf.hpp"

namespace hvdc::opf {

using converter::NbMode;

struct OpfOptions {
  std::optional<int> nb;  // symmetric stations per state; default: all
  NbMode nb_mode = NbMode::Exact;
  std::optional<double> offset_limit_kv;
  std::vector<std::string> nls_candidates;
  std::optional<std::string> outage;  // single-state runs only
  // The faulted station of a contingency cannot balance its poles; when set
  // its beta is fixed to 0 and it uses up one asymmetric slot.
  bool faulted_counts_as_asymmetric = true;
  double cost_scale = 1e-3;
  // Bounds used by the relaxations of the binary layer.
  double neutral_voltage_bound_pu = 1.0;
};

struct ScenarioSet {
  std::vector<std::string> contingencies;  // pole converter ids
};

enum class BinaryKind { Beta, Gamma };

/// One entry of the binary catalogue.
struct BinaryVar {
  BinaryKind kind = BinaryKind::Beta;
  int scenario = 0;
  std::string element;  // station id or line id
  std::size_t element_index = 0;
  std::optional<int> fixed;  // forced value, if any

  std::string label() const;
};

/// Values for the whole catalogue, in catalogue order.
struct Assignment {
  std::vector<int> values;
  bool operator==(const Assignment&) const = default;
};

struct StationLayout {
  std::size_t station = 0;
  StationConfig config = StationConfig::BipolarWithDmr;
  std::vector<converter::PoleVars> poles;  // declaration order
  std::optional<converter::BipolarVars> bipolar;
};

struct ScenarioLayout {
  int scenario = 0;
  std::shared_ptr<const stf::TableauSystem> tableau;
  std::vector<std::size_t> node_voltage;    // per tableau node
  std::vector<std::size_t> node_injection;  // per tableau node
  std::vector<std::size_t> port_voltage;
  std::vector<std::size_t> port_current;
  std::vector<StationLayout> stations;  // per grid station
  std::vector<std::size_t> generation;  // per generator
};

struct Layout {
  std::vector<ScenarioLayout> scenarios;
  std::vector<std::size_t> reserve_up;    // per generator, security-constrained only
  std::vector<std::size_t> reserve_down;
  std::vector<std::size_t> binary_vars;   // relaxed instances only, catalogue order
};

/// A continuous program for one binary assignment (or a relaxation).
struct Instance {
  nlp::NlpProblem problem;
  Layout layout;
  std::vector<double> flat_start;
};

/// Continuous + binary program of one OPF or SCOPF study.
class MinlpProblem {
 public:
  MinlpProblem(Grid grid, std::vector<Scenario> scenarios, OpfOptions options,
               bool security_constrained);

  const Grid& grid() const { return grid_; }
  const std::vector<Scenario>& scenarios() const { return scenarios_; }
  const OpfOptions& options() const { return options_; }
  bool security_constrained() const { return security_constrained_; }
  int nb() const { return nb_; }

  const std::vector<BinaryVar>& catalogue() const { return catalogue_; }
  /// Catalogue positions belonging to one scenario.
  std::vector<std::size_t> catalogue_of(int scenario) const;

  /// Gamma statuses per grid line (1 for lines outside the catalogue).
  std::vector<double> line_status(const Assignment& assignment, int scenario) const;
  stf::Topology topology(const Assignment& assignment, int scenario) const;

  /// Program with all binaries fixed. Throws std::invalid_argument on a
  /// wrong-size assignment and stf::TopologyError when a neutral loses ground.
  Instance instantiate(const Assignment& assignment) const;

  /// Program with each binary relaxed to the given interval (big-M forms).
  Instance instantiate_relaxed(std::span<const std::pair<double, double>> bounds) const;

  /// Cost in currency of an objective value.
  double currency(double objective) const { return objective / options_.cost_scale; }

 private:
  Instance build(const Assignment* fixed,
                 std::span<const std::pair<double, double>> relaxed) const;

  Grid grid_;
  std::vector<Scenario> scenarios_;
  OpfOptions options_;
  bool security_constrained_ = false;
  int nb_ = 0;
  std::vector<BinaryVar> catalogue_;
};

/// Single-state OPF: the post-contingency state when options.outage is set.
MinlpProblem build_opf(const Grid& grid, const OpfOptions& options);

/// Base case plus one state per contingency, coupled through reserves.
/// Throws InputError for an empty or repeated contingency list.
MinlpProblem build_scopf(const Grid& grid, const ScenarioSet& scenarios,
                         const OpfOptions& options);

/// Quantities read back from a solved instance.
struct StationReport {
  std::string station;
  std::string config;
  bool symmetric = true;
  std::vector<std::pair<std::string, double>> pole_current_pu;  // terminal-1 current
  std::vector<std::pair<std::string, double>> pole_voltage_pu;
  std::vector<std::pair<std::string, double>> pole_power_pu;
  double dmr_current_pu = 0.0;
  double neutral_voltage_pu = 0.0;
  double neutral_offset_kv = 0.0;
};

std::vector<StationReport> station_reports(const MinlpProblem& problem,
                                           const Instance& instance,
                                           std::span<const double> x, int scenario,
                                           const Assignment* assignment);

/// Largest |neutral node voltage| over all scenarios, in kV.
double max_neutral_offset_kv(const MinlpProblem& problem, const Instance& instance,
                             std::span<const double> x);

/// Reserve cost component of the objective, in currency.
double reserve_cost(const MinlpProblem& problem, const Instance& instance,
                    std::span<const double> x);

/// Flat start: pole voltages 1 pu, neutral 0, currents and powers 0,
/// generators at mid-range.
std::vector<double> flat_start(const nlp::NlpProblem& problem, const Layout& layout,
                               const Grid& grid);

}  // namespace hvdc::opf
