#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hvdc {

/// Raised for malformed inputs: bad references, schema problems, invariant
/// breaches detected before any numerical work starts.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { PositivePole, NegativePole, Neutral };
enum class ConductorRole { Pole, Neutral };
enum class StationConfig { BipolarWithDmr, SymmetricMonopole, DcDc };

std::string_view to_string(NodeKind kind);
std::string_view to_string(ConductorRole role);
std::string_view to_string(StationConfig config);

struct DcNode {
  std::string id;
  NodeKind kind = NodeKind::PositivePole;
  // Signed: negative-pole nodes carry the negated rated voltage so that a
  // healthy bipole has identical per-unit values on both poles.
  double base_voltage_kv = 0.0;
  bool grounded = false;
  double grounding_resistance_ohm = 0.0;
  // Operating band for pole nodes. Ignored for neutral nodes.
  double v_min_pu = 0.95;
  double v_max_pu = 1.05;

  bool operator==(const DcNode&) const = default;
};

struct DcLine {
  std::string id;
  std::string from_node;
  std::string to_node;
  double resistance_pu = 0.0;
  ConductorRole conductor_role = ConductorRole::Pole;
  bool switchable = false;

  bool operator==(const DcLine&) const = default;
};

struct DcSwitch {
  std::string id;
  std::string from_node;
  std::string to_node;
  bool closed = true;

  bool operator==(const DcSwitch&) const = default;
};

struct PoleConverter {
  std::string id;
  // Empty for DC-DC converter sides.
  std::string ac_terminal;
  std::string dc_terminal_1;
  std::string dc_terminal_2;
  double current_limit_pu = 0.0;
  double power_limit_pu = 0.0;

  bool operator==(const PoleConverter&) const = default;
};

struct ConverterStation {
  std::string id;
  StationConfig config = StationConfig::BipolarWithDmr;
  std::vector<PoleConverter> pole_converters;
  std::string neutral_node;  // bipolar only

  bool operator==(const ConverterStation&) const = default;
};

struct Generator {
  std::string id;
  std::string bus;
  double cost_per_mwh = 0.0;
  double reserve_cost_up = 0.0;
  double reserve_cost_down = 0.0;
  double p_max_mw = 0.0;
  double p_min_mw = 0.0;
  bool is_wind = false;

  bool operator==(const Generator&) const = default;
};

struct Demand {
  std::string id;
  std::string bus;
  double p_mw = 0.0;

  bool operator==(const Demand&) const = default;
};

/// Plain aggregate used to construct a Grid.
struct GridData {
  std::string name;
  double base_power_mw = 1000.0;
  std::string currency = "EUR";
  std::vector<DcNode> dc_nodes;
  std::vector<DcLine> dc_lines;
  std::vector<DcSwitch> dc_switches;
  std::vector<ConverterStation> converter_stations;
  std::vector<Generator> generators;
  std::vector<Demand> demands;

  bool operator==(const GridData&) const = default;
};

enum class Terminal { One = 1, Two = 2 };

/// One converter DC terminal attached to a node.
struct TerminalRef {
  std::size_t station = 0;
  std::size_t pole = 0;
  Terminal terminal = Terminal::One;

  bool operator==(const TerminalRef&) const = default;
};

/// Immutable multi-conductor AC/DC grid.
///
/// Construction never throws on invariant breaches; run validate() to list
/// them. Lookups return std::nullopt for unknown ids.
class Grid {
 public:
  Grid() = default;
  explicit Grid(GridData data);

  const GridData& data() const { return data_; }
  const std::string& name() const { return data_.name; }
  double base_power_mw() const { return data_.base_power_mw; }

  const std::vector<DcNode>& dc_nodes() const { return data_.dc_nodes; }
  const std::vector<DcLine>& dc_lines() const { return data_.dc_lines; }
  const std::vector<DcSwitch>& dc_switches() const { return data_.dc_switches; }
  const std::vector<ConverterStation>& converter_stations() const {
    return data_.converter_stations;
  }
  const std::vector<Generator>& generators() const { return data_.generators; }
  const std::vector<Demand>& demands() const { return data_.demands; }

  std::optional<std::size_t> node_index(std::string_view id) const;
  std::optional<std::size_t> line_index(std::string_view id) const;
  std::optional<std::size_t> station_index(std::string_view id) const;

  /// Pole converter lookup by converter id: (station, pole).
  std::optional<std::pair<std::size_t, std::size_t>> pole_converter(
      std::string_view id) const;

  /// Converter terminals attached to each DC node (the CV^1_m / CV^2_m sets,
  /// DC-DC sides included).
  const std::vector<TerminalRef>& terminals_at(std::size_t node) const;

  /// Indices of bipolar stations in declaration order.
  const std::vector<std::size_t>& bipolar_stations() const {
    return bipolar_stations_;
  }

  /// AC buses in first-seen order over generators, demands, converters.
  const std::vector<std::string>& ac_buses() const { return ac_buses_; }

  /// Index of the positive-pole (CV_a) converter of a bipolar station, if
  /// the terminal kinds identify one.
  std::optional<std::size_t> positive_pole(std::size_t station) const;
  std::optional<std::size_t> negative_pole(std::size_t station) const;

  /// Grounding resistance of a node in per-unit on its own base.
  double grounding_resistance_pu(std::size_t node) const;

  bool operator==(const Grid& other) const { return data_ == other.data_; }

 private:
  GridData data_;
  std::unordered_map<std::string, std::size_t> node_lookup_;
  std::unordered_map<std::string, std::size_t> line_lookup_;
  std::unordered_map<std::string, std::size_t> station_lookup_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>>
      pole_lookup_;
  std::vector<std::vector<TerminalRef>> terminals_;
  std::vector<std::size_t> bipolar_stations_;
  std::vector<std::string> ac_buses_;
};

struct Violation {
  std::string entity;
  std::string rule;

  bool operator==(const Violation&) const = default;
};

/// Lists every broken invariant. Empty iff the grid is well formed.
std::vector<Violation> validate(const Grid& grid);

/// Throws InputError listing all violations, if any.
void require_valid(const Grid& grid);

/// value / base. Throws std::invalid_argument on a zero base.
double per_unit(double value, double base);
double from_per_unit(double value_pu, double base);

}  // namespace hvdc
