#include "hvdc/grid.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "hvdc/detail/disjoint_sets.hpp"

namespace hvdc {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::PositivePole:
      return "positive-pole";
    case NodeKind::NegativePole:
      return "negative-pole";
    case NodeKind::Neutral:
      return "neutral";
  }
  return "?";
}

std::string_view to_string(ConductorRole role) {
  return role == ConductorRole::Pole ? "pole" : "neutral";
}

std::string_view to_string(StationConfig config) {
  switch (config) {
    case StationConfig::BipolarWithDmr:
      return "bipolar-with-dmr";
    case StationConfig::SymmetricMonopole:
      return "symmetric-monopole";
    case StationConfig::DcDc:
      return "dc-dc";
  }
  return "?";
}

Grid::Grid(GridData data) : data_(std::move(data)) {
  for (std::size_t k = 0; k < data_.dc_nodes.size(); ++k) {
    node_lookup_.emplace(data_.dc_nodes[k].id, k);
  }
  for (std::size_t k = 0; k < data_.dc_lines.size(); ++k) {
    line_lookup_.emplace(data_.dc_lines[k].id, k);
  }
  terminals_.resize(data_.dc_nodes.size());
  std::set<std::string> seen_buses;
  auto add_bus = [&](const std::string& bus) {
    if (!bus.empty() && seen_buses.insert(bus).second) ac_buses_.push_back(bus);
  };
  for (const auto& g : data_.generators) add_bus(g.bus);
  for (const auto& d : data_.demands) add_bus(d.bus);

  for (std::size_t s = 0; s < data_.converter_stations.size(); ++s) {
    const auto& station = data_.converter_stations[s];
    station_lookup_.emplace(station.id, s);
    if (station.config == StationConfig::BipolarWithDmr) {
      bipolar_stations_.push_back(s);
    }
    for (std::size_t p = 0; p < station.pole_converters.size(); ++p) {
      const auto& cv = station.pole_converters[p];
      pole_lookup_.emplace(cv.id, std::pair{s, p});
      add_bus(cv.ac_terminal);
      if (auto n = node_index(cv.dc_terminal_1)) {
        terminals_[*n].push_back({s, p, Terminal::One});
      }
      if (auto n = node_index(cv.dc_terminal_2)) {
        terminals_[*n].push_back({s, p, Terminal::Two});
      }
    }
  }
}

std::optional<std::size_t> Grid::node_index(std::string_view id) const {
  auto it = node_lookup_.find(std::string(id));
  if (it == node_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Grid::line_index(std::string_view id) const {
  auto it = line_lookup_.find(std::string(id));
  if (it == line_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Grid::station_index(std::string_view id) const {
  auto it = station_lookup_.find(std::string(id));
  if (it == station_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::pair<std::size_t, std::size_t>> Grid::pole_converter(
    std::string_view id) const {
  auto it = pole_lookup_.find(std::string(id));
  if (it == pole_lookup_.end()) return std::nullopt;
  return it->second;
}

const std::vector<TerminalRef>& Grid::terminals_at(std::size_t node) const {
  return terminals_.at(node);
}

namespace {

std::optional<std::size_t> pole_with_kind(const Grid& grid, std::size_t station,
                                          NodeKind kind) {
  const auto& poles = grid.converter_stations().at(station).pole_converters;
  for (std::size_t p = 0; p < poles.size(); ++p) {
    auto n = grid.node_index(poles[p].dc_terminal_1);
    if (n && grid.dc_nodes()[*n].kind == kind) return p;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::size_t> Grid::positive_pole(std::size_t station) const {
  return pole_with_kind(*this, station, NodeKind::PositivePole);
}

std::optional<std::size_t> Grid::negative_pole(std::size_t station) const {
  return pole_with_kind(*this, station, NodeKind::NegativePole);
}

double Grid::grounding_resistance_pu(std::size_t node) const {
  const auto& n = data_.dc_nodes.at(node);
  const double z_base = n.base_voltage_kv * n.base_voltage_kv / data_.base_power_mw;
  return n.grounding_resistance_ohm / z_base;
}

namespace {

class ViolationList {
 public:
  void add(std::string entity, std::string rule) {
    items_.push_back({std::move(entity), std::move(rule)});
  }
  std::vector<Violation> take() { return std::move(items_); }

 private:
  std::vector<Violation> items_;
};

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

template <typename Range, typename Key>
void check_unique(const Range& items, Key key, std::string_view what,
                  ViolationList& out) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    const std::string& id = key(item);
    if (id.empty()) {
      out.add(std::string(what), "id must be non-empty");
    } else if (!seen.insert(id).second) {
      out.add(std::string(what) + " " + id, "duplicate id");
    }
  }
}

bool is_pole(NodeKind k) { return k != NodeKind::Neutral; }

void check_nodes(const Grid& grid, ViolationList& out) {
  for (const auto& n : grid.dc_nodes()) {
    const std::string entity = "DcNode " + n.id;
    if (!std::isfinite(n.base_voltage_kv) || n.base_voltage_kv == 0.0) {
      out.add(entity, "base_voltage must be finite and non-zero");
    } else if (n.kind == NodeKind::NegativePole && n.base_voltage_kv > 0.0) {
      out.add(entity, "negative-pole node must carry a negative base voltage");
    } else if (n.kind != NodeKind::NegativePole && n.base_voltage_kv < 0.0) {
      out.add(entity, "positive-pole and neutral nodes must carry a positive base voltage");
    }
    if (n.grounded && !positive_finite(n.grounding_resistance_ohm)) {
      out.add(entity, "grounding_resistance must be finite and > 0");
    }
    if (is_pole(n.kind) &&
        !(std::isfinite(n.v_min_pu) && std::isfinite(n.v_max_pu) &&
          0.0 < n.v_min_pu && n.v_min_pu < n.v_max_pu)) {
      out.add(entity, "voltage band must satisfy 0 < v_min < v_max");
    }
  }
}

void check_branch_ends(const Grid& grid, const std::string& entity,
                       const std::string& from, const std::string& to,
                       ViolationList& out, std::optional<NodeKind>& kind) {
  auto a = grid.node_index(from);
  auto b = grid.node_index(to);
  if (!a) out.add(entity, "unknown from_node '" + from + "'");
  if (!b) out.add(entity, "unknown to_node '" + to + "'");
  if (!a || !b) return;
  if (*a == *b) out.add(entity, "endpoints must differ");
  const auto ka = grid.dc_nodes()[*a].kind;
  const auto kb = grid.dc_nodes()[*b].kind;
  if (ka != kb) {
    out.add(entity, "endpoint kinds must match (pole-to-pole of the same sign or "
                    "neutral-to-neutral)");
    return;
  }
  kind = ka;
}

void check_lines(const Grid& grid, ViolationList& out) {
  for (const auto& line : grid.dc_lines()) {
    const std::string entity = "DcLine " + line.id;
    if (!positive_finite(line.resistance_pu)) {
      out.add(entity, "resistance must be > 0");
    }
    std::optional<NodeKind> kind;
    check_branch_ends(grid, entity, line.from_node, line.to_node, out, kind);
    if (kind) {
      const bool neutral = *kind == NodeKind::Neutral;
      if (neutral != (line.conductor_role == ConductorRole::Neutral)) {
        out.add(entity, "conductor_role does not match endpoint kind");
      }
    }
  }
  for (const auto& sw : grid.dc_switches()) {
    std::optional<NodeKind> kind;
    check_branch_ends(grid, "DcSwitch " + sw.id, sw.from_node, sw.to_node, out,
                      kind);
  }
}

std::optional<NodeKind> kind_of(const Grid& grid, const std::string& id) {
  auto n = grid.node_index(id);
  if (!n) return std::nullopt;
  return grid.dc_nodes()[*n].kind;
}

void check_pole_terminals(const Grid& grid, const std::string& entity,
                          const PoleConverter& cv, NodeKind t1,
                          NodeKind t2, ViolationList& out) {
  auto k1 = kind_of(grid, cv.dc_terminal_1);
  auto k2 = kind_of(grid, cv.dc_terminal_2);
  if (!k1) out.add(entity, "unknown dc_terminal_1 '" + cv.dc_terminal_1 + "'");
  if (!k2) out.add(entity, "unknown dc_terminal_2 '" + cv.dc_terminal_2 + "'");
  if (k1 && *k1 != t1) {
    out.add(entity, "terminal kind mismatch: dc_terminal_1 must be a " +
                        std::string(to_string(t1)) + " node");
  }
  if (k2 && *k2 != t2) {
    out.add(entity, "terminal kind mismatch: dc_terminal_2 must be a " +
                        std::string(to_string(t2)) + " node");
  }
  if (!positive_finite(cv.current_limit_pu) || !positive_finite(cv.power_limit_pu)) {
    out.add(entity, "current and power limits must be > 0");
  }
}

void check_stations(const Grid& grid, ViolationList& out) {
  for (const auto& st : grid.converter_stations()) {
    const std::string entity = "ConverterStation " + st.id;
    const auto& poles = st.pole_converters;
    switch (st.config) {
      case StationConfig::BipolarWithDmr: {
        if (poles.size() != 2) {
          out.add(entity, "bipolar station needs exactly two pole converters");
          break;
        }
        auto kn = kind_of(grid, st.neutral_node);
        if (!kn) {
          out.add(entity, "unknown neutral_node '" + st.neutral_node + "'");
        } else if (*kn != NodeKind::Neutral) {
          out.add(entity, "neutral_node must be a neutral node");
        }
        // CV_a sits on the positive pole, CV_b on the negative pole.
        auto k0 = kind_of(grid, poles[0].dc_terminal_1);
        const bool first_positive = !k0 || *k0 != NodeKind::NegativePole;
        const auto& cva = first_positive ? poles[0] : poles[1];
        const auto& cvb = first_positive ? poles[1] : poles[0];
        check_pole_terminals(grid, entity + " pole " + cva.id, cva,
                             NodeKind::PositivePole, NodeKind::Neutral, out);
        check_pole_terminals(grid, entity + " pole " + cvb.id, cvb,
                             NodeKind::NegativePole, NodeKind::Neutral, out);
        for (const auto& cv : poles) {
          if (cv.dc_terminal_2 != st.neutral_node) {
            out.add(entity + " pole " + cv.id,
                    "dc_terminal_2 must be the station neutral node");
          }
          if (cv.ac_terminal.empty()) {
            out.add(entity + " pole " + cv.id, "ac_terminal required");
          }
        }
        break;
      }
      case StationConfig::SymmetricMonopole:
        if (poles.size() != 1) {
          out.add(entity, "symmetric monopole needs exactly one converter");
          break;
        }
        check_pole_terminals(grid, entity + " converter " + poles[0].id, poles[0],
                             NodeKind::PositivePole, NodeKind::NegativePole, out);
        if (poles[0].ac_terminal.empty()) {
          out.add(entity + " converter " + poles[0].id, "ac_terminal required");
        }
        break;
      case StationConfig::DcDc:
        if (poles.size() != 2) {
          out.add(entity, "dc-dc converter needs exactly two sides");
          break;
        }
        for (const auto& cv : poles) {
          check_pole_terminals(grid, entity + " side " + cv.id, cv,
                               NodeKind::PositivePole, NodeKind::NegativePole, out);
          if (!cv.ac_terminal.empty()) {
            out.add(entity + " side " + cv.id, "dc-dc sides have no ac_terminal");
          }
        }
        break;
    }
    if (st.config != StationConfig::BipolarWithDmr && !st.neutral_node.empty()) {
      out.add(entity, "neutral_node only applies to bipolar stations");
    }
  }
}

void check_injections(const Grid& grid, ViolationList& out) {
  std::set<std::string> supplied;
  for (const auto& g : grid.generators()) {
    const std::string entity = "Generator " + g.id;
    if (g.bus.empty()) out.add(entity, "bus required");
    supplied.insert(g.bus);
    if (!(std::isfinite(g.p_min_mw) && std::isfinite(g.p_max_mw) &&
          0.0 <= g.p_min_mw && g.p_min_mw <= g.p_max_mw)) {
      out.add(entity, "limits must satisfy 0 <= p_min <= p_max");
    }
    if (!(g.cost_per_mwh >= 0.0 && g.reserve_cost_up >= 0.0 &&
          g.reserve_cost_down >= 0.0)) {
      out.add(entity, "costs must be >= 0");
    }
    if (g.is_wind && g.cost_per_mwh != 0.0) {
      out.add(entity, "wind generation must have zero cost");
    }
  }
  for (const auto& st : grid.converter_stations()) {
    for (const auto& cv : st.pole_converters) supplied.insert(cv.ac_terminal);
  }
  for (const auto& d : grid.demands()) {
    const std::string entity = "Demand " + d.id;
    if (!std::isfinite(d.p_mw)) out.add(entity, "p_mw must be finite");
    if (!supplied.contains(d.bus)) {
      out.add(entity, "bus '" + d.bus + "' has no generator or converter");
    }
  }
}

void check_neutral_grounding(const Grid& grid, ViolationList& out) {
  const auto& nodes = grid.dc_nodes();
  detail::DisjointSets sets(nodes.size());
  auto join = [&](const std::string& a, const std::string& b) {
    auto ia = grid.node_index(a);
    auto ib = grid.node_index(b);
    if (ia && ib) sets.unite(*ia, *ib);
  };
  for (const auto& line : grid.dc_lines()) join(line.from_node, line.to_node);
  for (const auto& sw : grid.dc_switches()) {
    if (sw.closed) join(sw.from_node, sw.to_node);
  }
  std::set<std::size_t> grounded_roots;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].grounded) grounded_roots.insert(sets.find(k));
  }
  std::set<std::size_t> reported;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].kind != NodeKind::Neutral) continue;
    const auto root = sets.find(k);
    if (!grounded_roots.contains(root) && reported.insert(root).second) {
      out.add("DcNode " + nodes[k].id,
              "neutral subnetwork has no grounded node");
    }
  }
}

}  // namespace

std::vector<Violation> validate(const Grid& grid) {
  ViolationList out;
  const auto& d = grid.data();
  if (!positive_finite(d.base_power_mw)) {
    out.add("Grid " + d.name, "base_power must be > 0");
  }
  check_unique(d.dc_nodes, [](const DcNode& n) -> const std::string& { return n.id; },
               "DcNode", out);
  // Lines and switches share the element namespace used by topologies.
  std::vector<std::string> element_ids;
  for (const auto& l : d.dc_lines) element_ids.push_back(l.id);
  for (const auto& s : d.dc_switches) element_ids.push_back(s.id);
  check_unique(element_ids, [](const std::string& s) -> const std::string& { return s; },
               "DcLine/DcSwitch", out);
  check_unique(d.converter_stations,
               [](const ConverterStation& s) -> const std::string& { return s.id; },
               "ConverterStation", out);
  std::vector<std::string> pole_ids;
  for (const auto& s : d.converter_stations) {
    for (const auto& cv : s.pole_converters) pole_ids.push_back(cv.id);
  }
  check_unique(pole_ids, [](const std::string& s) -> const std::string& { return s; },
               "PoleConverter", out);
  check_unique(d.generators, [](const Generator& g) -> const std::string& { return g.id; },
               "Generator", out);
  check_unique(d.demands, [](const Demand& x) -> const std::string& { return x.id; },
               "Demand", out);

  check_nodes(grid, out);
  check_lines(grid, out);
  check_stations(grid, out);
  check_injections(grid, out);
  check_neutral_grounding(grid, out);
  return out.take();
}

void require_valid(const Grid& grid) {
  auto violations = validate(grid);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "grid '" << grid.name() << "' is invalid:";
  for (const auto& v : violations) msg << "\n  " << v.entity << ": " << v.rule;
  throw InputError(msg.str());
}

double per_unit(double value, double base) {
  if (base == 0.0) throw std::invalid_argument("per-unit base must be non-zero");
  return value / base;
}

double from_per_unit(double value_pu, double base) {
  if (base == 0.0) throw std::invalid_argument("per-unit base must be non-zero");
  return value_pu * base;
}

}  // namespace hvdc
