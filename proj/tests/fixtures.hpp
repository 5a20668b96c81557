#pragma once

#include <string>

#include "hvdc/grid.hpp"

namespace hvdc::testing {

inline DcNode node(std::string id, NodeKind kind, double base_kv, bool grounded = false,
                   double r_ground_ohm = 0.0) {
  DcNode n;
  n.id = std::move(id);
  n.kind = kind;
  n.base_voltage_kv = base_kv;
  n.grounded = grounded;
  n.grounding_resistance_ohm = r_ground_ohm;
  return n;
}

inline DcLine line(std::string id, std::string from, std::string to, double r_pu,
                   ConductorRole role = ConductorRole::Pole, bool switchable = false) {
  return DcLine{std::move(id), std::move(from), std::move(to), r_pu, role, switchable};
}

inline PoleConverter pole(std::string id, std::string bus, std::string t1, std::string t2,
                          double i_max = 2.0, double p_max = 2.0) {
  return PoleConverter{std::move(id), std::move(bus), std::move(t1), std::move(t2), i_max,
                       p_max};
}

// Two symmetric monopoles joined by one line per pole: a generator behind
// station 1, a load of `demand_mw` behind station 2.
inline Grid two_monopoles(double r_pu, double demand_mw, double cost = 50.0) {
  GridData d;
  d.name = "two-monopoles";
  d.dc_nodes = {node("A+", NodeKind::PositivePole, 200), node("A-", NodeKind::NegativePole, -200),
                node("B+", NodeKind::PositivePole, 200), node("B-", NodeKind::NegativePole, -200)};
  d.dc_lines = {line("L+", "A+", "B+", r_pu), line("L-", "A-", "B-", r_pu)};
  ConverterStation s1{"S1", StationConfig::SymmetricMonopole, {pole("S1", "bus1", "A+", "A-")}, ""};
  ConverterStation s2{"S2", StationConfig::SymmetricMonopole, {pole("S2", "bus2", "B+", "B-")}, ""};
  d.converter_stations = {s1, s2};
  d.generators = {Generator{"G1", "bus1", cost, 0, 0, 2000.0, 0.0, false}};
  d.demands = {Demand{"D2", "bus2", demand_mw}};
  return Grid(std::move(d));
}

// Two bipolar stations on a +-400 kV chain. The neutral of station 1 is
// grounded through r_ground_ohm; the neutral line carries the DMR return.
inline Grid bipolar_chain(double r_pole_pu, double r_neutral_pu, double r_ground_ohm,
                          double demand_mw) {
  GridData d;
  d.name = "bipolar-chain";
  d.dc_nodes = {node("P1", NodeKind::PositivePole, 400), node("N1", NodeKind::NegativePole, -400),
                node("M1", NodeKind::Neutral, 400, true, r_ground_ohm),
                node("P2", NodeKind::PositivePole, 400), node("N2", NodeKind::NegativePole, -400),
                node("M2", NodeKind::Neutral, 400)};
  d.dc_lines = {line("LP", "P1", "P2", r_pole_pu), line("LN", "N1", "N2", r_pole_pu),
                line("LM", "M1", "M2", r_neutral_pu, ConductorRole::Neutral, true)};
  d.converter_stations = {
      ConverterStation{"S1",
                       StationConfig::BipolarWithDmr,
                       {pole("S1a", "bus1", "P1", "M1"), pole("S1b", "bus1", "N1", "M1")},
                       "M1"},
      ConverterStation{"S2",
                       StationConfig::BipolarWithDmr,
                       {pole("S2a", "bus2", "P2", "M2"), pole("S2b", "bus2", "N2", "M2")},
                       "M2"}};
  d.generators = {Generator{"G1", "bus1", 40.0, 0, 0, 3000.0, 0.0, false}};
  d.demands = {Demand{"D2", "bus2", demand_mw}};
  return Grid(std::move(d));
}

}  // namespace hvdc::testing
