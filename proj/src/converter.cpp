#include "hvdc/converter.hpp"

#include <numeric>

namespace hvdc::converter {

namespace {

std::string name(const std::string& prefix, const std::string& id, const char* what) {
  std::string out = prefix;
  if (!out.empty()) out += ".";
  return out + id + "." + what;
}

nlp::Constraint equality(std::string label, nlp::Expression e, int scenario) {
  nlp::Constraint c;
  c.name = std::move(label);
  c.expr = std::move(e);
  c.lower = 0.0;
  c.upper = 0.0;
  c.scenario = scenario;
  return c;
}

// p - u1 i1 - u2 i2 = 0
nlp::Expression power_row(const PoleVars& v) {
  nlp::Expression e;
  e.add(v.p, 1.0).add(v.u1, v.i1, -1.0).add(v.u2, v.i2, -1.0);
  return e;
}

void add_limits(nlp::ConstraintSet& set, const PoleConverter& cv, const PoleVars& v) {
  set.bounds.push_back({v.i1, -cv.current_limit_pu, cv.current_limit_pu});
  set.bounds.push_back({v.i2, -cv.current_limit_pu, cv.current_limit_pu});
  set.bounds.push_back({v.p, -cv.power_limit_pu, cv.power_limit_pu});
}

void require_config(const ConverterStation& station, StationConfig config) {
  if (station.config != config) {
    throw InputError("station '" + station.id + "' is " +
                     std::string(to_string(station.config)) + ", expected " +
                     std::string(to_string(config)));
  }
}

}  // namespace

nlp::ConstraintSet bipolar_constraints(const Grid& grid, std::size_t station_index,
                                       const BipolarVars& v, bool symmetric,
                                       std::optional<Pole> outage, int scenario,
                                       const std::string& prefix) {
  const auto& station = grid.converter_stations().at(station_index);
  require_config(station, StationConfig::BipolarWithDmr);
  const auto pos = grid.positive_pole(station_index);
  const auto neg = grid.negative_pole(station_index);
  if (station.pole_converters.size() != 2 || !pos || !neg) {
    throw InputError("bipolar station '" + station.id +
                     "' needs one positive-pole and one negative-pole converter");
  }
  nlp::ConstraintSet set;
  const auto& id = station.id;
  {
    nlp::Expression e;
    e.add(v.a.i1, 1.0).add(v.a.i2, 1.0);
    set.rows.push_back(equality(name(prefix, id, "cva_current"), e, scenario));
  }
  {
    nlp::Expression e;
    e.add(v.b.i1, 1.0).add(v.b.i2, -1.0);
    set.rows.push_back(equality(name(prefix, id, "cvb_current"), e, scenario));
  }
  {
    nlp::Expression e;
    e.add(v.dmr, 1.0).add(v.a.i2, -1.0).add(v.b.i2, -1.0);
    set.rows.push_back(equality(name(prefix, id, "dmr_current"), e, scenario));
  }
  set.rows.push_back(equality(name(prefix, id, "cva_power"), power_row(v.a), scenario));
  set.rows.push_back(equality(name(prefix, id, "cvb_power"), power_row(v.b), scenario));
  if (symmetric) {
    nlp::Expression e;
    e.add(v.a.i2, 1.0).add(v.b.i2, 1.0);
    set.rows.push_back(equality(name(prefix, id, "symmetric"), e, scenario));
  }

  const PoleConverter& cva = station.pole_converters[*pos];
  const PoleConverter& cvb = station.pole_converters[*neg];
  const bool out_a = outage == Pole::A;
  const bool out_b = outage == Pole::B;
  if (out_a) {
    set.bounds.push_back({v.a.i1, 0.0, 0.0});
    set.bounds.push_back({v.a.i2, 0.0, 0.0});
  } else {
    add_limits(set, cva, v.a);
  }
  if (out_b) {
    set.bounds.push_back({v.b.i1, 0.0, 0.0});
    set.bounds.push_back({v.b.i2, 0.0, 0.0});
  } else {
    add_limits(set, cvb, v.b);
  }
  return set;
}

nlp::ConstraintSet symmetric_relaxation(const BipolarVars& v, std::size_t beta,
                                        double big_m, int scenario,
                                        const std::string& prefix) {
  nlp::ConstraintSet set;
  // i_a2 + i_b2 + M beta <= M  and  -(i_a2 + i_b2) + M beta <= M
  for (int sign : {1, -1}) {
    nlp::Constraint c;
    c.name = prefix + (sign > 0 ? ".symmetric_upper" : ".symmetric_lower");
    c.expr.add(v.a.i2, sign).add(v.b.i2, sign).add(beta, big_m);
    c.lower = -nlp::kInf;
    c.upper = big_m;
    c.scenario = scenario;
    set.rows.push_back(std::move(c));
  }
  return set;
}

nlp::ConstraintSet monopole_constraints(const ConverterStation& station,
                                        const PoleVars& v, int scenario,
                                        const std::string& prefix) {
  require_config(station, StationConfig::SymmetricMonopole);
  if (station.pole_converters.size() != 1) {
    throw InputError("monopole station '" + station.id + "' needs one converter");
  }
  nlp::ConstraintSet set;
  nlp::Expression e;
  e.add(v.i1, 1.0).add(v.i2, -1.0);
  set.rows.push_back(equality(name(prefix, station.id, "current"), e, scenario));
  set.rows.push_back(equality(name(prefix, station.id, "power"), power_row(v), scenario));
  add_limits(set, station.pole_converters[0], v);
  return set;
}

nlp::ConstraintSet dcdc_constraints(const ConverterStation& station, const PoleVars& a,
                                    const PoleVars& b, int scenario,
                                    const std::string& prefix) {
  require_config(station, StationConfig::DcDc);
  if (station.pole_converters.size() != 2) {
    throw InputError("dc-dc station '" + station.id + "' needs two sides");
  }
  nlp::ConstraintSet set;
  const PoleVars* sides[2] = {&a, &b};
  const char* labels[2] = {"side_a", "side_b"};
  for (int k = 0; k < 2; ++k) {
    const auto& v = *sides[k];
    nlp::Expression e;
    e.add(v.i1, 1.0).add(v.i2, -1.0);
    set.rows.push_back(equality(name(prefix, station.id, labels[k]) + "_current", e, scenario));
    set.rows.push_back(
        equality(name(prefix, station.id, labels[k]) + "_power", power_row(v), scenario));
    add_limits(set, station.pole_converters[static_cast<std::size_t>(k)], v);
  }
  nlp::Expression e;
  e.add(a.p, 1.0).add(b.p, 1.0);
  set.rows.push_back(equality(name(prefix, station.id, "transfer"), e, scenario));
  return set;
}

nlp::Constraint symmetric_count_constraint(std::span<const std::size_t> betas, int nb,
                                           NbMode mode, int scenario) {
  if (nb < 0 || nb > static_cast<int>(betas.size())) {
    throw InputError("N_b = " + std::to_string(nb) + " outside [0, " +
                     std::to_string(betas.size()) + "]");
  }
  nlp::Constraint c;
  c.name = "symmetric_count";
  for (auto b : betas) c.expr.add(b, 1.0);
  c.lower = nb;
  c.upper = mode == NbMode::Exact ? nb : nlp::kInf;
  c.scenario = scenario;
  return c;
}

bool satisfies_count(std::span<const int> betas, int nb, NbMode mode) {
  const int sum = std::accumulate(betas.begin(), betas.end(), 0);
  return mode == NbMode::Exact ? sum == nb : sum >= nb;
}

double neutral_offset_kv(const Grid& grid, std::size_t station, double neutral_voltage_pu) {
  const auto& st = grid.converter_stations().at(station);
  const auto n = grid.node_index(st.neutral_node);
  if (!n) throw InputError("station '" + st.id + "' has no neutral node");
  return from_per_unit(neutral_voltage_pu, grid.dc_nodes()[*n].base_voltage_kv);
}

BipolarState bipolar_state(std::span<const double> x, const BipolarVars& v) {
  BipolarState s;
  s.i_a1 = x[v.a.i1];
  s.i_a2 = x[v.a.i2];
  s.i_b1 = x[v.b.i1];
  s.i_b2 = x[v.b.i2];
  s.dmr = x[v.dmr];
  s.u_a1 = x[v.a.u1];
  s.u_b1 = x[v.b.u1];
  s.u_0 = x[v.a.u2];
  s.p_a = x[v.a.p];
  s.p_b = x[v.b.p];
  return s;
}

}  // namespace hvdc::converter
