#include "hvdc/opf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hvdc::opf {

std::string BinaryVar::label() const {
  return std::string(kind == BinaryKind::Beta ? "beta" : "gamma") + "[" +
         std::to_string(scenario) + "," + element + "]";
}

namespace {

std::vector<std::size_t> sorted_by_id(const std::vector<std::size_t>& items,
                                      const auto& id_of) {
  std::vector<std::size_t> out = items;
  std::sort(out.begin(), out.end(),
            [&](std::size_t a, std::size_t b) { return id_of(a) < id_of(b); });
  return out;
}

}  // namespace

MinlpProblem::MinlpProblem(Grid grid, std::vector<Scenario> scenarios, OpfOptions options,
                           bool security_constrained)
    : grid_(std::move(grid)),
      scenarios_(std::move(scenarios)),
      options_(std::move(options)),
      security_constrained_(security_constrained) {
  require_valid(grid_);
  if (scenarios_.empty()) throw InputError("at least one operating state is required");
  if (!(options_.cost_scale > 0.0)) throw InputError("cost_scale must be positive");
  const auto& bip = grid_.bipolar_stations();
  const int n_bip = static_cast<int>(bip.size());
  nb_ = options_.nb.value_or(n_bip);
  if (nb_ < 0 || nb_ > n_bip) {
    throw InputError("N_b = " + std::to_string(nb_) + " outside [0, " + std::to_string(n_bip) +
                     "] for a grid with " + std::to_string(n_bip) + " bipolar stations");
  }
  if (options_.offset_limit_kv && !(*options_.offset_limit_kv > 0.0)) {
    throw InputError("offset limit must be positive");
  }

  std::vector<std::size_t> candidates;
  std::set<std::string> seen;
  for (const auto& id : options_.nls_candidates) {
    const auto li = grid_.line_index(id);
    if (!li) throw InputError("NLS candidate '" + id + "' is not a DC line");
    if (grid_.dc_lines()[*li].conductor_role != ConductorRole::Neutral) {
      throw InputError("NLS candidate '" + id + "' is not a neutral conductor");
    }
    if (!seen.insert(id).second) throw InputError("NLS candidate '" + id + "' repeated");
    candidates.push_back(*li);
  }
  const auto stations = sorted_by_id(
      bip, [this](std::size_t s) { return grid_.converter_stations()[s].id; });
  candidates = sorted_by_id(candidates, [this](std::size_t l) { return grid_.dc_lines()[l].id; });

  for (std::size_t k = 0; k < scenarios_.size(); ++k) {
    const auto& sc = scenarios_[k];
    if (!sc.has_binaries) continue;
    for (auto s : stations) {
      BinaryVar v;
      v.kind = BinaryKind::Beta;
      v.scenario = static_cast<int>(k);
      v.element = grid_.converter_stations()[s].id;
      v.element_index = s;
      if (options_.faulted_counts_as_asymmetric && sc.overlay.station_outage(grid_, s)) {
        v.fixed = 0;
      }
      catalogue_.push_back(std::move(v));
    }
    for (auto l : candidates) {
      BinaryVar v;
      v.kind = BinaryKind::Gamma;
      v.scenario = static_cast<int>(k);
      v.element = grid_.dc_lines()[l].id;
      v.element_index = l;
      catalogue_.push_back(std::move(v));
    }
  }
}

std::vector<std::size_t> MinlpProblem::catalogue_of(int scenario) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < catalogue_.size(); ++k) {
    if (catalogue_[k].scenario == scenario) out.push_back(k);
  }
  return out;
}

std::vector<double> MinlpProblem::line_status(const Assignment& a, int scenario) const {
  std::vector<double> status(grid_.dc_lines().size(), 1.0);
  for (std::size_t k = 0; k < catalogue_.size(); ++k) {
    const auto& v = catalogue_[k];
    if (v.scenario == scenario && v.kind == BinaryKind::Gamma) {
      status[v.element_index] = a.values.at(k);
    }
  }
  return status;
}

stf::Topology MinlpProblem::topology(const Assignment& a, int scenario) const {
  stf::Topology t;
  for (std::size_t k = 0; k < catalogue_.size(); ++k) {
    const auto& v = catalogue_[k];
    if (v.scenario == scenario && v.kind == BinaryKind::Gamma) {
      t.set(v.element, a.values.at(k));
    }
  }
  return t;
}

Instance MinlpProblem::instantiate(const Assignment& assignment) const {
  if (assignment.values.size() != catalogue_.size()) {
    throw std::invalid_argument("assignment has " + std::to_string(assignment.values.size()) +
                                " values, catalogue has " + std::to_string(catalogue_.size()));
  }
  for (std::size_t k = 0; k < catalogue_.size(); ++k) {
    const int v = assignment.values[k];
    if (v != 0 && v != 1) throw std::invalid_argument("binary values must be 0 or 1");
  }
  return build(&assignment, {});
}

Instance MinlpProblem::instantiate_relaxed(
    std::span<const std::pair<double, double>> bounds) const {
  if (bounds.size() != catalogue_.size()) {
    throw std::invalid_argument("relaxation bounds do not match the catalogue");
  }
  return build(nullptr, bounds);
}

Instance MinlpProblem::build(const Assignment* fixed,
                             std::span<const std::pair<double, double>> relaxed) const {
  nlp::NlpBuilder b;
  Layout layout;
  const double s_base = grid_.base_power_mw();
  const auto& nodes = grid_.dc_nodes();
  const auto& stations = grid_.converter_stations();

  if (!fixed) {
    for (std::size_t k = 0; k < catalogue_.size(); ++k) {
      layout.binary_vars.push_back(
          b.add_variable("bin." + catalogue_[k].label(), relaxed[k].first, relaxed[k].second,
                         catalogue_[k].scenario));
    }
  }

  // Big-M constants for the relaxed forms.
  double current_cap = 0.0;
  for (auto s : grid_.bipolar_stations()) {
    for (const auto& cv : stations[s].pole_converters) current_cap += cv.current_limit_pu;
  }

  auto equality = [&](std::string name, nlp::Expression e, int scenario) {
    nlp::Constraint c;
    c.name = std::move(name);
    c.expr = std::move(e);
    c.scenario = scenario;
    b.add_constraint(std::move(c));
  };
  auto at_most = [&](std::string name, nlp::Expression e, double upper, int scenario) {
    nlp::Constraint c;
    c.name = std::move(name);
    c.expr = std::move(e);
    c.lower = -nlp::kInf;
    c.upper = upper;
    c.scenario = scenario;
    b.add_constraint(std::move(c));
  };

  for (std::size_t k = 0; k < scenarios_.size(); ++k) {
    const int kk = static_cast<int>(k);
    const auto& sc = scenarios_[k];
    const std::string pre = "s" + std::to_string(k) + ".";
    ScenarioLayout sl;
    sl.scenario = kk;

    // Binary values (or relaxed variables) of this state.
    std::map<std::size_t, int> beta_value;          // station -> value
    std::map<std::size_t, std::size_t> beta_var;    // station -> variable
    std::map<std::size_t, int> gamma_value;         // line -> value
    std::map<std::size_t, std::size_t> gamma_var;   // line -> variable
    stf::Topology topo;
    for (std::size_t c = 0; c < catalogue_.size(); ++c) {
      const auto& v = catalogue_[c];
      if (v.scenario != kk) continue;
      if (v.kind == BinaryKind::Beta) {
        if (fixed) {
          beta_value[v.element_index] = fixed->values[c];
        } else {
          beta_var[v.element_index] = layout.binary_vars[c];
        }
      } else {
        if (fixed) {
          gamma_value[v.element_index] = fixed->values[c];
          topo.set(v.element, fixed->values[c]);
        } else {
          gamma_var[v.element_index] = layout.binary_vars[c];
        }
      }
    }
    sl.tableau = std::make_shared<const stf::TableauSystem>(stf::assemble_tableau(grid_, topo));
    const auto& tab = *sl.tableau;
    const auto n_tab = tab.node_count();
    std::vector<bool> is_reference(n_tab, false);
    for (auto r : tab.reference_nodes()) is_reference[r] = true;

    // Node voltages and injections.
    for (std::size_t m = 0; m < n_tab; ++m) {
      double lo = -nlp::kInf, hi = nlp::kInf;
      if (m < nodes.size() && nodes[m].kind != NodeKind::Neutral) {
        lo = nodes[m].v_min_pu;
        hi = nodes[m].v_max_pu;
      }
      sl.node_voltage.push_back(b.add_variable(pre + "U." + tab.node_ids()[m], lo, hi, kk));
    }
    for (std::size_t m = 0; m < n_tab; ++m) {
      sl.node_injection.push_back(
          b.add_variable(pre + "I." + tab.node_ids()[m], -nlp::kInf, nlp::kInf, kk));
    }
    for (std::size_t e = 0; e < tab.element_count(); ++e) {
      for (const char* side : {"i", "j"}) {
        const std::string tag = tab.elements()[e].id + "." + side;
        sl.port_voltage.push_back(b.add_variable(pre + "u." + tag, -nlp::kInf, nlp::kInf, kk));
        sl.port_current.push_back(b.add_variable(pre + "i." + tag, -nlp::kInf, nlp::kInf, kk));
      }
    }

    // A i = I
    std::vector<nlp::Expression> kcl(n_tab);
    for (std::size_t m = 0; m < n_tab; ++m) kcl[m].add(sl.node_injection[m], 1.0);
    for (std::size_t p = 0; p < tab.port_count(); ++p) {
      kcl[tab.port_node(p)].add(sl.port_current[p], -1.0);
    }
    for (std::size_t m = 0; m < n_tab; ++m) {
      equality(pre + "kcl." + tab.node_ids()[m], std::move(kcl[m]), kk);
    }
    // Reference voltages pinned by explicit rows.
    for (auto r : tab.reference_nodes()) {
      nlp::Expression e;
      e.add(sl.node_voltage[r], 1.0);
      equality(pre + "ref." + tab.node_ids()[r], std::move(e), kk);
    }
    // u = A^T U
    for (std::size_t p = 0; p < tab.port_count(); ++p) {
      nlp::Expression e;
      e.add(sl.port_voltage[p], 1.0).add(sl.node_voltage[tab.port_node(p)], -1.0);
      equality(pre + "kvl." + std::to_string(p), std::move(e), kk);
    }
    // F_u u + F_i i = 0, or the big-M form for relaxed line statuses.
    for (std::size_t e = 0; e < tab.element_count(); ++e) {
      const auto& el = tab.elements()[e];
      const auto ui = sl.port_voltage[2 * e], uj = sl.port_voltage[2 * e + 1];
      const auto ii = sl.port_current[2 * e], ij = sl.port_current[2 * e + 1];
      std::optional<std::size_t> gvar;
      if (el.kind == stf::ElementKind::Line) {
        const auto li = grid_.line_index(el.id);
        if (li && gamma_var.contains(*li)) gvar = gamma_var.at(*li);
      }
      if (gvar) {
        const double m_i = std::max(current_cap, 1.0);
        const double m_v = 2.0 * options_.neutral_voltage_bound_pu + el.resistance_pu * m_i;
        nlp::Expression cont;
        cont.add(ii, 1.0).add(ij, 1.0);
        equality(pre + "line." + el.id + ".continuity", std::move(cont), kk);
        for (int sign : {1, -1}) {
          nlp::Expression cap;
          cap.add(ii, sign).add(*gvar, -m_i);
          at_most(pre + "line." + el.id + (sign > 0 ? ".cap_hi" : ".cap_lo"), std::move(cap),
                  0.0, kk);
          nlp::Expression ohm;
          ohm.add(ui, sign).add(uj, -sign).add(ij, sign * el.resistance_pu).add(*gvar, m_v);
          at_most(pre + "line." + el.id + (sign > 0 ? ".ohm_hi" : ".ohm_lo"), std::move(ohm),
                  m_v, kk);
        }
        continue;
      }
      const auto& st = el.stamp;
      const std::size_t us[2] = {ui, uj};
      const std::size_t is[2] = {ii, ij};
      for (int r = 0; r < 2; ++r) {
        nlp::Expression row;
        for (int c = 0; c < 2; ++c) {
          if (st.f_u(r, c) != 0.0) row.add(us[c], st.f_u(r, c));
          if (st.f_i(r, c) != 0.0) row.add(is[c], st.f_i(r, c));
        }
        equality(pre + "elem." + el.id + "." + std::to_string(r), std::move(row), kk);
      }
    }

    // Converter stations.
    std::vector<std::vector<std::size_t>> node_terminal_currents(nodes.size());
    for (std::size_t s = 0; s < stations.size(); ++s) {
      const auto& st = stations[s];
      StationLayout lay;
      lay.station = s;
      lay.config = st.config;
      for (const auto& cv : st.pole_converters) {
        converter::PoleVars pv;
        pv.u1 = sl.node_voltage[*grid_.node_index(cv.dc_terminal_1)];
        pv.u2 = sl.node_voltage[*grid_.node_index(cv.dc_terminal_2)];
        pv.i1 = b.add_variable(pre + "icv1." + cv.id, -nlp::kInf, nlp::kInf, kk);
        pv.i2 = b.add_variable(pre + "icv2." + cv.id, -nlp::kInf, nlp::kInf, kk);
        pv.p = b.add_variable(pre + "pcv." + cv.id, -nlp::kInf, nlp::kInf, kk);
        node_terminal_currents[*grid_.node_index(cv.dc_terminal_1)].push_back(pv.i1);
        node_terminal_currents[*grid_.node_index(cv.dc_terminal_2)].push_back(pv.i2);
        lay.poles.push_back(pv);
      }
      const std::string spre = "s" + std::to_string(k);
      switch (st.config) {
        case StationConfig::BipolarWithDmr: {
          converter::BipolarVars bv;
          bv.a = lay.poles[*grid_.positive_pole(s)];
          bv.b = lay.poles[*grid_.negative_pole(s)];
          bv.dmr = b.add_variable(pre + "idmr." + st.id, -nlp::kInf, nlp::kInf, kk);
          lay.bipolar = bv;
          const auto outage = sc.overlay.station_outage(grid_, s);
          if (!sc.has_binaries) {
            b.apply(converter::bipolar_constraints(grid_, s, bv, true, outage, kk, spre));
          } else if (fixed) {
            b.apply(converter::bipolar_constraints(grid_, s, bv, beta_value.at(s) == 1, outage,
                                                   kk, spre));
          } else {
            b.apply(converter::bipolar_constraints(grid_, s, bv, false, outage, kk, spre));
            double cap = 0.0;
            for (const auto& cv : st.pole_converters) cap += cv.current_limit_pu;
            b.apply(converter::symmetric_relaxation(bv, beta_var.at(s), cap, kk,
                                                    spre + "." + st.id));
          }
          break;
        }
        case StationConfig::SymmetricMonopole:
          b.apply(converter::monopole_constraints(st, lay.poles[0], kk, spre));
          break;
        case StationConfig::DcDc:
          b.apply(converter::dcdc_constraints(st, lay.poles[0], lay.poles[1], kk, spre));
          break;
      }
      sl.stations.push_back(std::move(lay));
    }
    if (!fixed && sc.has_binaries) {
      std::vector<std::size_t> betas;
      for (const auto& [s, v] : beta_var) betas.push_back(v);
      auto row = converter::symmetric_count_constraint(betas, nb_, options_.nb_mode, kk);
      row.name = pre + row.name;
      b.add_constraint(std::move(row));
    }

    // I_m + sum of converter terminal currents = 0 at every non-reference node.
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (is_reference[m]) continue;
      nlp::Expression e;
      e.add(sl.node_injection[m], 1.0);
      for (auto v : node_terminal_currents[m]) e.add(v, 1.0);
      equality(pre + "balance." + nodes[m].id, std::move(e), kk);
    }

    // Generators and AC bus balance.
    for (const auto& g : grid_.generators()) {
      sl.generation.push_back(
          b.add_variable(pre + "pg." + g.id, g.p_min_mw / s_base, g.p_max_mw / s_base, kk));
    }
    for (const auto& bus : grid_.ac_buses()) {
      nlp::Expression e;
      for (std::size_t g = 0; g < grid_.generators().size(); ++g) {
        if (grid_.generators()[g].bus == bus) e.add(sl.generation[g], 1.0);
      }
      for (std::size_t s = 0; s < stations.size(); ++s) {
        for (std::size_t p = 0; p < stations[s].pole_converters.size(); ++p) {
          if (stations[s].pole_converters[p].ac_terminal == bus) {
            e.add(sl.stations[s].poles[p].p, 1.0);
          }
        }
      }
      for (const auto& d : grid_.demands()) {
        if (d.bus == bus) e.constant -= d.p_mw / s_base;
      }
      equality(pre + "ac_balance." + bus, std::move(e), kk);
    }

    // Neutral offset box, one row per side.
    if (options_.offset_limit_kv) {
      for (std::size_t m = 0; m < nodes.size(); ++m) {
        if (nodes[m].kind != NodeKind::Neutral) continue;
        const double limit = *options_.offset_limit_kv / std::abs(nodes[m].base_voltage_kv);
        for (int sign : {1, -1}) {
          nlp::Expression e;
          e.add(sl.node_voltage[m], sign);
          at_most(pre + "offset." + nodes[m].id + (sign > 0 ? ".hi" : ".lo"), std::move(e),
                  limit, kk);
        }
      }
    }
    layout.scenarios.push_back(std::move(sl));
  }

  // Objective: energy cost of the first state, plus reserves when coupled.
  const double scale = options_.cost_scale * s_base;
  const auto& gens = grid_.generators();
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (gens[g].cost_per_mwh != 0.0) {
      b.objective().add(layout.scenarios[0].generation[g], gens[g].cost_per_mwh * scale);
    }
  }
  if (security_constrained_) {
    for (std::size_t g = 0; g < gens.size(); ++g) {
      const double pmax = gens[g].p_max_mw / s_base;
      const auto up = b.add_variable("reserve_up." + gens[g].id, 0.0, nlp::kInf, 0);
      const auto down = b.add_variable("reserve_down." + gens[g].id, 0.0, nlp::kInf, 0);
      layout.reserve_up.push_back(up);
      layout.reserve_down.push_back(down);
      if (gens[g].reserve_cost_up != 0.0) b.objective().add(up, gens[g].reserve_cost_up * scale);
      if (gens[g].reserve_cost_down != 0.0) {
        b.objective().add(down, gens[g].reserve_cost_down * scale);
      }
      const auto p0 = layout.scenarios[0].generation[g];
      for (std::size_t k = 1; k < layout.scenarios.size(); ++k) {
        const auto pk = layout.scenarios[k].generation[g];
        const int kk = static_cast<int>(k);
        nlp::Expression e_up;
        e_up.add(pk, 1.0).add(p0, -1.0).add(up, -1.0);
        at_most("s" + std::to_string(k) + ".reserve_up." + gens[g].id, std::move(e_up), 0.0, kk);
        nlp::Expression e_down;
        e_down.add(p0, 1.0).add(pk, -1.0).add(down, -1.0);
        at_most("s" + std::to_string(k) + ".reserve_down." + gens[g].id, std::move(e_down), 0.0,
                kk);
      }
      nlp::Expression h;
      h.add(up, 1.0).add(p0, 1.0);
      at_most("reserve_up_headroom." + gens[g].id, std::move(h), pmax, 0);
      nlp::Expression i;
      i.add(down, 1.0).add(p0, -1.0);
      at_most("reserve_down_headroom." + gens[g].id, std::move(i), 0.0, 0);
    }
  }

  Instance inst;
  inst.problem = b.build();
  inst.layout = std::move(layout);
  inst.flat_start = flat_start(inst.problem, inst.layout, grid_);
  return inst;
}

std::vector<double> flat_start(const nlp::NlpProblem& problem, const Layout& layout,
                               const Grid& grid) {
  std::vector<double> x(problem.n(), 0.0);
  const auto& nodes = grid.dc_nodes();
  for (const auto& sl : layout.scenarios) {
    const auto& tab = *sl.tableau;
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (nodes[m].kind != NodeKind::Neutral) x[sl.node_voltage[m]] = 1.0;
    }
    for (std::size_t p = 0; p < tab.port_count(); ++p) {
      x[sl.port_voltage[p]] = x[sl.node_voltage[tab.port_node(p)]];
    }
  }
  for (std::size_t k = 0; k < problem.n(); ++k) {
    const auto& v = problem.variables()[k];
    const bool lo = std::abs(v.lower) < nlp::kBoundInf;
    const bool hi = std::abs(v.upper) < nlp::kBoundInf;
    if (lo && hi && (v.name.find(".pg.") != std::string::npos ||
                     v.name.rfind("bin.", 0) == 0)) {
      x[k] = 0.5 * (v.lower + v.upper);
    }
    if (lo) x[k] = std::max(x[k], v.lower);
    if (hi) x[k] = std::min(x[k], v.upper);
  }
  return x;
}

MinlpProblem build_opf(const Grid& grid, const OpfOptions& options) {
  Scenario sc;
  sc.name = "base";
  if (options.outage) {
    sc.overlay = expand_contingency(grid, *options.outage);
    sc.name = "outage " + *options.outage;
  }
  sc.has_binaries = true;
  return MinlpProblem(grid, {sc}, options, false);
}

MinlpProblem build_scopf(const Grid& grid, const ScenarioSet& set, const OpfOptions& options) {
  if (set.contingencies.empty()) {
    throw InputError("security-constrained OPF needs at least one contingency");
  }
  if (options.outage) {
    throw InputError("single-state outage option does not apply to a contingency set");
  }
  std::vector<Scenario> scenarios;
  Scenario base;
  base.name = "base";
  base.has_binaries = false;
  scenarios.push_back(base);
  std::set<std::string> seen;
  for (const auto& id : set.contingencies) {
    if (!seen.insert(id).second) throw InputError("contingency '" + id + "' repeated");
    Scenario sc;
    sc.name = "outage " + id;
    sc.overlay = expand_contingency(grid, id);
    sc.has_binaries = true;
    scenarios.push_back(std::move(sc));
  }
  return MinlpProblem(grid, std::move(scenarios), options, true);
}

std::vector<StationReport> station_reports(const MinlpProblem& problem,
                                           const Instance& instance,
                                           std::span<const double> x, int scenario,
                                           const Assignment* assignment) {
  const auto& grid = problem.grid();
  const auto& sl = instance.layout.scenarios.at(static_cast<std::size_t>(scenario));
  std::vector<StationReport> out;
  for (const auto& lay : sl.stations) {
    const auto& st = grid.converter_stations()[lay.station];
    StationReport r;
    r.station = st.id;
    r.config = std::string(to_string(st.config));
    for (std::size_t p = 0; p < st.pole_converters.size(); ++p) {
      const auto& cv = st.pole_converters[p];
      r.pole_current_pu.emplace_back(cv.id, x[lay.poles[p].i1]);
      r.pole_voltage_pu.emplace_back(cv.id, x[lay.poles[p].u1]);
      r.pole_power_pu.emplace_back(cv.id, x[lay.poles[p].p]);
    }
    if (lay.bipolar) {
      r.dmr_current_pu = x[lay.bipolar->dmr];
      r.neutral_voltage_pu = x[lay.bipolar->a.u2];
      r.neutral_offset_kv = converter::neutral_offset_kv(grid, lay.station, r.neutral_voltage_pu);
      r.symmetric = !problem.scenarios()[static_cast<std::size_t>(scenario)].has_binaries;
      if (assignment) {
        const auto& cat = problem.catalogue();
        for (std::size_t k = 0; k < cat.size(); ++k) {
          if (cat[k].scenario == scenario && cat[k].kind == BinaryKind::Beta &&
              cat[k].element_index == lay.station) {
            r.symmetric = assignment->values[k] == 1;
          }
        }
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

double max_neutral_offset_kv(const MinlpProblem& problem, const Instance& instance,
                             std::span<const double> x) {
  const auto& nodes = problem.grid().dc_nodes();
  double worst = 0.0;
  for (const auto& sl : instance.layout.scenarios) {
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      if (nodes[m].kind != NodeKind::Neutral) continue;
      worst = std::max(worst, std::abs(from_per_unit(x[sl.node_voltage[m]],
                                                      nodes[m].base_voltage_kv)));
    }
  }
  return worst;
}

double reserve_cost(const MinlpProblem& problem, const Instance& instance,
                    std::span<const double> x) {
  const auto& gens = problem.grid().generators();
  const double s_base = problem.grid().base_power_mw();
  double total = 0.0;
  for (std::size_t g = 0; g < instance.layout.reserve_up.size(); ++g) {
    total += gens[g].reserve_cost_up * x[instance.layout.reserve_up[g]] * s_base;
    total += gens[g].reserve_cost_down * x[instance.layout.reserve_down[g]] * s_base;
  }
  return total;
}

}  // namespace hvdc::opf
