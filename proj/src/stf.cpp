#include "hvdc/stf.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>

#include "hvdc/detail/disjoint_sets.hpp"

namespace hvdc::stf {

ElementStamp AffineStamp::at(double status) const {
  return {offset.f_u + status * slope.f_u, offset.f_i + status * slope.f_i};
}

ElementStamp stamp_dc_line(double resistance_pu, double gamma) {
  ElementStamp s;
  s.f_u << gamma, -gamma, 0.0, 0.0;
  s.f_i << 1.0 - gamma, resistance_pu, gamma, 1.0;
  return s;
}

ElementStamp stamp_dc_line(const DcLine& line, double gamma) {
  return stamp_dc_line(line.resistance_pu, gamma);
}

AffineStamp stamp_dc_line_affine(double resistance_pu) {
  const auto at0 = stamp_dc_line(resistance_pu, 0.0);
  const auto at1 = stamp_dc_line(resistance_pu, 1.0);
  return {at0, {at1.f_u - at0.f_u, at1.f_i - at0.f_i}};
}

ElementStamp stamp_dc_switch(double closed) {
  ElementStamp s;
  s.f_u << closed, -closed, 0.0, 0.0;
  s.f_i << 1.0 - closed, 0.0, closed, 1.0;
  return s;
}

AffineStamp stamp_dc_switch_affine() {
  const auto at0 = stamp_dc_switch(0.0);
  const auto at1 = stamp_dc_switch(1.0);
  return {at0, {at1.f_u - at0.f_u, at1.f_i - at0.f_i}};
}

SparseMatrix assemble_incidence(std::span<const std::string> node_ids,
                                std::span<const TableauElement> elements) {
  std::map<std::string_view, std::size_t> lookup;
  for (std::size_t k = 0; k < node_ids.size(); ++k) lookup.emplace(node_ids[k], k);

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * elements.size());
  for (std::size_t e = 0; e < elements.size(); ++e) {
    for (std::size_t side = 0; side < 2; ++side) {
      auto it = lookup.find(elements[e].nodes[side]);
      if (it == lookup.end()) {
        throw TopologyError("element '" + elements[e].id + "' references unknown node '" +
                            elements[e].nodes[side] + "'");
      }
      triplets.emplace_back(static_cast<int>(it->second),
                            static_cast<int>(2 * e + side), 1.0);
    }
  }
  SparseMatrix a(static_cast<Eigen::Index>(node_ids.size()),
                 static_cast<Eigen::Index>(2 * elements.size()));
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

TableauSystem::TableauSystem(std::vector<std::string> node_ids,
                             std::vector<TableauElement> elements,
                             std::vector<std::size_t> reference_nodes)
    : node_ids_(std::move(node_ids)),
      elements_(std::move(elements)),
      references_(std::move(reference_nodes)) {
  incidence_ = assemble_incidence(node_ids_, elements_);
  port_node_.resize(port_count());
  for (int p = 0; p < incidence_.outerSize(); ++p) {
    for (SparseMatrix::InnerIterator it(incidence_, p); it; ++it) {
      port_node_[static_cast<std::size_t>(p)] = static_cast<std::size_t>(it.row());
    }
  }
  std::sort(references_.begin(), references_.end());
  references_.erase(std::unique(references_.begin(), references_.end()),
                    references_.end());
  for (auto r : references_) {
    if (r >= node_ids_.size()) throw TopologyError("reference node out of range");
  }
}

std::size_t TableauSystem::node_index(std::string_view id) const {
  auto it = std::find(node_ids_.begin(), node_ids_.end(), id);
  if (it == node_ids_.end()) {
    throw TopologyError("unknown tableau node '" + std::string(id) + "'");
  }
  return static_cast<std::size_t>(it - node_ids_.begin());
}

namespace {

SparseMatrix block_diagonal(const std::vector<TableauElement>& elements,
                            bool voltage_block) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& m = voltage_block ? elements[e].stamp.f_u : elements[e].stamp.f_i;
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        if (m(r, c) != 0.0) {
          triplets.emplace_back(static_cast<int>(2 * e) + r,
                                static_cast<int>(2 * e) + c, m(r, c));
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(2 * elements.size());
  SparseMatrix out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

SparseMatrix TableauSystem::f_u() const { return block_diagonal(elements_, true); }
SparseMatrix TableauSystem::f_i() const { return block_diagonal(elements_, false); }

TableauState TableauSystem::solve(const Eigen::VectorXd& injections) const {
  const auto n = node_count();
  const auto ports = port_count();
  if (static_cast<std::size_t>(injections.size()) != n) {
    throw std::invalid_argument("injection vector has wrong dimension");
  }

  // Pin one node of every component that has no reference of its own.
  detail::DisjointSets sets(n);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    if (elements_[e].status != 0.0) sets.unite(port_node_[2 * e], port_node_[2 * e + 1]);
  }
  std::set<std::size_t> referenced_roots;
  for (auto r : references_) referenced_roots.insert(sets.find(r));
  std::vector<bool> pinned(n, false);
  std::vector<std::size_t> auto_refs;
  for (auto r : references_) pinned[r] = true;
  for (std::size_t m = 0; m < n; ++m) {
    const auto root = sets.find(m);
    if (!referenced_roots.contains(root)) {
      referenced_roots.insert(root);
      pinned[m] = true;
      auto_refs.push_back(m);
    }
  }

  // Unknown layout [U; u; i].
  const auto u_off = static_cast<int>(n);
  const auto i_off = static_cast<int>(n + ports);
  const auto dim = static_cast<Eigen::Index>(n + 2 * ports);
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  int row = 0;
  for (std::size_t m = 0; m < n; ++m, ++row) {
    if (pinned[m]) {
      t.emplace_back(row, static_cast<int>(m), 1.0);
    } else {
      rhs[row] = injections[static_cast<Eigen::Index>(m)];
    }
  }
  for (std::size_t p = 0; p < ports; ++p) {
    const auto m = port_node_[p];
    if (!pinned[m]) t.emplace_back(static_cast<int>(m), i_off + static_cast<int>(p), 1.0);
  }
  for (std::size_t p = 0; p < ports; ++p, ++row) {
    t.emplace_back(row, u_off + static_cast<int>(p), 1.0);
    t.emplace_back(row, static_cast<int>(port_node_[p]), -1.0);
  }
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& s = elements_[e].stamp;
    for (int r = 0; r < 2; ++r, ++row) {
      for (int c = 0; c < 2; ++c) {
        const int port = static_cast<int>(2 * e) + c;
        if (s.f_u(r, c) != 0.0) t.emplace_back(row, u_off + port, s.f_u(r, c));
        if (s.f_i(r, c) != 0.0) t.emplace_back(row, i_off + port, s.f_i(r, c));
      }
    }
  }

  SparseMatrix k(dim, dim);
  k.setFromTriplets(t.begin(), t.end());
  k.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(k);
  if (lu.info() != Eigen::Success) {
    throw TopologyError("tableau is singular for this topology");
  }
  const Eigen::VectorXd z = lu.solve(rhs);

  TableauState state;
  state.node_voltage = z.head(static_cast<Eigen::Index>(n));
  state.port_voltage = z.segment(u_off, static_cast<Eigen::Index>(ports));
  state.port_current = z.segment(i_off, static_cast<Eigen::Index>(ports));
  const Eigen::VectorXd absorbed = incidence_ * state.port_current;
  state.injection = injections;
  for (auto r : references_) state.injection[static_cast<Eigen::Index>(r)] = absorbed[static_cast<Eigen::Index>(r)];

  const double scale = 1.0 + injections.cwiseAbs().maxCoeff();
  for (auto m : auto_refs) {
    const auto idx = static_cast<Eigen::Index>(m);
    if (std::abs(absorbed[idx] - injections[idx]) > 1e-9 * scale) {
      throw TopologyError("floating component at node '" + node_ids_[m] +
                          "' has a non-zero net injection");
    }
  }
  return state;
}

void TableauSystem::dump(std::ostream& os) const {
  os << "% hvdc sparse tableau\n";
  os << "% nodes " << node_count() << "\n";
  for (std::size_t m = 0; m < node_count(); ++m) {
    os << "%   node " << (m + 1) << " " << node_ids_[m];
    if (std::find(references_.begin(), references_.end(), m) != references_.end()) {
      os << " reference";
    }
    os << "\n";
  }
  os << "% ports " << port_count() << "\n";
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (std::size_t side = 0; side < 2; ++side) {
      os << "%   port " << (2 * e + side + 1) << " " << elements_[e].id << ":"
         << (side == 0 ? 'i' : 'j') << " status " << elements_[e].status << "\n";
    }
  }
  auto write = [&os](std::string_view name, const SparseMatrix& m) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << "% block " << name << "\n";
    os << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    for (int c = 0; c < m.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
        os << (it.row() + 1) << " " << (it.col() + 1) << " " << it.value() << "\n";
      }
    }
  };
  write("A_dc", incidence_);
  write("F_u", f_u());
  write("F_i", f_i());
}

Eigen::VectorXd tableau_residual(const TableauSystem& tableau,
                                 const TableauState& state) {
  const auto n = static_cast<Eigen::Index>(tableau.node_count());
  const auto p = static_cast<Eigen::Index>(tableau.port_count());
  if (state.node_voltage.size() != n || state.injection.size() != n ||
      state.port_voltage.size() != p || state.port_current.size() != p) {
    throw std::invalid_argument("tableau state has wrong dimensions");
  }
  const auto& a = tableau.incidence();
  Eigen::VectorXd r(n + 2 * p);
  r.head(n) = state.injection - a * state.port_current;
  r.segment(n, p) = state.port_voltage - a.transpose() * state.node_voltage;
  r.tail(p) = tableau.f_u() * state.port_voltage + tableau.f_i() * state.port_current;
  return r;
}

Topology& Topology::set(std::string id, double status) {
  status_[std::move(id)] = status;
  return *this;
}

double Topology::status(std::string_view id, double fallback) const {
  auto it = status_.find(id);
  return it == status_.end() ? fallback : it->second;
}

bool Topology::contains(std::string_view id) const { return status_.contains(id); }

std::string grounding_element_id(std::string_view node) {
  return std::string(kGroundNode) + "/" + std::string(node);
}

namespace {

// Union of DC nodes through in-service lines and closed switches.
detail::DisjointSets dc_connectivity(const Grid& grid, const Topology& topology) {
  detail::DisjointSets sets(grid.dc_nodes().size());
  for (const auto& line : grid.dc_lines()) {
    if (topology.status(line.id, 1.0) == 0.0) continue;
    auto a = grid.node_index(line.from_node);
    auto b = grid.node_index(line.to_node);
    if (a && b) sets.unite(*a, *b);
  }
  for (const auto& sw : grid.dc_switches()) {
    if (topology.status(sw.id, sw.closed ? 1.0 : 0.0) == 0.0) continue;
    auto a = grid.node_index(sw.from_node);
    auto b = grid.node_index(sw.to_node);
    if (a && b) sets.unite(*a, *b);
  }
  return sets;
}

}  // namespace

std::vector<std::string> ungrounded_neutral_stations(const Grid& grid,
                                                     const Topology& topology) {
  auto sets = dc_connectivity(grid, topology);
  std::set<std::size_t> grounded;
  for (std::size_t k = 0; k < grid.dc_nodes().size(); ++k) {
    if (grid.dc_nodes()[k].grounded) grounded.insert(sets.find(k));
  }
  std::vector<std::string> out;
  for (auto s : grid.bipolar_stations()) {
    const auto& st = grid.converter_stations()[s];
    auto n = grid.node_index(st.neutral_node);
    if (n && !grounded.contains(sets.find(*n))) out.push_back(st.id);
  }
  return out;
}

TableauSystem assemble_tableau(const Grid& grid, const Topology& topology) {
  if (auto bad = ungrounded_neutral_stations(grid, topology); !bad.empty()) {
    std::string msg = "neutral subnetwork without ground at station(s):";
    for (const auto& id : bad) msg += " " + id;
    throw TopologyError(msg);
  }

  const auto& nodes = grid.dc_nodes();
  std::vector<std::string> node_ids;
  node_ids.reserve(nodes.size() + 1);
  bool any_grounded = false;
  for (const auto& n : nodes) {
    node_ids.push_back(n.id);
    any_grounded = any_grounded || n.grounded;
  }
  std::vector<std::size_t> references;
  if (any_grounded) {
    node_ids.emplace_back(kGroundNode);
    references.push_back(nodes.size());
  }

  std::vector<TableauElement> elements;
  for (const auto& line : grid.dc_lines()) {
    const double gamma = topology.status(line.id, 1.0);
    elements.push_back({line.id, ElementKind::Line, {line.from_node, line.to_node},
                        stamp_dc_line(line, gamma), gamma, line.resistance_pu});
  }
  for (const auto& sw : grid.dc_switches()) {
    const double z = topology.status(sw.id, sw.closed ? 1.0 : 0.0);
    elements.push_back({sw.id, ElementKind::Switch, {sw.from_node, sw.to_node},
                        stamp_dc_switch(z), z, 0.0});
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!nodes[k].grounded) continue;
    const double r = grid.grounding_resistance_pu(k);
    elements.push_back({grounding_element_id(nodes[k].id), ElementKind::Grounding,
                        {nodes[k].id, std::string(kGroundNode)},
                        stamp_dc_line(r, 1.0), 1.0, r});
  }

  // Dead neutral pieces: no ground, no converter terminal. Pin their lowest
  // node so their voltage is defined.
  auto sets = dc_connectivity(grid, topology);
  std::set<std::size_t> live_roots;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].grounded || !grid.terminals_at(k).empty()) {
      live_roots.insert(sets.find(k));
    }
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].kind != NodeKind::Neutral) continue;
    const auto root = sets.find(k);
    if (live_roots.insert(root).second) references.push_back(k);
  }

  return TableauSystem(std::move(node_ids), std::move(elements), std::move(references));
}

}  // namespace hvdc::stf
