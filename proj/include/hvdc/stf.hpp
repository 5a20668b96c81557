#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hvdc/grid.hpp"

namespace hvdc::stf {

/// A topology state leaves a neutral subnetwork without a voltage reference,
/// or a floating component is asked to absorb a net injection.
class TopologyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two-port element equations F_u [u_i; u_j] + F_i [i_i; i_j] = 0.
struct ElementStamp {
  Eigen::Matrix2d f_u = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d f_i = Eigen::Matrix2d::Zero();
};

/// Stamp as an affine function of its status variable: offset + s * slope.
struct AffineStamp {
  ElementStamp offset;
  ElementStamp slope;

  ElementStamp at(double status) const;
};

/// Series-resistance DC line with in-service status gamma.
///   F_u = [[g, -g], [0, 0]],  F_i = [[1 - g, R], [g, 1]]
ElementStamp stamp_dc_line(double resistance_pu, double gamma);
ElementStamp stamp_dc_line(const DcLine& line, double gamma);
AffineStamp stamp_dc_line_affine(double resistance_pu);

/// Ideal DC switch with closed status z.
///   F_u = [[z, -z], [0, 0]],  F_i = [[1 - z, 0], [z, 1]]
ElementStamp stamp_dc_switch(double closed);
AffineStamp stamp_dc_switch_affine();

enum class ElementKind { Line, Switch, Grounding };

struct TableauElement {
  std::string id;
  ElementKind kind = ElementKind::Line;
  std::array<std::string, 2> nodes;
  ElementStamp stamp;
  double status = 1.0;
  double resistance_pu = 0.0;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Node-to-port incidence. Port 2e is side i of element e, port 2e+1 side j;
/// every port is oriented into its element, so each column holds one +1.
/// Throws TopologyError naming the element when a port node is unknown.
SparseMatrix assemble_incidence(std::span<const std::string> node_ids,
                                std::span<const TableauElement> elements);

/// Unknowns and injections of one tableau.
struct TableauState {
  Eigen::VectorXd node_voltage;  // U
  Eigen::VectorXd port_voltage;  // u
  Eigen::VectorXd port_current;  // i
  Eigen::VectorXd injection;     // I, positive into the node
};

/// Assembled sparse tableau for one topology state:
///   A i = I,   u - A^T U = 0,   F_u u + F_i i = 0.
/// Reference nodes are pinned to 0 pu by their own equation.
class TableauSystem {
 public:
  TableauSystem(std::vector<std::string> node_ids,
                std::vector<TableauElement> elements,
                std::vector<std::size_t> reference_nodes);

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t element_count() const { return elements_.size(); }
  std::size_t port_count() const { return 2 * elements_.size(); }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<TableauElement>& elements() const { return elements_; }
  const std::vector<std::size_t>& reference_nodes() const { return references_; }
  std::size_t port_node(std::size_t port) const { return port_node_[port]; }
  std::size_t node_index(std::string_view id) const;

  const SparseMatrix& incidence() const { return incidence_; }
  /// Block-diagonal element matrices (ports x ports).
  SparseMatrix f_u() const;
  SparseMatrix f_i() const;

  /// Solves for U, u, i given injections at every node. Injections at
  /// reference nodes are outputs (the current the reference absorbs).
  /// Components without any reference are pinned at their lowest-index node;
  /// a net injection into such a component throws TopologyError.
  TableauState solve(const Eigen::VectorXd& injections) const;

  /// Matrix-market style dump of A, F_u and F_i with node/port labels.
  void dump(std::ostream& os) const;

 private:
  std::vector<std::string> node_ids_;
  std::vector<TableauElement> elements_;
  std::vector<std::size_t> references_;
  std::vector<std::size_t> port_node_;
  SparseMatrix incidence_;
};

/// Stacked residuals [I - A i; u - A^T U; F_u u + F_i i]. Throws
/// std::invalid_argument on dimension mismatch.
Eigen::VectorXd tableau_residual(const TableauSystem& tableau,
                                 const TableauState& state);

/// Element statuses by element id (gamma for lines, z for switches).
/// Missing entries fall back to lines in service and switches as declared.
class Topology {
 public:
  Topology() = default;
  Topology& set(std::string id, double status);
  double status(std::string_view id, double fallback) const;
  bool contains(std::string_view id) const;
  const std::map<std::string, double, std::less<>>& entries() const {
    return status_;
  }

 private:
  std::map<std::string, double, std::less<>> status_;
};

inline constexpr std::string_view kGroundNode = "GND";

/// Id of the grounding element attached to a grounded node.
std::string grounding_element_id(std::string_view node);

/// Bipolar stations whose neutral node cannot reach a grounded node through
/// in-service neutral conductors and closed switches.
std::vector<std::string> ungrounded_neutral_stations(const Grid& grid,
                                                     const Topology& topology);

/// Grid tableau: DC nodes plus a ground node (when any node is grounded),
/// lines, switches and one grounding resistor per grounded node. Neutral
/// components carrying no converter terminal and no ground are pinned.
/// Throws TopologyError if a station neutral is left without ground.
TableauSystem assemble_tableau(const Grid& grid, const Topology& topology);

}  // namespace hvdc::stf
