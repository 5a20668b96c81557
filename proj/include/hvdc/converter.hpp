#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hvdc/grid.hpp"
#include "hvdc/nlp.hpp"

namespace hvdc::converter {

/// Variable indices of one pole converter (or one DC-DC side). u1 and u2
/// are the node-voltage variables of the two DC terminal nodes; i1, i2 are
/// terminal currents flowing from the node into the converter; p is the DC
/// power the converter absorbs (and delivers to its AC bus).
struct PoleVars {
  std::size_t u1 = 0;
  std::size_t u2 = 0;
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  std::size_t p = 0;
};

/// CV_a sits on the positive pole, CV_b on the negative pole; both terminal-2
/// voltages are the shared neutral node voltage.
struct BipolarVars {
  PoleVars a;
  PoleVars b;
  std::size_t dmr = 0;
};

enum class Pole { A, B };

/// Station rows for a bipolar station with dedicated metallic return:
///   i_a1 + i_a2 = 0,  i_b1 - i_b2 = 0,  i_dmr - i_a2 - i_b2 = 0,
///   p_a - u_a1 i_a1 - u_0 i_a2 = 0,  p_b - u_b1 i_b1 - u_0 i_b2 = 0,
/// plus i_a2 + i_b2 = 0 when symmetric. Healthy poles get |i_1| and |p|
/// limits; an outaged pole has both currents fixed at zero and no limits.
/// Throws InputError for a station of another configuration.
nlp::ConstraintSet bipolar_constraints(const Grid& grid, std::size_t station,
                                       const BipolarVars& vars, bool symmetric,
                                       std::optional<Pole> outage = std::nullopt,
                                       int scenario = 0, const std::string& prefix = "");

/// Relaxed symmetric-bipole row for a continuous beta in [0, 1]:
///   -M (1 - beta) <= i_a2 + i_b2 <= M (1 - beta).
nlp::ConstraintSet symmetric_relaxation(const BipolarVars& vars, std::size_t beta,
                                        double big_m, int scenario = 0,
                                        const std::string& prefix = "");

/// i_1 - i_2 = 0 and p - u_1 i_1 - u_2 i_2 = 0 with limits.
nlp::ConstraintSet monopole_constraints(const ConverterStation& station,
                                        const PoleVars& vars, int scenario = 0,
                                        const std::string& prefix = "");

/// Each side: i_1 - i_2 = 0, p - u_1 i_1 - u_2 i_2 = 0; lossless transfer
/// p_A + p_B = 0; per-side limits.
nlp::ConstraintSet dcdc_constraints(const ConverterStation& station,
                                    const PoleVars& side_a, const PoleVars& side_b,
                                    int scenario = 0, const std::string& prefix = "");

enum class NbMode { Exact, AtLeast };

/// Sum of beta equals (or is at least) nb. Throws InputError when nb lies
/// outside [0, number of stations].
nlp::Constraint symmetric_count_constraint(std::span<const std::size_t> betas, int nb,
                                           NbMode mode, int scenario = 0);

/// Same rule on fixed values.
bool satisfies_count(std::span<const int> betas, int nb, NbMode mode);

/// Neutral node voltage of a bipolar station in physical kV.
double neutral_offset_kv(const Grid& grid, std::size_t station, double neutral_voltage_pu);

/// Evaluates the station relations at a point; used by property tests.
struct BipolarState {
  double i_a1 = 0, i_a2 = 0, i_b1 = 0, i_b2 = 0, dmr = 0;
  double u_a1 = 0, u_b1 = 0, u_0 = 0;
  double p_a = 0, p_b = 0;
};

BipolarState bipolar_state(std::span<const double> x, const BipolarVars& vars);

}  // namespace hvdc::converter
