#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hvdc/converter.hpp"
#include "hvdc/grid.hpp"

namespace hvdc {

/// Topology overlay of one operating state: the set of outaged pole
/// converters. Everything else is taken from the grid unchanged.
struct Overlay {
  std::vector<std::string> outaged_poles;  // sorted, unique

  bool is_outaged(std::string_view pole_id) const;
  /// Which pole of a bipolar station is out, if any.
  std::optional<converter::Pole> station_outage(const Grid& grid, std::size_t station) const;
  bool operator==(const Overlay&) const = default;
};

/// Adds the outage of one bipolar pole converter. Applying the same id twice
/// is a no-op. Throws InputError when the id is not a pole converter of a
/// bipolar station.
Overlay expand_contingency(const Grid& grid, std::string_view pole_id,
                           Overlay base = {});

/// One operating state kappa: the base case (no outage) or a contingency.
struct Scenario {
  std::string name;
  Overlay overlay;
  // Post-contingency states carry the beta / gamma decisions; the base case
  // of a security-constrained run is fully symmetric with all lines in.
  bool has_binaries = true;
};

}  // namespace hvdc
