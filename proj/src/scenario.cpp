#include "hvdc/scenario.hpp"

#include <algorithm>

namespace hvdc {

bool Overlay::is_outaged(std::string_view pole_id) const {
  return std::binary_search(outaged_poles.begin(), outaged_poles.end(), pole_id);
}

std::optional<converter::Pole> Overlay::station_outage(const Grid& grid,
                                                       std::size_t station) const {
  const auto& st = grid.converter_stations().at(station);
  if (st.config != StationConfig::BipolarWithDmr) return std::nullopt;
  if (auto a = grid.positive_pole(station); a && is_outaged(st.pole_converters[*a].id)) {
    return converter::Pole::A;
  }
  if (auto b = grid.negative_pole(station); b && is_outaged(st.pole_converters[*b].id)) {
    return converter::Pole::B;
  }
  return std::nullopt;
}

Overlay expand_contingency(const Grid& grid, std::string_view pole_id, Overlay base) {
  const auto where = grid.pole_converter(pole_id);
  if (!where) {
    throw InputError("contingency '" + std::string(pole_id) + "' is not a pole converter");
  }
  const auto& st = grid.converter_stations()[where->first];
  if (st.config != StationConfig::BipolarWithDmr) {
    throw InputError("contingency '" + std::string(pole_id) + "' belongs to " +
                     std::string(to_string(st.config)) + " station '" + st.id +
                     "'; only bipolar pole converters can be outaged");
  }
  auto& v = base.outaged_poles;
  auto it = std::lower_bound(v.begin(), v.end(), pole_id);
  if (it == v.end() || *it != pole_id) v.insert(it, std::string(pole_id));
  return base;
}

}  // namespace hvdc
