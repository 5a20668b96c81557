#include "hvdc/io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hvdc::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Study study) {
  switch (study) {
    case Study::Opf:
      return "opf";
    case Study::Scopf:
      return "scopf";
    case Study::SweepNb:
      return "sweep-nb";
    case Study::Nls:
      return "nls";
  }
  return "?";
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << text;
}

json parse_json(std::string_view text, std::string_view what) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw InputError(std::string(what) + ": empty document");
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line and column.
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(std::string(what) + ": syntax error at line " + std::to_string(line) +
                     " column " + std::to_string(col));
  }
}

// Object reader that tracks which keys were consumed so leftovers can be
// reported as unknown fields.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(key, "required field missing");
    return j_.at(key);
  }

  std::string string(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : (used_.insert(key), fallback);
  }

  double number(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (used_.insert(key), fallback);
  }

  int integer(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) {
    return has(key) ? integer(key) : (used_.insert(key), fallback);
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return (used_.insert(key), fallback);
    const auto& v = at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  const json& array(const std::string& key) {
    const auto& v = at(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }
  const json* optional_array(const std::string& key) {
    if (!has(key)) return nullptr;
    return &array(key);
  }

  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    const auto* a = optional_array(key);
    if (!a) return out;
    for (std::size_t k = 0; k < a->size(); ++k) {
      if (!(*a)[k].is_string()) fail(key + "[" + std::to_string(k) + "]", "expected a string");
      out.push_back((*a)[k].get<std::string>());
    }
    return out;
  }

  std::string child(const std::string& key) const { return join(key); }

  void ignore(const std::string& key) { used_.insert(key); }

  // Throws on the first key that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) fail(it.key(), "unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw InputError(join(key) + ": " + msg);
  }

 private:
  std::string join(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename Enum, std::size_t N>
Enum parse_enum(Fields& f, const std::string& key,
                const std::array<std::pair<std::string_view, Enum>, N>& table) {
  const auto s = f.string(key);
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  std::string allowed;
  for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  f.fail(key, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

constexpr std::array<std::pair<std::string_view, NodeKind>, 3> kNodeKinds{{
    {"positive-pole", NodeKind::PositivePole},
    {"negative-pole", NodeKind::NegativePole},
    {"neutral", NodeKind::Neutral},
}};
constexpr std::array<std::pair<std::string_view, ConductorRole>, 2> kRoles{{
    {"pole", ConductorRole::Pole},
    {"neutral", ConductorRole::Neutral},
}};
constexpr std::array<std::pair<std::string_view, StationConfig>, 3> kConfigs{{
    {"bipolar-with-dmr", StationConfig::BipolarWithDmr},
    {"symmetric-monopole", StationConfig::SymmetricMonopole},
    {"dc-dc", StationConfig::DcDc},
}};
constexpr std::array<std::pair<std::string_view, Study>, 4> kStudies{{
    {"opf", Study::Opf},
    {"scopf", Study::Scopf},
    {"sweep-nb", Study::SweepNb},
    {"nls", Study::Nls},
}};
constexpr std::array<std::pair<std::string_view, converter::NbMode>, 2> kNbModes{{
    {"exact", converter::NbMode::Exact},
    {"at-least", converter::NbMode::AtLeast},
}};
constexpr std::array<std::pair<std::string_view, opf::Strategy>, 2> kStrategies{{
    {"enumerate", opf::Strategy::Enumerate},
    {"branch-and-bound", opf::Strategy::BranchAndBound},
}};

void check_version(Fields& f) {
  const int v = f.integer("schema_version");
  if (v != kSchemaVersion) {
    f.fail("schema_version", "unsupported version " + std::to_string(v) + " (supported: " +
                                 std::to_string(kSchemaVersion) + ")");
  }
}

template <typename T, typename Fn>
std::vector<T> records(Fields& root, const std::string& key, Fn&& parse, bool required = true) {
  std::vector<T> out;
  const json* a = required ? &root.array(key) : root.optional_array(key);
  if (!a) return out;
  std::set<std::string> ids;
  for (std::size_t k = 0; k < a->size(); ++k) {
    Fields f((*a)[k], root.child(key) + "[" + std::to_string(k) + "]");
    f.ignore("note");
    T item = parse(f);
    if (!ids.insert(item.id).second) f.fail("id", "duplicate id '" + item.id + "'");
    f.finish();
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

Grid parse_grid(std::string_view text) {
  const json doc = parse_json(text, "grid");
  Fields root(doc, "");
  check_version(root);
  root.ignore("notes");
  GridData d;
  d.name = root.string("name");
  d.base_power_mw = root.number("base_power_mw", 1000.0);
  if (!(d.base_power_mw > 0.0)) root.fail("base_power_mw", "must be > 0");
  d.currency = root.string("currency", "EUR");

  d.dc_nodes = records<DcNode>(root, "dc_nodes", [](Fields& f) {
    DcNode n;
    n.id = f.string("id");
    n.kind = parse_enum(f, "kind", kNodeKinds);
    n.base_voltage_kv = f.number("base_voltage_kv");
    n.grounded = f.boolean("grounded", false);
    n.grounding_resistance_ohm = f.number("grounding_resistance_ohm", 0.0);
    n.v_min_pu = f.number("v_min_pu", 0.95);
    n.v_max_pu = f.number("v_max_pu", 1.05);
    return n;
  });
  std::map<std::string, double> base_kv;
  for (const auto& n : d.dc_nodes) base_kv[n.id] = n.base_voltage_kv;
  const double s_base = d.base_power_mw;

  d.dc_lines = records<DcLine>(root, "dc_lines", [&](Fields& f) {
    DcLine l;
    l.id = f.string("id");
    l.from_node = f.string("from_node");
    l.to_node = f.string("to_node");
    const bool pu = f.has("resistance_pu"), ohm = f.has("resistance_ohm");
    if (pu == ohm) f.fail("resistance_pu", "give exactly one of resistance_pu, resistance_ohm");
    if (pu) {
      l.resistance_pu = f.number("resistance_pu");
    } else {
      const double r = f.number("resistance_ohm");
      const auto it = base_kv.find(l.from_node);
      if (it == base_kv.end()) f.fail("from_node", "unknown node '" + l.from_node + "'");
      l.resistance_pu = r / (it->second * it->second / s_base);
    }
    l.conductor_role = parse_enum(f, "conductor_role", kRoles);
    l.switchable = f.boolean("switchable", false);
    return l;
  });

  d.dc_switches = records<DcSwitch>(
      root, "dc_switches",
      [](Fields& f) {
        DcSwitch s;
        s.id = f.string("id");
        s.from_node = f.string("from_node");
        s.to_node = f.string("to_node");
        s.closed = f.boolean("closed", true);
        return s;
      },
      false);

  d.converter_stations = records<ConverterStation>(root, "converter_stations", [](Fields& f) {
    ConverterStation st;
    st.id = f.string("id");
    st.config = parse_enum(f, "config", kConfigs);
    st.neutral_node = f.string("neutral_node", "");
    const auto& poles = f.array("pole_converters");
    for (std::size_t k = 0; k < poles.size(); ++k) {
      Fields p(poles[k], f.child("pole_converters") + "[" + std::to_string(k) + "]");
      p.ignore("note");
      PoleConverter cv;
      cv.id = p.string("id");
      cv.ac_terminal = p.string("ac_terminal", "");
      cv.dc_terminal_1 = p.string("dc_terminal_1");
      cv.dc_terminal_2 = p.string("dc_terminal_2");
      cv.current_limit_pu = p.number("current_limit_pu");
      cv.power_limit_pu = p.number("power_limit_pu");
      p.finish();
      st.pole_converters.push_back(std::move(cv));
    }
    return st;
  });

  d.generators = records<Generator>(root, "generators", [](Fields& f) {
    Generator g;
    g.id = f.string("id");
    g.bus = f.string("bus");
    g.cost_per_mwh = f.number("cost_per_mwh", 0.0);
    g.reserve_cost_up = f.number("reserve_cost_up", 0.0);
    g.reserve_cost_down = f.number("reserve_cost_down", 0.0);
    g.p_max_mw = f.number("p_max_mw");
    g.p_min_mw = f.number("p_min_mw", 0.0);
    g.is_wind = f.boolean("is_wind", false);
    return g;
  });
  d.demands = records<Demand>(
      root, "demands",
      [](Fields& f) {
        Demand x;
        x.id = f.string("id");
        x.bus = f.string("bus");
        x.p_mw = f.number("p_mw");
        return x;
      },
      false);
  root.finish();

  Grid grid(std::move(d));
  require_valid(grid);
  return grid;
}

Grid load_grid(const std::filesystem::path& path) {
  try {
    return parse_grid(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string dump_grid(const Grid& grid) {
  const auto& d = grid.data();
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = d.name;
  j["base_power_mw"] = d.base_power_mw;
  j["currency"] = d.currency;
  j["dc_nodes"] = ordered_json::array();
  for (const auto& n : d.dc_nodes) {
    ordered_json o;
    o["id"] = n.id;
    o["kind"] = to_string(n.kind);
    o["base_voltage_kv"] = n.base_voltage_kv;
    o["grounded"] = n.grounded;
    o["grounding_resistance_ohm"] = n.grounding_resistance_ohm;
    o["v_min_pu"] = n.v_min_pu;
    o["v_max_pu"] = n.v_max_pu;
    j["dc_nodes"].push_back(std::move(o));
  }
  j["dc_lines"] = ordered_json::array();
  for (const auto& l : d.dc_lines) {
    ordered_json o;
    o["id"] = l.id;
    o["from_node"] = l.from_node;
    o["to_node"] = l.to_node;
    o["resistance_pu"] = l.resistance_pu;
    o["conductor_role"] = to_string(l.conductor_role);
    o["switchable"] = l.switchable;
    j["dc_lines"].push_back(std::move(o));
  }
  j["dc_switches"] = ordered_json::array();
  for (const auto& s : d.dc_switches) {
    j["dc_switches"].push_back(
        ordered_json{{"id", s.id}, {"from_node", s.from_node}, {"to_node", s.to_node},
                     {"closed", s.closed}});
  }
  j["converter_stations"] = ordered_json::array();
  for (const auto& st : d.converter_stations) {
    ordered_json o;
    o["id"] = st.id;
    o["config"] = to_string(st.config);
    if (!st.neutral_node.empty()) o["neutral_node"] = st.neutral_node;
    o["pole_converters"] = ordered_json::array();
    for (const auto& cv : st.pole_converters) {
      ordered_json p;
      p["id"] = cv.id;
      if (!cv.ac_terminal.empty()) p["ac_terminal"] = cv.ac_terminal;
      p["dc_terminal_1"] = cv.dc_terminal_1;
      p["dc_terminal_2"] = cv.dc_terminal_2;
      p["current_limit_pu"] = cv.current_limit_pu;
      p["power_limit_pu"] = cv.power_limit_pu;
      o["pole_converters"].push_back(std::move(p));
    }
    j["converter_stations"].push_back(std::move(o));
  }
  j["generators"] = ordered_json::array();
  for (const auto& g : d.generators) {
    ordered_json o;
    o["id"] = g.id;
    o["bus"] = g.bus;
    o["cost_per_mwh"] = g.cost_per_mwh;
    o["reserve_cost_up"] = g.reserve_cost_up;
    o["reserve_cost_down"] = g.reserve_cost_down;
    o["p_max_mw"] = g.p_max_mw;
    o["p_min_mw"] = g.p_min_mw;
    o["is_wind"] = g.is_wind;
    j["generators"].push_back(std::move(o));
  }
  j["demands"] = ordered_json::array();
  for (const auto& x : d.demands) {
    j["demands"].push_back(ordered_json{{"id", x.id}, {"bus", x.bus}, {"p_mw", x.p_mw}});
  }
  return j.dump(2) + "\n";
}

void save_grid(const Grid& grid, const std::filesystem::path& path) {
  write_file(path, dump_grid(grid));
}

StudyConfig parse_config(std::string_view text) {
  const json doc = parse_json(text, "config");
  Fields f(doc, "");
  check_version(f);
  f.ignore("notes");
  StudyConfig c;
  c.study = parse_enum(f, "study", kStudies);
  if (f.has("nb")) c.nb = f.integer("nb");
  if (f.has("nb_range")) {
    const auto& r = f.array("nb_range");
    if (r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer()) {
      f.fail("nb_range", "expected [first, last] integers");
    }
    c.nb_range = std::pair{r[0].get<int>(), r[1].get<int>()};
    if (c.nb_range->first > c.nb_range->second) f.fail("nb_range", "first must be <= last");
  }
  if (f.has("nb_mode")) c.nb_mode = parse_enum(f, "nb_mode", kNbModes);
  if (f.has("outage")) c.outage = f.string("outage");
  c.contingencies = f.strings("contingencies");
  if (f.has("offset_limit_kv")) {
    if (f.at("offset_limit_kv").is_null()) {
      f.ignore("offset_limit_kv");
    } else {
      c.offset_limit_kv = f.number("offset_limit_kv");
    }
  }
  if (const auto* a = f.optional_array("offset_limits_kv")) {
    for (std::size_t k = 0; k < a->size(); ++k) {
      if (!(*a)[k].is_number()) f.fail("offset_limits_kv", "expected numbers");
      c.offset_limits_kv.push_back((*a)[k].get<double>());
    }
  }
  c.nls_candidates = f.strings("nls_candidates");
  c.faulted_counts_as_asymmetric = f.boolean("faulted_counts_as_asymmetric", true);
  c.neutral_voltage_bound_pu = f.number("neutral_voltage_bound_pu", 1.0);
  if (f.has("strategy")) c.strategy = parse_enum(f, "strategy", kStrategies);
  if (f.has("solver")) {
    Fields s(f.at("solver"), "solver");
    c.solver.tol = s.number("tol", c.solver.tol);
    c.solver.constr_viol_tol = s.number("constr_viol_tol", c.solver.constr_viol_tol);
    c.solver.max_iter = s.integer("max_iter", c.solver.max_iter);
    c.solver.mu_init = s.number("mu_init", c.solver.mu_init);
    c.solver.mu_linear_decrease = s.number("mu_linear_decrease", c.solver.mu_linear_decrease);
    c.solver.tau_min = s.number("tau_min", c.solver.tau_min);
    s.finish();
    try {
      c.solver.validate();
    } catch (const std::invalid_argument& e) {
      f.fail("solver", e.what());
    }
  }
  if (f.has("multistart")) {
    Fields m(f.at("multistart"), "multistart");
    c.multistart.starts = m.integer("starts", c.multistart.starts);
    if (m.has("seed")) {
      const auto& v = m.at("seed");
      if (!v.is_number_unsigned()) m.fail("seed", "expected a non-negative integer");
      c.multistart.seed = v.get<std::uint64_t>();
    }
    c.multistart.perturbation = m.number("perturbation", c.multistart.perturbation);
    m.finish();
    if (c.multistart.starts < 1) f.fail("multistart.starts", "must be >= 1");
  }
  c.threads = f.integer("threads", 1);
  if (c.threads < 1) f.fail("threads", "must be >= 1");
  c.out_dir = f.string("out_dir", "out");
  f.finish();
  return c;
}

StudyConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_file(path));
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string dump_config(const StudyConfig& c) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["study"] = to_string(c.study);
  if (c.nb) j["nb"] = *c.nb;
  if (c.nb_range) j["nb_range"] = {c.nb_range->first, c.nb_range->second};
  j["nb_mode"] = c.nb_mode == converter::NbMode::Exact ? "exact" : "at-least";
  if (c.outage) j["outage"] = *c.outage;
  if (!c.contingencies.empty()) j["contingencies"] = c.contingencies;
  j["offset_limit_kv"] = c.offset_limit_kv ? ordered_json(*c.offset_limit_kv) : ordered_json();
  if (!c.offset_limits_kv.empty()) j["offset_limits_kv"] = c.offset_limits_kv;
  j["nls_candidates"] = c.nls_candidates;
  j["faulted_counts_as_asymmetric"] = c.faulted_counts_as_asymmetric;
  j["neutral_voltage_bound_pu"] = c.neutral_voltage_bound_pu;
  j["strategy"] = opf::to_string(c.strategy);
  j["solver"] = {{"tol", c.solver.tol},
                 {"constr_viol_tol", c.solver.constr_viol_tol},
                 {"max_iter", c.solver.max_iter},
                 {"mu_init", c.solver.mu_init},
                 {"mu_linear_decrease", c.solver.mu_linear_decrease},
                 {"tau_min", c.solver.tau_min}};
  j["multistart"] = {{"starts", c.multistart.starts},
                     {"seed", c.multistart.seed},
                     {"perturbation", c.multistart.perturbation}};
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  return j.dump(2) + "\n";
}

void check_config(const StudyConfig& c, const Grid& grid) {
  std::vector<std::string> problems;
  const int n = static_cast<int>(grid.bipolar_stations().size());
  auto check_nb = [&](int nb, const std::string& what) {
    if (nb < 0 || nb > n) {
      problems.push_back(what + " = " + std::to_string(nb) + " outside [0, " +
                         std::to_string(n) + "] for " + std::to_string(n) +
                         " bipolar stations");
    }
  };
  if (c.nb) check_nb(*c.nb, "nb");
  if (c.nb_range) {
    check_nb(c.nb_range->first, "nb_range start");
    check_nb(c.nb_range->second, "nb_range end");
  }
  auto check_pole = [&](const std::string& id, const std::string& what) {
    const auto where = grid.pole_converter(id);
    if (!where) {
      problems.push_back(what + " '" + id + "' is not a pole converter");
    } else if (grid.converter_stations()[where->first].config !=
               StationConfig::BipolarWithDmr) {
      problems.push_back(what + " '" + id + "' is not a bipolar pole converter");
    }
  };
  if (c.outage) check_pole(*c.outage, "outage");
  for (const auto& id : c.contingencies) check_pole(id, "contingency");
  for (const auto& id : c.nls_candidates) {
    const auto li = grid.line_index(id);
    if (!li) {
      problems.push_back("NLS candidate '" + id + "' is not a DC line");
    } else if (grid.dc_lines()[*li].conductor_role != ConductorRole::Neutral) {
      problems.push_back("NLS candidate '" + id + "' is not a neutral conductor");
    }
  }
  if (c.offset_limit_kv && !(*c.offset_limit_kv > 0.0)) {
    problems.push_back("offset_limit_kv must be > 0");
  }
  for (double v : c.offset_limits_kv) {
    if (!(v > 0.0)) problems.push_back("offset_limits_kv entries must be > 0");
  }
  switch (c.study) {
    case Study::Opf:
      break;
    case Study::SweepNb:
      if (!c.nb_range) problems.push_back("sweep-nb needs nb_range");
      break;
    case Study::Scopf:
      if (c.contingencies.empty()) problems.push_back("scopf needs a non-empty contingencies list");
      if (c.outage) problems.push_back("scopf takes contingencies, not outage");
      break;
    case Study::Nls:
      if (c.nls_candidates.empty()) problems.push_back("nls needs nls_candidates");
      break;
  }
  if (problems.empty()) return;
  std::string msg = "invalid " + std::string(to_string(c.study)) + " configuration:";
  for (const auto& p : problems) msg += "\n  " + p;
  throw InputError(msg);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hvdc::io
