#include "hvdc/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace hvdc::studies {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string join(const std::vector<std::string>& items, char sep = ';') {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

std::string limit_text(const std::optional<double>& v) {
  return v ? fmt(*v, 3) : std::string("none");
}

bool optimal(const CaseResult& c) { return c.solution.status == nlp::Status::Optimal; }

std::vector<int> nb_values(const io::StudyConfig& config, int n) {
  std::vector<int> out;
  if (config.nb_range) {
    for (int k = config.nb_range->second; k >= config.nb_range->first; --k) out.push_back(k);
  } else {
    out.push_back(config.nb.value_or(n));
  }
  return out;
}

CaseResult solve_case(std::shared_ptr<const opf::MinlpProblem> problem, const io::StudyConfig& config,
                      std::string label, std::optional<double> limit, bool nls,
                      const CaseResult* warm = nullptr) {
  CaseResult c;
  c.label = std::move(label);
  c.nb = problem->nb();
  c.offset_limit_kv = limit;
  c.nls = nls;
  auto options = minlp_options(config);
  // A more restricted case's optimum is feasible here; starting from it
  // keeps nested cases ordered when the flat start finds a worse local one.
  if (warm && optimal(*warm) && warm->solution.instance) {
    options.warm_start =
        opf::named_point(warm->solution.instance->problem, warm->solution.solution.x);
  }
  c.solution = opf::solve_minlp(*problem, options);
  c.problem = std::move(problem);
  return c;
}

}  // namespace

double CaseResult::kkt_residual() const {
  if (!solution.instance || solution.solution.x.empty()) return 0.0;
  return nlp::check_kkt(solution.instance->problem, solution.solution).max_scaled();
}

double CaseResult::reserve_cost() const {
  if (!solution.instance || !optimal(*this)) return 0.0;
  return opf::reserve_cost(*problem, *solution.instance, solution.solution.x);
}

double CaseResult::max_offset_kv() const {
  if (!solution.instance || !optimal(*this)) return 0.0;
  return opf::max_neutral_offset_kv(*problem, *solution.instance, solution.solution.x);
}

opf::OpfOptions opf_options(const io::StudyConfig& config, int nb,
                            std::optional<double> offset_limit_kv,
                            const std::vector<std::string>& candidates) {
  opf::OpfOptions o;
  o.nb = nb;
  o.nb_mode = config.nb_mode;
  o.offset_limit_kv = offset_limit_kv;
  o.nls_candidates = candidates;
  if (config.study != io::Study::Scopf) o.outage = config.outage;
  o.faulted_counts_as_asymmetric = config.faulted_counts_as_asymmetric;
  o.neutral_voltage_bound_pu = config.neutral_voltage_bound_pu;
  return o;
}

opf::MinlpOptions minlp_options(const io::StudyConfig& config) {
  opf::MinlpOptions o;
  o.strategy = config.strategy;
  o.solver = config.solver;
  o.multistart = config.multistart;
  o.threads = config.threads;
  return o;
}

CaseResult run_opf(const Grid& grid, const io::StudyConfig& config) {
  const int n = static_cast<int>(grid.bipolar_stations().size());
  const int nb = config.nb.value_or(n);
  auto problem = std::make_shared<const opf::MinlpProblem>(opf::build_opf(
      grid, opf_options(config, nb, config.offset_limit_kv, config.nls_candidates)));
  return solve_case(std::move(problem), config, "nb=" + std::to_string(nb),
                    config.offset_limit_kv, !config.nls_candidates.empty());
}

std::vector<CaseResult> run_sweep_nb(const Grid& grid, const io::StudyConfig& config) {
  std::vector<CaseResult> out;
  const int n = static_cast<int>(grid.bipolar_stations().size());
  for (int nb : nb_values(config, n)) {
    auto problem = std::make_shared<const opf::MinlpProblem>(opf::build_opf(
        grid, opf_options(config, nb, config.offset_limit_kv, config.nls_candidates)));
    out.push_back(solve_case(std::move(problem), config, "nb=" + std::to_string(nb),
                             config.offset_limit_kv, !config.nls_candidates.empty(),
                             out.empty() ? nullptr : &out.back()));
  }
  return out;
}

std::vector<CaseResult> run_scopf(const Grid& grid, const io::StudyConfig& config) {
  std::vector<CaseResult> out;
  const int n = static_cast<int>(grid.bipolar_stations().size());
  opf::ScenarioSet set{config.contingencies};
  for (int nb : nb_values(config, n)) {
    auto problem = std::make_shared<const opf::MinlpProblem>(opf::build_scopf(
        grid, set, opf_options(config, nb, config.offset_limit_kv, config.nls_candidates)));
    out.push_back(solve_case(std::move(problem), config, "nb=" + std::to_string(nb),
                             config.offset_limit_kv, !config.nls_candidates.empty(),
                             out.empty() ? nullptr : &out.back()));
  }
  return out;
}

std::vector<NlsRow> run_nls(const Grid& grid, const io::StudyConfig& config) {
  const int n = static_cast<int>(grid.bipolar_stations().size());
  const int nb = config.nb.value_or(n);
  std::vector<std::optional<double>> limits{std::nullopt};
  for (double v : config.offset_limits_kv) limits.emplace_back(v);
  std::vector<NlsRow> rows;
  for (const auto& limit : limits) {
    NlsRow row;
    row.offset_limit_kv = limit;
    const std::string tag = limit ? "limit=" + fmt(*limit, 3) + "kV" : "unrestricted";
    auto base = std::make_shared<const opf::MinlpProblem>(
        opf::build_opf(grid, opf_options(config, nb, limit, {})));
    row.base = solve_case(std::move(base), config, tag + "/base", limit, false);
    auto nls = std::make_shared<const opf::MinlpProblem>(
        opf::build_opf(grid, opf_options(config, nb, limit, config.nls_candidates)));
    row.nls = solve_case(std::move(nls), config, tag + "/nls", limit, true, &row.base);
    rows.push_back(std::move(row));
  }
  return rows;
}

nlp::Status overall_status(const std::vector<const CaseResult*>& cases) {
  for (const auto* c : cases) {
    if (c->solution.status != nlp::Status::Optimal) return c->solution.status;
  }
  return nlp::Status::Optimal;
}

void write_summary(std::ostream& os, const std::vector<const CaseResult*>& cases) {
  os << "case,nb,offset_limit_kv,nls,status,objective,reserve_cost,max_offset_kv,kkt_residual,"
        "asymmetric,disconnected,explored\n";
  for (const auto* c : cases) {
    std::vector<std::string> asym, cut;
    if (c->solution.best) {
      for (std::size_t k = 0; k < c->problem->scenarios().size(); ++k) {
        const int kk = static_cast<int>(k);
        const auto prefix = c->problem->scenarios().size() > 1 ? "s" + std::to_string(k) + ":" : "";
        for (auto& s : opf::asymmetric_set(*c->problem, *c->solution.best, kk)) asym.push_back(prefix + s);
        for (auto& s : opf::disconnected_lines(*c->problem, *c->solution.best, kk)) cut.push_back(prefix + s);
      }
    }
    const bool ok = optimal(*c);
    os << c->label << ',' << c->nb << ',' << limit_text(c->offset_limit_kv) << ','
       << (c->nls ? "yes" : "no") << ',' << nlp::to_string(c->solution.status) << ','
       << (ok ? fmt(c->solution.objective, 3) : "") << ',' << (ok ? fmt(c->reserve_cost(), 3) : "")
       << ',' << (ok ? fmt(c->max_offset_kv(), 4) : "") << ',' << sci(c->kkt_residual()) << ','
       << join(asym) << ',' << join(cut) << ',' << c->solution.explored << '\n';
  }
}

void write_stations(std::ostream& os, const std::vector<const CaseResult*>& cases) {
  os << "case,state,station,config,symmetric,pole,current_pu,voltage_pu,power_pu,"
        "dmr_current_pu,neutral_offset_kv,status,kkt_residual\n";
  for (const auto* c : cases) {
    if (!optimal(*c)) continue;
    const auto kkt = sci(c->kkt_residual());
    for (std::size_t k = 0; k < c->problem->scenarios().size(); ++k) {
      const auto reps = opf::station_reports(*c->problem, *c->solution.instance,
                                             c->solution.solution.x, static_cast<int>(k),
                                             &*c->solution.best);
      for (const auto& r : reps) {
        for (std::size_t p = 0; p < r.pole_current_pu.size(); ++p) {
          os << c->label << ',' << c->problem->scenarios()[k].name << ',' << r.station << ','
             << r.config << ',' << (r.symmetric ? 1 : 0) << ',' << r.pole_current_pu[p].first << ','
             << fmt(r.pole_current_pu[p].second) << ',' << fmt(r.pole_voltage_pu[p].second) << ','
             << fmt(r.pole_power_pu[p].second) << ',' << fmt(r.dmr_current_pu) << ','
             << fmt(r.neutral_offset_kv, 4) << ',' << nlp::to_string(c->solution.status) << ','
             << kkt << '\n';
        }
      }
    }
  }
}

void write_offsets(std::ostream& os, const std::vector<const CaseResult*>& cases) {
  os << "case,state,node,voltage_pu,offset_kv,status,kkt_residual\n";
  for (const auto* c : cases) {
    if (!optimal(*c)) continue;
    const auto kkt = sci(c->kkt_residual());
    const auto& nodes = c->problem->grid().dc_nodes();
    const auto& x = c->solution.solution.x;
    for (std::size_t k = 0; k < c->problem->scenarios().size(); ++k) {
      const auto& sl = c->solution.instance->layout.scenarios[k];
      for (std::size_t m = 0; m < nodes.size(); ++m) {
        if (nodes[m].kind != NodeKind::Neutral) continue;
        const double v = x[sl.node_voltage[m]];
        // Print exact zeros without a sign.
        const double kv = from_per_unit(v, nodes[m].base_voltage_kv) + 0.0;
        os << c->label << ',' << c->problem->scenarios()[k].name << ',' << nodes[m].id << ','
           << fmt(v + 0.0, 8) << ',' << fmt(kv, 4) << ',' << nlp::to_string(c->solution.status)
           << ',' << kkt << '\n';
      }
    }
  }
}

void write_nls_table(std::ostream& os, const std::vector<NlsRow>& rows) {
  os << "offset_limit_kv,base_status,base_objective,base_kkt_residual,nls_status,nls_objective,"
        "nls_kkt_residual,disconnected_lines\n";
  for (const auto& r : rows) {
    std::vector<std::string> cut;
    if (r.nls.solution.best) cut = opf::disconnected_lines(*r.nls.problem, *r.nls.solution.best, 0);
    os << limit_text(r.offset_limit_kv) << ',' << nlp::to_string(r.base.solution.status) << ','
       << (optimal(r.base) ? fmt(r.base.solution.objective, 3) : "") << ','
       << sci(r.base.kkt_residual()) << ',' << nlp::to_string(r.nls.solution.status) << ','
       << (optimal(r.nls) ? fmt(r.nls.solution.objective, 3) : "") << ','
       << sci(r.nls.kkt_residual()) << ',' << join(cut) << '\n';
  }
}

nlp::Status run_study(const Grid& grid, const io::StudyConfig& config, const Inputs& inputs,
                      std::ostream& log) {
  io::check_config(config, grid);
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write '" + (dir / name).string() + "'");
    return f;
  };

  std::vector<CaseResult> cases;
  std::vector<NlsRow> nls_rows;
  switch (config.study) {
    case io::Study::Opf:
      cases.push_back(run_opf(grid, config));
      break;
    case io::Study::SweepNb:
      cases = run_sweep_nb(grid, config);
      break;
    case io::Study::Scopf:
      cases = run_scopf(grid, config);
      break;
    case io::Study::Nls:
      nls_rows = run_nls(grid, config);
      break;
  }
  std::vector<const CaseResult*> all;
  for (const auto& c : cases) all.push_back(&c);
  for (const auto& r : nls_rows) {
    all.push_back(&r.base);
    all.push_back(&r.nls);
  }

  { auto f = open("summary.csv"); write_summary(f, all); }
  { auto f = open("stations.csv"); write_stations(f, all); }
  { auto f = open("offsets.csv"); write_offsets(f, all); }
  if (!nls_rows.empty()) {
    auto f = open("nls.csv");
    write_nls_table(f, nls_rows);
  }
  {
    auto f = open("assignments.csv");
    f << "case,";
    bool header = true;
    for (const auto* c : all) {
      std::ostringstream body;
      opf::write_assignment_table(body, *c->problem, c->solution);
      std::istringstream lines(body.str());
      std::string line;
      std::getline(lines, line);
      if (header) {
        f << line << '\n';
        header = false;
      }
      while (std::getline(lines, line)) f << c->label << ',' << line << '\n';
    }
    if (header) f << "assignment\n";
  }
  {
    auto f = open("solver.log");
    for (const auto* c : all) {
      f << "== " << c->label << " (" << (c->solution.best ? opf::describe(*c->problem, *c->solution.best) : "-")
        << ")\n";
      nlp::write_log(f, c->solution.solution);
      for (const auto& d : c->solution.diagnostics) {
        if (c->solution.status != nlp::Status::Optimal) f << "  " << d << '\n';
      }
    }
  }

  // Switching plans per limit, reported for comparison across rows.
  std::optional<bool> plans_coincide;
  if (nls_rows.size() > 1) {
    std::vector<std::vector<std::string>> plans;
    for (const auto& r : nls_rows) {
      if (!r.offset_limit_kv || !r.nls.solution.best) continue;
      plans.push_back(opf::disconnected_lines(*r.nls.problem, *r.nls.solution.best, 0));
    }
    plans_coincide = std::all_of(plans.begin(), plans.end(),
                                 [&](const auto& p) { return p == plans.front(); });
  }

  const auto status = overall_status(all);
  nlohmann::ordered_json m;
  m["tool"] = "hvdc-scopf";
  m["version"] = HVDC_SCOPF_VERSION;
  m["study"] = io::to_string(config.study);
  m["status"] = nlp::to_string(status);
  m["inputs"] = {{"grid", {{"path", inputs.grid_path}, {"fnv1a", io::fnv1a_hex(inputs.grid_text)}}},
                 {"config", {{"path", inputs.config_path}, {"fnv1a", io::fnv1a_hex(inputs.config_text)}}}};
  m["options"] = nlohmann::ordered_json::parse(io::dump_config(config));
  if (plans_coincide) m["nls_plans_coincide"] = *plans_coincide;
  m["outputs"] = {"summary.csv", "stations.csv", "offsets.csv", "assignments.csv", "solver.log"};
  if (!nls_rows.empty()) m["outputs"].push_back("nls.csv");
  { auto f = open("manifest.json"); f << m.dump(2) << '\n'; }

  for (const auto* c : all) {
    log << c->label << ": " << nlp::to_string(c->solution.status);
    if (optimal(*c)) log << ", objective " << fmt(c->solution.objective, 2) << ' ' << grid.data().currency;
    if (c->solution.best) log << ", " << opf::describe(*c->problem, *c->solution.best);
    log << '\n';
    if (!optimal(*c)) {
      for (const auto& d : c->solution.diagnostics) log << "  " << d << '\n';
    }
  }
  log << "wrote " << dir.string() << '\n';
  return status;
}

}  // namespace hvdc::studies
