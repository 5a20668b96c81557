#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hvdc/grid.hpp"
#include "hvdc/io.hpp"
#include "hvdc/minlp.hpp"
#include "hvdc/opf.hpp"

namespace hvdc::studies {

/// One solved case of a study.
struct CaseResult {
  std::string label;  // e.g. "nb=2" or "limit=8kV/nls"
  int nb = 0;
  std::optional<double> offset_limit_kv;
  bool nls = false;
  std::shared_ptr<const opf::MinlpProblem> problem;
  opf::MinlpSolution solution;

  double kkt_residual() const;
  double reserve_cost() const;
  double max_offset_kv() const;
};

opf::OpfOptions opf_options(const io::StudyConfig& config, int nb,
                            std::optional<double> offset_limit_kv,
                            const std::vector<std::string>& candidates);
opf::MinlpOptions minlp_options(const io::StudyConfig& config);

/// Single-state OPF at config.nb (default: all stations symmetric).
CaseResult run_opf(const Grid& grid, const io::StudyConfig& config);

/// Single-state OPF for every N_b of config.nb_range, descending.
std::vector<CaseResult> run_sweep_nb(const Grid& grid, const io::StudyConfig& config);

/// Coupled base + contingency program for every N_b of config.nb_range
/// (or config.nb alone), descending.
std::vector<CaseResult> run_scopf(const Grid& grid, const io::StudyConfig& config);

/// Rows {unrestricted, each limit}, each without and with line switching.
struct NlsRow {
  std::optional<double> offset_limit_kv;
  CaseResult base;
  CaseResult nls;
};
std::vector<NlsRow> run_nls(const Grid& grid, const io::StudyConfig& config);

/// Status summarising several cases: optimal if all are, else the first
/// failing status.
nlp::Status overall_status(const std::vector<const CaseResult*>& cases);

struct Inputs {
  std::string grid_path;
  std::string grid_text;
  std::string config_path;
  std::string config_text;
};

/// Runs the configured study and writes its CSV tables and manifest.json
/// into config.out_dir. Returns the overall status.
nlp::Status run_study(const Grid& grid, const io::StudyConfig& config, const Inputs& inputs,
                      std::ostream& log);

// CSV writers (column schemas are documented in docs/).
void write_summary(std::ostream& os, const std::vector<const CaseResult*>& cases);
void write_stations(std::ostream& os, const std::vector<const CaseResult*>& cases);
void write_offsets(std::ostream& os, const std::vector<const CaseResult*>& cases);
void write_nls_table(std::ostream& os, const std::vector<NlsRow>& rows);

}  // namespace hvdc::studies
