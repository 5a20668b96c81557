#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hvdc/grid.hpp"
#include "hvdc/ipm.hpp"
#include "hvdc/minlp.hpp"
#include "hvdc/opf.hpp"

namespace hvdc::io {

inline constexpr int kSchemaVersion = 1;

enum class Study { Opf, Scopf, SweepNb, Nls };

std::string_view to_string(Study study);

struct StudyConfig {
  Study study = Study::Opf;
  std::optional<int> nb;
  std::optional<std::pair<int, int>> nb_range;  // inclusive, sweep-nb and scopf
  converter::NbMode nb_mode = converter::NbMode::Exact;
  std::optional<std::string> outage;
  std::vector<std::string> contingencies;
  std::optional<double> offset_limit_kv;
  std::vector<double> offset_limits_kv;  // nls rows after the unrestricted one
  std::vector<std::string> nls_candidates;
  bool faulted_counts_as_asymmetric = true;
  double neutral_voltage_bound_pu = 1.0;
  opf::Strategy strategy = opf::Strategy::Enumerate;
  nlp::SolverOptions solver;
  nlp::MultiStartOptions multistart;
  int threads = 1;
  std::string out_dir = "out";
};

/// Parses a grid document. Errors name the offending field path
/// (e.g. "dc_nodes[2].kind") or the line and column of a syntax error.
Grid parse_grid(std::string_view text);
Grid load_grid(const std::filesystem::path& path);

/// Canonical JSON: fields in schema order, entities in declaration order.
std::string dump_grid(const Grid& grid);
void save_grid(const Grid& grid, const std::filesystem::path& path);

StudyConfig parse_config(std::string_view text);
StudyConfig load_config(const std::filesystem::path& path);
std::string dump_config(const StudyConfig& config);

/// Study-specific checks against a grid; throws InputError listing problems.
void check_config(const StudyConfig& config, const Grid& grid);

/// 64-bit FNV-1a of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace hvdc::io
