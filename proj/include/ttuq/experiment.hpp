// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ttuq/als_cross.hpp"
#include "ttuq/config.hpp"
#include "ttuq/postproc.hpp"

namespace ttuq::experiment {

// Mesh, operator and parameter grid of one configuration.
struct Problem {
  config::ExperimentConfig cfg;
  fem::Mesh mesh;
  fem::FemOperator op;
  stochastic::ParamGrid grid;
  Vector w;

  explicit Problem(const config::ExperimentConfig& c);
  Index dim() const { return grid.dim(); }
  // (nodes, n_1..n_d) for the coefficient, (dofs, n_1..n_d) for the solution
  std::vector<Index> coeff_modes() const;
  std::vector<Index> solution_modes() const;
};

struct Row {
  std::string method;
  int level = 0;
  double eps = 0.0;
  Index d = 0, n = 0;
  std::optional<Index> r_max, det_solves;
  als::PhaseTimes times;
  std::uint64_t seed = 0;
  std::vector<double> q;
  std::optional<double> err;
};

std::string csv_header(Index S);
std::string csv_line(const Row& r);
// header written only when the file is new or empty
void write_rows(const std::filesystem::path& path, const std::vector<Row>& rows, Index S, bool append);
// mean of the Q1..QS columns over the rows of a result file
post::MomentSet read_reference(const std::filesystem::path& path, Index S);

TtTensor build_coeff(const Problem& p, std::uint64_t seed, double* seconds = nullptr);
als::AlsResult solve(const Problem& p, const TtTensor& coeff, std::uint64_t seed, bool parallel = true);
struct QoiResult {
  TtTensor qy;
  post::MomentSet moments;
  double seconds = 0.0;
};
// centered: moments about E[Q], as the density fit needs
QoiResult qoi_moments(const Problem& p, const TtTensor& u, std::uint64_t seed, bool parallel = true, bool centered = false);

// One run of a method with the given seed.
Row run_tt(const Problem& p, std::uint64_t seed, bool parallel = true);
Row run_mc(const Problem& p, std::uint64_t seed, bool parallel = true);
Row run_qmc(const Problem& p, std::uint64_t seed, bool parallel = true);

// All requested methods, cfg.runs runs each with seeds seed, seed+1, ...; err filled when a reference is set.
std::vector<Row> run_all(const config::ExperimentConfig& cfg, const std::vector<config::Method>& methods);
// tt runs over study.levels x study.eps; eps entries resynchronize all tolerances.
std::vector<Row> study(const config::ExperimentConfig& cfg);

// Subcommand steps reading and writing the paths of the config.
void cmd_build_coeff(const config::ExperimentConfig& cfg);
als::SolveReport cmd_solve(const config::ExperimentConfig& cfg);
Row cmd_moments(const config::ExperimentConfig& cfg);
post::PdfModel cmd_pdf(const config::ExperimentConfig& cfg);

// Checks a loaded tensor against the expected mode sizes.
void check_modes(const TtTensor& t, const std::vector<Index>& expect, const std::string& what);

}  // namespace ttuq::experiment
