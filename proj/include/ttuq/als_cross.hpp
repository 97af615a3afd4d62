// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttuq/cross.hpp"
#include "ttuq/fem.hpp"
#include "ttuq/tt.hpp"

namespace ttuq::als {

enum class Mode { one_shot, iterative };

Mode parse_mode(const std::string& s);
std::string to_string(Mode m);

struct AlsOptions {
  double rel_tol = 1e-4;
  Mode mode = Mode::one_shot;
  int max_sweeps = 20;
  // columns added per bond by residual enrichment (iterative mode)
  Index enrich_rank = 4;
  std::uint64_t seed = 1;
  // OpenMP snapshot solves; false runs the serial reference loop
  bool parallel = true;

  void validate() const;
};

// Wall-clock seconds per phase.
struct PhaseTimes {
  double coeff = 0.0;
  double det = 0.0;
  double proj = 0.0;
  double stoch = 0.0;
  double qoi = 0.0;

  double total() const { return coeff + det + proj + stoch + qoi; }
};

struct SolveReport {
  int sweeps = 0;
  bool converged = false;
  double final_change = 0.0;
  std::size_t det_solves = 0;
  std::vector<Index> det_solves_per_sweep;
  std::vector<double> changes;
  std::vector<Index> ranks;
  Index max_rank = 0;
  // solution blocks are truncated after local solves in these sweep directions
  bool rounded_forward = true;
  bool rounded_backward = true;
  PhaseTimes times;
};

struct AlsResult {
  TtTensor u;
  SolveReport report;
};

// Right-hand side TT for the Dirichlet lift: spatial block lift_map * c^(0), parametric blocks of c.
TtTensor lifted_rhs(const fem::FemOperator& op, const TtTensor& coeff);

// Solver state for A(c) u = f with c, f given as TTs over (space, n_1..n_d).
// The coefficient's spatial mode runs over mesh nodes, the rhs and solution's over free DOFs.
class AlsCross {
 public:
  AlsCross(const fem::FemOperator& op, TtTensor coeff, TtTensor rhs, AlsOptions opts = {});

  // Initial guess from the parametric blocks of the coefficient rounded at rel_tol, then a backward
  // restriction sweep.
  void initialize();
  void spatial_step();
  // 1 <= k <= d
  void forward_step(Index k);
  void backward_step(Index k);
  // spatial step, forward and backward sweeps; returns the relative change of the solution
  double sweep();
  AlsResult run();

  Index dim() const { return d_; }
  const AlsOptions& options() const { return opts_; }
  const fem::FemOperator& op() const { return *op_; }
  const TtTensor& coeff() const { return coeff_; }
  const TtTensor& rhs() const { return rhs_; }
  const std::vector<TtCore>& cores() const { return cores_; }
  TtTensor solution() const { return TtTensor(cores_); }
  const SolveReport& report() const { return report_; }

  // Projected operator blocks: R_{k-1} matrices of size r_{k-1} x r_{k-1}, k = 1..d.
  const std::vector<Matrix>& a_left(Index k) const { return a_left_[static_cast<std::size_t>(k)]; }
  // r_{k-1} x rho_{k-1}, k = 1..d
  const Matrix& f_left(Index k) const { return f_left_[static_cast<std::size_t>(k)]; }
  // Restricted coefficient and rhs interfaces, R_k x r_k and rho_k x r_k, k = 0..d.
  const Matrix& c_right(Index k) const { return c_right_[static_cast<std::size_t>(k)]; }
  const Matrix& f_right(Index k) const { return f_right_[static_cast<std::size_t>(k)]; }
  // Parameter tuples J_{>k} over modes k+1..d, k = 0..d.
  const cross::IndexSet& right_set(Index k) const { return j_right_[static_cast<std::size_t>(k)]; }

 private:
  TtCore solve_local(Index k) const;
  TtCore residual_core(Index k, const TtCore& u) const;
  Matrix snapshots(const Matrix& chat, const Matrix& fhat, const cross::IndexSet& samples) const;
  void restrict_step(Index k, bool solve);
  void init_residual_sets();
  void project_left(Index k);

  const fem::FemOperator* op_;
  TtTensor coeff_, rhs_;
  AlsOptions opts_;
  Index d_;
  std::vector<TtCore> cores_;
  std::vector<std::vector<Matrix>> a_left_;
  std::vector<Matrix> f_left_, c_right_, f_right_;
  std::vector<cross::IndexSet> j_right_;
  // residual enrichment state: tuples, restricted c, f and u at those tuples
  std::vector<cross::IndexSet> jt_right_;
  std::vector<Matrix> ct_right_, ft_right_, ut_right_;
  SolveReport report_;
  bool initialized_ = false;
};

AlsResult solve(const fem::FemOperator& op, const TtTensor& coeff, const TtTensor& rhs, const AlsOptions& opts);

// Projections rebuilt from the full left interfaces; exponential in k, for small problems.
std::vector<Matrix> reference_a_left(const AlsCross& s, Index k);
Matrix reference_f_left(const AlsCross& s, Index k);

// v(:, j) for a parameter multi-index j of length d.
Vector spatial_fiber(const TtTensor& v, std::span<const Index> param);

// max over samples of ||f_j - A(c_j) u_j|| / ||f_j||
double sampled_residual(const fem::FemOperator& op, const TtTensor& coeff, const TtTensor& rhs, const TtTensor& u,
                        const std::vector<std::vector<Index>>& samples);

}  // namespace ttuq::als
