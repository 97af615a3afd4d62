// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "ttuq/cross.hpp"
#include "ttuq/fem.hpp"
#include "ttuq/tt.hpp"

namespace ttuq::stochastic {

enum class Form { affine, log };
enum class Dist { uniform, normal };

Form parse_form(const std::string& s);
Dist parse_dist(const std::string& s);
std::string to_string(Form f);
std::string to_string(Dist d);

struct KleSpec {
  double nu = 4.0;
  double sigma2 = 1.0;
  int k0 = 1;
  Form form = Form::log;
  Dist dist = Dist::normal;
  double trunc_tol = 1e-4;
  double affine_mean = 10.0;
  Index max_dim = 10000;

  // throws InvalidInput on affine + normal and on nonpositive parameters
  void validate() const;
};

// D_k: 1 for k <= k0, (k - k0)^-nu beyond.
double decay(const KleSpec& spec, Index k);

struct KleIndex {
  Index tau, rho1, rho2;
};
KleIndex kle_index(Index k);

// Smallest d >= 1 with sigma2 * D_{d+1} / sum_{m<=d} D_m < trunc_tol.
Index truncation_dim(const KleSpec& spec);

// The truncated field w(x, y) = sum_k y_k psi_k(x), psi_k = sqrt(eta_k) cos(2 pi rho1 x1) cos(2 pi rho2 x2).
class KleField {
 public:
  KleField(const KleSpec& spec, Index d);

  Index dim() const { return d_; }
  const KleSpec& spec() const { return spec_; }
  double eta(Index k) const { return eta_[static_cast<std::size_t>(k - 1)]; }
  double psi(Index k, std::array<double, 2> x) const;
  // node_count x d, column k-1 holds psi_k at the grid nodes
  Matrix psi_nodes(const fem::Mesh& mesh) const;

 private:
  KleSpec spec_;
  Index d_;
  std::vector<double> eta_;
};

// sqrt(eta_k) cos(2 pi rho1 x1) cos(2 pi rho2 x2)
double kle_term(const KleSpec& spec, Index d, Index k, std::array<double, 2> x);

struct GaussRule {
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // sum to 1
};

// normal: probabilists' Gauss-Hermite; uniform: Gauss-Legendre on (-sqrt3, sqrt3) with density 1/(2 sqrt3).
GaussRule gauss_rule(Dist dist, Index n);

struct ParamGrid {
  Dist dist = Dist::normal;
  std::vector<GaussRule> rules;  // one per parameter y_1..y_d

  static ParamGrid build(Dist dist, const std::vector<Index>& sizes);
  Index dim() const { return static_cast<Index>(rules.size()); }
  std::vector<Index> sizes() const;
  double node(Index k, Index j) const { return rules[static_cast<std::size_t>(k - 1)].nodes[static_cast<std::size_t>(j)]; }
};

// n_k = max(1, ceil(n + (1 - n) log D_k / log D_d)); all n when D_d = 1.
std::vector<Index> anisotropic_sizes(Index n, const KleSpec& spec, Index d);

// Coefficient at a grid node for parameter values y (length d).
double coefficient(const KleSpec& spec, const Matrix& psi_nodes, Index node, std::span<const double> y);

// Exact TT of 10 + w on (nodes, n_1..n_d) with ranks d+1-k.
TtTensor coeff_affine_tt(const KleSpec& spec, const fem::Mesh& mesh, const ParamGrid& grid);

struct LogCoeffOptions {
  double rel_tol = 1e-6;
  Index init_count = 800;
  int max_sweeps = 10;
  std::uint64_t seed = 1;
};

// TT-Cross approximation of exp(w) on (nodes, n_1..n_d).
cross::CrossResult coeff_log_tt(const KleSpec& spec, const fem::Mesh& mesh, const ParamGrid& grid,
                                const LogCoeffOptions& opts);

// Evaluator of exp(w) (or 10 + w for the affine form) with block support, for cross and tests.
cross::EvalFn coefficient_evaluator(const KleSpec& spec, const Matrix& psi_nodes, const ParamGrid& grid);

}  // namespace ttuq::stochastic
