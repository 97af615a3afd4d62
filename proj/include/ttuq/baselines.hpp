// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "ttuq/fem.hpp"
#include "ttuq/postproc.hpp"
#include "ttuq/stochastic.hpp"

namespace ttuq::baselines {

// Sampling model: the truncated KLE coefficient at exact parameter values, one FEM solve per sample.
struct Model {
  stochastic::KleSpec spec;
  Index d = 1;
  fem::FemOperator op;
  Matrix psi;  // node_count x d
  Vector w;    // QoI weights over free DOFs
  // nodal coefficient override for tests; c(node, y)
  std::function<double(Index, std::span<const double>)> coeff_fn;

  // d < 1 takes the truncation dimension of the spec
  static Model build(const stochastic::KleSpec& spec, int level, Index d = 0);

  Vector nodal_coeff(std::span<const double> y) const;
  // w^T u(y) - 0.2
  double qoi(fem::DetSolver& solver, std::span<const double> y, std::string_view sample_id = "") const;
};

struct SampleOptions {
  std::uint64_t seed = 1;
  bool parallel = true;
};

struct McResult {
  post::MomentSet moments;
  std::vector<double> std_errors;
  std::vector<double> samples;  // Q per sample, in sample order
};

// Plain Monte Carlo over the parameter distribution. Sample i draws from its own stream so the
// result does not depend on thread count.
McResult mc_moments(const Model& model, Index n, Index S, const SampleOptions& opts = {});

struct LatticeRule {
  std::vector<std::uint64_t> z;
  std::uint64_t n = 1;
  std::vector<double> shift;
  std::uint64_t seed = 0;

  Index dim() const { return static_cast<Index>(z.size()); }
  // frac(i z / N + shift)
  void point(std::uint64_t i, std::span<double> x) const;
};

// z = (1, a, a^2, ...) mod 2^m
LatticeRule korobov_rule(Index d, int m, std::uint64_t a = 76);
// Component-by-component generating vector for product weights gamma_k = k^-decay, minimizing the
// shift-averaged worst-case error in the unanchored Sobolev space. O(d N^2).
LatticeRule cbc_rule(Index d, int m, double decay = 2.0);
// squared shift-averaged worst-case error of z for the weights above
double worst_case_error2(const LatticeRule& rule, double decay = 2.0);
// first d integers of a generating-vector file, one per line
LatticeRule load_rule(const std::filesystem::path& path, Index d, int m);
void save_rule(const std::filesystem::path& path, const LatticeRule& rule);
// draws a uniform shift in [0, 1)^d; seed 0 leaves the shift at zero
void set_shift(LatticeRule& rule, std::uint64_t seed);

// Phi^{-1}(p), absolute error below 1e-9
double inverse_normal(double p);
// unit-cube point to parameter values of the given distribution
void to_param(stochastic::Dist dist, std::span<const double> x, std::span<double> y);

post::MomentSet qmc_moments(const Model& model, const LatticeRule& rule, Index S, const SampleOptions& opts = {});

// Mean of f over the rule's points mapped to the distribution; used for quadrature checks.
double qmc_mean(const LatticeRule& rule, stochastic::Dist dist, const std::function<double(std::span<const double>)>& f);
double mc_mean(Index d, Index n, stochastic::Dist dist, std::uint64_t seed,
               const std::function<double(std::span<const double>)>& f);

}  // namespace ttuq::baselines
