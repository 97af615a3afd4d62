// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ttuq/cross.hpp"
#include "ttuq/stochastic.hpp"
#include "ttuq/tt.hpp"

namespace ttuq::post {

struct MaxentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kQoiOffset = 0.2;

// E[(Q - center)^p], p = 1..S
struct MomentSet {
  std::vector<double> values;
  double center = 0.0;

  Index size() const { return static_cast<Index>(values.size()); }
  double norm() const;
};

// Q(y) = w^T u(:, y) - 0.2 as a TT over the parameter modes.
TtTensor spatial_qoi(const TtTensor& u, const Vector& w, double offset = kQoiOffset);

// sum_j prod_k w_k(j_k) v(j)
double quadrature(const TtTensor& v, const stochastic::ParamGrid& grid);

struct MomentOptions {
  double rel_tol = 1e-10;
  Index init_count = 800;
  int max_sweeps = 10;
  std::uint64_t seed = 1;
  bool parallel = true;
  // moments of Q - center; a center near E[Q] keeps high orders resolvable
  double center = 0.0;
};

// Q_p = E[Q^p] by a cross approximation of Q^p per p, contracted with the quadrature weights.
MomentSet moments(const TtTensor& qy, const stochastic::ParamGrid& grid, Index S, const MomentOptions& opts = {});

struct Support {
  double a = 0.0, b = 1.0;
};

// [min, max] of sampled Q values padded by 3 sample standard deviations. Grid indices are drawn
// with the quadrature weights as probabilities.
Support sampled_support(const TtTensor& qy, const stochastic::ParamGrid& grid, Index samples = 10000,
                        std::uint64_t seed = 1);

// P(q) = exp(sum_p mu_p L_p(t)) / s with t = (q - c) / s mapping the support onto [-1, 1] and L_p the
// Legendre polynomials. `lambda` holds the same exponent expanded in powers of q.
struct PdfModel {
  Support support;
  std::vector<double> mu;
  std::vector<double> lambda;
  int newton_iters = 0;
  double residual = 0.0;

  double operator()(double q) const;
  Index order() const { return static_cast<Index>(mu.size()) - 1; }
};

struct MaxentOptions {
  Index quad_points = 200;
  double newton_tol = 1e-10;
  int max_newton = 200;
};

// Entropy maximizer on the support matching the given moments; S = 0 gives the uniform density.
PdfModel maxent_pdf(const MomentSet& m, Support support, const MaxentOptions& opts = {});

// exp(mean_i log ||Q_i - Q*|| - log ||Q*||); 0 when any run matches exactly. Centers must agree.
double run_error(const std::vector<MomentSet>& runs, const MomentSet& reference);

// ||P_a - P_b||_2 / ||P_b||_2 over the intersection of the supports
double pdf_distance(const PdfModel& pa, const PdfModel& pb);

// q, P(q) on a uniform grid of `points` values over the support
void write_pdf_csv(const std::filesystem::path& path, const PdfModel& p, Index points = 512);

}  // namespace ttuq::post
