// SPDX-License-Identifier: Apache-2.0
#include "ttuq/stochastic.hpp"

#include <cmath>
#include <numbers>

namespace ttuq::stochastic {

Form parse_form(const std::string& s) {
  if (s == "affine") return Form::affine;
  if (s == "log") return Form::log;
  throw InvalidInput("unknown coefficient form '" + s + "' (expected affine or log)");
}

Dist parse_dist(const std::string& s) {
  if (s == "uniform") return Dist::uniform;
  if (s == "normal") return Dist::normal;
  throw InvalidInput("unknown distribution '" + s + "' (expected uniform or normal)");
}

std::string to_string(Form f) { return f == Form::affine ? "affine" : "log"; }
std::string to_string(Dist d) { return d == Dist::uniform ? "uniform" : "normal"; }

void KleSpec::validate() const {
  if (!(nu > 0.0)) throw InvalidInput("kle: nu must be positive");
  if (!(sigma2 > 0.0)) throw InvalidInput("kle: sigma2 must be positive");
  if (k0 < 1) throw InvalidInput("kle: k0 must be >= 1");
  if (!(trunc_tol > 0.0)) throw InvalidInput("kle: trunc_tol must be positive");
  if (form == Form::affine && dist != Dist::uniform)
    throw InvalidInput("kle: the affine form needs uniform parameters");
}

double decay(const KleSpec& spec, Index k) {
  if (k <= spec.k0) return 1.0;
  return std::pow(static_cast<double>(k - spec.k0), -spec.nu);
}

KleIndex kle_index(Index k) {
  const auto tau = static_cast<Index>(std::floor(-0.5 + std::sqrt(0.25 + 2.0 * static_cast<double>(k))));
  const Index rho1 = k - tau * (tau + 1) / 2;
  return {tau, rho1, tau - rho1};
}

Index truncation_dim(const KleSpec& spec) {
  spec.validate();
  double sum = 0.0;
  for (Index d = 1; d <= spec.max_dim; ++d) {
    sum += decay(spec, d);
    if (spec.sigma2 * decay(spec, d + 1) / sum < spec.trunc_tol) return d;
  }
  throw InvalidInput("truncation_dim: tolerance " + std::to_string(spec.trunc_tol) + " not reached within " +
                     std::to_string(spec.max_dim) + " terms");
}

KleField::KleField(const KleSpec& spec, Index d) : spec_(spec), d_(d) {
  if (d < 1) throw InvalidInput("KleField: dimension must be >= 1");
  double sum = 0.0;
  for (Index k = 1; k <= d; ++k) sum += decay(spec, k);
  for (Index k = 1; k <= d; ++k) eta_.push_back(spec.sigma2 * decay(spec, k) / sum);
}

double KleField::psi(Index k, std::array<double, 2> x) const {
  if (k < 1 || k > d_) throw InvalidInput("KleField: term index out of range");
  const auto [tau, rho1, rho2] = kle_index(k);
  (void)tau;
  const double two_pi = 2.0 * std::numbers::pi;
  return std::sqrt(eta(k)) * std::cos(two_pi * static_cast<double>(rho1) * x[0]) *
         std::cos(two_pi * static_cast<double>(rho2) * x[1]);
}

Matrix KleField::psi_nodes(const fem::Mesh& mesh) const {
  Matrix out(mesh.node_count(), d_);
  for (Index node = 0; node < mesh.node_count(); ++node) {
    const auto xy = mesh.node_xy(node);
    for (Index k = 1; k <= d_; ++k) out(node, k - 1) = psi(k, xy);
  }
  return out;
}

double kle_term(const KleSpec& spec, Index d, Index k, std::array<double, 2> x) { return KleField(spec, d).psi(k, x); }

GaussRule gauss_rule(Dist dist, Index n) {
  if (n < 1) throw InvalidInput("gauss_rule: need at least one node");
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0), off(static_cast<std::size_t>(n - 1));
  for (Index k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    off[static_cast<std::size_t>(k - 1)] = dist == Dist::normal ? std::sqrt(kk) : kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  const auto eig = dense::symtridiag_eig(diag, off);
  const double scale = dist == Dist::normal ? 1.0 : std::sqrt(3.0);
  GaussRule rule;
  double total = 0.0;
  for (Index j = 0; j < n; ++j) {
    rule.nodes.push_back(scale * eig.values[j]);
    rule.weights.push_back(eig.first_components[j] * eig.first_components[j]);
    total += rule.weights.back();
  }
  for (auto& w : rule.weights) w /= total;
  // symmetric rules: clean the odd-symmetric rounding noise
  for (Index j = 0; j < n / 2; ++j) {
    const auto a = static_cast<std::size_t>(j), b = static_cast<std::size_t>(n - 1 - j);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    rule.weights[a] = rule.weights[b] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

ParamGrid ParamGrid::build(Dist dist, const std::vector<Index>& sizes) {
  ParamGrid g;
  g.dist = dist;
  for (Index n : sizes) g.rules.push_back(gauss_rule(dist, n));
  return g;
}

std::vector<Index> ParamGrid::sizes() const {
  std::vector<Index> out;
  for (const auto& r : rules) out.push_back(static_cast<Index>(r.nodes.size()));
  return out;
}

std::vector<Index> anisotropic_sizes(Index n, const KleSpec& spec, Index d) {
  if (n < 1) throw InvalidInput("anisotropic_sizes: base size must be >= 1");
  if (d < 1) throw InvalidInput("anisotropic_sizes: dimension must be >= 1");
  const double log_dd = std::log(decay(spec, d));
  std::vector<Index> out;
  for (Index k = 1; k <= d; ++k) {
    if (log_dd == 0.0) {
      out.push_back(n);
      continue;
    }
    const double v = static_cast<double>(n) + (1.0 - static_cast<double>(n)) * std::log(decay(spec, k)) / log_dd;
    out.push_back(std::max<Index>(1, static_cast<Index>(std::ceil(v - 1e-12))));
  }
  return out;
}

double coefficient(const KleSpec& spec, const Matrix& psi_nodes, Index node, std::span<const double> y) {
  double w = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) w += psi_nodes(node, static_cast<Index>(k)) * y[k];
  return spec.form == Form::affine ? spec.affine_mean + w : std::exp(w);
}

TtTensor coeff_affine_tt(const KleSpec& spec, const fem::Mesh& mesh, const ParamGrid& grid) {
  if (spec.form != Form::affine) throw InvalidInput("coeff_affine_tt: spec is not affine");
  const Index d = grid.dim();
  const Matrix psi = KleField(spec, d).psi_nodes(mesh);
  const Index nn = mesh.node_count();
  std::vector<TtCore> cores;
  // channel 0 carries the accumulated value, channel c >= 1 the pending term of y_{k-1+c}
  TtCore c0(1, nn, d + 1);
  for (Index i = 0; i < nn; ++i) {
    c0(0, i, 0) = spec.affine_mean;
    for (Index k = 1; k <= d; ++k) c0(0, i, k) = psi(i, k - 1);
  }
  cores.push_back(std::move(c0));
  for (Index k = 1; k <= d; ++k) {
    const Index rl = d + 2 - k, rr = d + 1 - k, n = grid.sizes()[static_cast<std::size_t>(k - 1)];
    TtCore c(rl, n, rr);
    for (Index j = 0; j < n; ++j) {
      c(0, j, 0) = 1.0;
      c(1, j, 0) = grid.node(k, j);
      for (Index m = 2; m < rl; ++m) c(m, j, m - 1) = 1.0;
    }
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

cross::EvalFn coefficient_evaluator(const KleSpec& spec, const Matrix& psi_nodes, const ParamGrid& grid) {
  const Index d = grid.dim();
  if (psi_nodes.cols() != d) throw ShapeMismatch("coefficient_evaluator: psi columns differ from grid dimension");
  auto g = [form = spec.form, mean = spec.affine_mean](double s) { return form == Form::affine ? mean + s : std::exp(s); };
  auto batch = [=](std::span<const Index> idx, Index count, std::span<double> out) {
    for (Index t = 0; t < count; ++t) {
      const Index* row = idx.data() + t * (d + 1);
      double s = 0.0;
      for (Index k = 1; k <= d; ++k) s += psi_nodes(row[0], k - 1) * grid.node(k, row[k]);
      out[static_cast<std::size_t>(t)] = g(s);
    }
  };
  auto block = [=](Index k, const cross::IndexSet& left, Index n, const cross::IndexSet& right, std::span<double> out) {
    const Index nr = right.rows;
    // y values of the right tuples: (d-k) x nr
    Matrix yr(d - k, nr);
    for (Index b = 0; b < nr; ++b)
      for (Index m = 0; m < d - k; ++m) yr(m, b) = grid.node(k + 1 + m, right(b, m));
    if (k == 0) {
      const Matrix s = psi_nodes * yr;
      for (Index i = 0; i < n; ++i)
        for (Index b = 0; b < nr; ++b) out[static_cast<std::size_t>(i * nr + b)] = g(s(i, b));
      return;
    }
    Matrix pr(left.rows, d - k);
    Vector sl(left.rows), pk(left.rows);
    for (Index a = 0; a < left.rows; ++a) {
      const Index node = left(a, 0);
      double s = 0.0;
      for (Index m = 1; m < k; ++m) s += psi_nodes(node, m - 1) * grid.node(m, left(a, m));
      sl[a] = s;
      pk[a] = psi_nodes(node, k - 1);
      for (Index m = 0; m < d - k; ++m) pr(a, m) = psi_nodes(node, k + m);
    }
    const Matrix p = pr * yr;
    for (Index a = 0; a < left.rows; ++a)
      for (Index j = 0; j < n; ++j) {
        const double base = sl[a] + pk[a] * grid.node(k, j);
        double* dst = out.data() + (a * n + j) * nr;
        for (Index b = 0; b < nr; ++b) dst[b] = g(base + p(a, b));
      }
  };
  return cross::EvalFn(d + 1, batch, block);
}

cross::CrossResult coeff_log_tt(const KleSpec& spec, const fem::Mesh& mesh, const ParamGrid& grid,
                                const LogCoeffOptions& opts) {
  if (spec.form != Form::log) throw InvalidInput("coeff_log_tt: spec is not the log form");
  const Matrix psi = KleField(spec, grid.dim()).psi_nodes(mesh);
  auto ev = coefficient_evaluator(spec, psi, grid);
  std::vector<Index> modes{mesh.node_count()};
  for (Index n : grid.sizes()) modes.push_back(n);
  cross::CrossOptions co;
  co.rel_tol = opts.rel_tol;
  co.random_count = opts.init_count;
  co.max_sweeps = opts.max_sweeps;
  co.seed = opts.seed;
  return cross::tt_cross(ev, modes, co);
}

}  // namespace ttuq::stochastic
