// SPDX-License-Identifier: Apache-2.0
#include "ttuq/postproc.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>

#include "ttuq/log.hpp"

namespace ttuq::post {

namespace {

// Legendre polynomials L_0..L_S at t
void legendre(double t, Index S, double* out) {
  out[0] = 1.0;
  if (S >= 1) out[1] = t;
  for (Index p = 1; p < S; ++p)
    out[p + 1] = ((2.0 * static_cast<double>(p) + 1.0) * t * out[p] - static_cast<double>(p) * out[p - 1]) /
                 (static_cast<double>(p) + 1.0);
}

// a(p, i): coefficient of t^i in L_p
Matrix legendre_monomials(Index S) {
  Matrix a = Matrix::Zero(S + 1, S + 1);
  a(0, 0) = 1.0;
  if (S >= 1) a(1, 1) = 1.0;
  for (Index p = 1; p < S; ++p) {
    const double pp = static_cast<double>(p);
    for (Index i = 0; i <= p; ++i) {
      a(p + 1, i + 1) += (2.0 * pp + 1.0) / (pp + 1.0) * a(p, i);
      a(p + 1, i) -= pp / (pp + 1.0) * a(p - 1, i);
    }
  }
  return a;
}

double binom(Index n, Index k) {
  double r = 1.0;
  for (Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

struct Rule {
  std::vector<double> x, w;
};

// Gauss-Legendre on [-1, 1]
Rule legendre_rule(Index n) {
  const auto g = stochastic::gauss_rule(stochastic::Dist::uniform, n);
  Rule r;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    r.x.push_back(g.nodes[i] / std::sqrt(3.0));
    r.w.push_back(2.0 * g.weights[i]);
  }
  return r;
}

double exponent(const std::vector<double>& mu, double t) {
  std::vector<double> l(mu.size());
  legendre(t, static_cast<Index>(mu.size()) - 1, l.data());
  double s = 0.0;
  for (std::size_t p = 0; p < mu.size(); ++p) s += mu[p] * l[p];
  return s;
}

}  // namespace

double MomentSet::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

TtTensor spatial_qoi(const TtTensor& u, const Vector& w, double offset) {
  if (u.order() < 2) throw ShapeMismatch("spatial_qoi: need a spatial mode and at least one parameter mode");
  const TtCore& c0 = u.core(0);
  if (w.size() != c0.n) throw ShapeMismatch("spatial_qoi: weight length differs from the spatial mode size");
  const Matrix v = w.transpose() * Matrix(c0.left());
  std::vector<TtCore> cores(u.cores().begin() + 1, u.cores().end());
  const Matrix merged = v * cores[0].right();
  cores[0] = TtCore::from_right(merged, cores[0].n, cores[0].rr);
  const TtTensor q(std::move(cores));
  return round(add(q, TtTensor::constant(q.mode_sizes(), -offset)), 1e-14);
}

double quadrature(const TtTensor& v, const stochastic::ParamGrid& grid) {
  if (v.order() != grid.dim()) throw ShapeMismatch("quadrature: tensor order differs from grid dimension");
  Matrix acc = Matrix::Ones(1, 1);
  for (Index k = 0; k < v.order(); ++k) {
    const TtCore& c = v.core(k);
    const auto& w = grid.rules[static_cast<std::size_t>(k)].weights;
    if (static_cast<Index>(w.size()) != c.n) throw ShapeMismatch("quadrature: mode size differs from rule size");
    Matrix m = Matrix::Zero(c.rl, c.rr);
    for (Index j = 0; j < c.n; ++j) m += w[static_cast<std::size_t>(j)] * c.slice(j);
    acc = acc * m;
  }
  return acc(0, 0);
}

MomentSet moments(const TtTensor& qy, const stochastic::ParamGrid& grid, Index S, const MomentOptions& opts) {
  if (S < 1) throw InvalidInput("moments: S must be >= 1");
  MomentSet out;
  out.values.assign(static_cast<std::size_t>(S), 0.0);
  out.center = opts.center;
  const auto modes = qy.mode_sizes();
  std::exception_ptr err;
  auto one = [&](Index p) {
    auto ev = cross::tt_evaluator(qy, [p, c = opts.center](double x) {
      double r = 1.0;
      for (Index i = 0; i < p; ++i) r *= x - c;
      return r;
    });
    cross::CrossOptions co;
    co.rel_tol = opts.rel_tol;
    co.random_count = opts.init_count;
    co.max_sweeps = opts.max_sweeps;
    co.seed = opts.seed + static_cast<std::uint64_t>(p);
    const auto res = cross::tt_cross(ev, modes, co);
    const double v = quadrature(res.tt, grid);
    if (!std::isfinite(v)) throw InvalidInput("moments: non-finite moment of order " + std::to_string(p));
    out.values[static_cast<std::size_t>(p - 1)] = v;
  };
  if (!opts.parallel) {
    for (Index p = 1; p <= S; ++p) one(p);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (Index p = 1; p <= S; ++p) {
    try {
      one(p);
    } catch (...) {
#pragma omp critical(ttuq_moments_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return out;
}

Support sampled_support(const TtTensor& qy, const stochastic::ParamGrid& grid, Index samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidInput("sampled_support: need at least two samples");
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<Index>> draw;
  for (const auto& r : grid.rules) draw.emplace_back(r.weights.begin(), r.weights.end());
  std::vector<Index> idx(draw.size());
  double lo = 1e300, hi = -1e300, sum = 0.0, sq = 0.0;
  for (Index s = 0; s < samples; ++s) {
    for (std::size_t k = 0; k < draw.size(); ++k) idx[k] = draw[k](rng);
    const double q = element(qy, idx);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    sum += q;
    sq += q * q;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, (sq - n * mean * mean) / (n - 1.0)));
  double pad = 3.0 * sd;
  if (!(pad > 0.0)) pad = 1e-3 * std::max(1.0, std::abs(mean));
  return {lo - pad, hi + pad};
}

double PdfModel::operator()(double q) const {
  if (q < support.a || q > support.b) return 0.0;
  const double c = 0.5 * (support.a + support.b), s = 0.5 * (support.b - support.a);
  return std::exp(exponent(mu, (q - c) / s)) / s;
}

PdfModel maxent_pdf(const MomentSet& m, Support support, const MaxentOptions& opts) {
  if (!(support.b > support.a)) throw InvalidInput("maxent_pdf: empty support");
  if (opts.quad_points < 2) throw InvalidInput("maxent_pdf: need at least two quadrature points");
  for (double v : m.values)
    if (!std::isfinite(v)) throw InvalidInput("maxent_pdf: non-finite moment");
  const Index S = m.size();
  const double c = 0.5 * (support.a + support.b), s = 0.5 * (support.b - support.a);

  // moments of t = (q - c) / s = (q - center + center - c) / s, then of L_p(t)
  std::vector<double> mq(static_cast<std::size_t>(S + 1), 1.0);
  for (Index p = 1; p <= S; ++p) mq[static_cast<std::size_t>(p)] = m.values[static_cast<std::size_t>(p - 1)];
  const double shift = m.center - c;
  Vector mt(S + 1);
  for (Index i = 0; i <= S; ++i) {
    double v = 0.0;
    for (Index l = 0; l <= i; ++l) v += binom(i, l) * std::pow(shift, static_cast<double>(i - l)) * mq[static_cast<std::size_t>(l)];
    mt[i] = v / std::pow(s, static_cast<double>(i));
  }
  const Matrix a = legendre_monomials(S);
  const Vector target = a * mt;

  const Rule rule = legendre_rule(opts.quad_points);
  const Index G = static_cast<Index>(rule.x.size());
  Matrix L(G, S + 1);
  std::vector<double> lg(static_cast<std::size_t>(S + 1));
  for (Index g = 0; g < G; ++g) {
    legendre(rule.x[static_cast<std::size_t>(g)], S, lg.data());
    for (Index p = 0; p <= S; ++p) L(g, p) = lg[static_cast<std::size_t>(p)];
  }

  Vector mu = Vector::Zero(S + 1);
  mu[0] = -std::log(2.0);
  auto density = [&](const Vector& x) {
    Vector f = L * x;
    for (Index g = 0; g < G; ++g) f[g] = std::exp(std::min(f[g], 700.0)) * rule.w[static_cast<std::size_t>(g)];
    return f;
  };
  auto dual = [&](const Vector& x, const Vector& wf) { return wf.sum() - x.dot(target); };

  Vector wf = density(mu);
  Vector grad = L.transpose() * wf - target;
  double obj = dual(mu, wf);
  int it = 0;
  for (; it < opts.max_newton && grad.lpNorm<Eigen::Infinity>() > opts.newton_tol; ++it) {
    const Matrix H = L.transpose() * wf.asDiagonal() * L;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15)
      throw MaxentError("maxent_pdf: ill-conditioned Hessian; try a wider support or fewer moments");
    const Vector step = ldlt.solve(Eigen::VectorXd(-grad));
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Vector trial = mu + t * step;
      const Vector twf = density(trial);
      const double tobj = dual(trial, twf);
      if (std::isfinite(tobj) && tobj <= obj + 1e-14 * std::abs(obj)) {
        mu = trial;
        wf = twf;
        obj = tobj;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    grad = L.transpose() * wf - target;
  }
  const double res = grad.lpNorm<Eigen::Infinity>();
  if (!(res <= opts.newton_tol)) {
    std::ostringstream os;
    os << "maxent_pdf: Newton stopped after " << it << " iterations with moment residual " << res
       << "; try a wider support or fewer moments";
    throw MaxentError(os.str());
  }

  PdfModel out;
  out.support = support;
  out.mu.assign(mu.data(), mu.data() + mu.size());
  out.newton_iters = it;
  out.residual = res;
  // exponent in powers of q: sum_p mu_p sum_i a(p,i) ((q - c)/s)^i - log s
  out.lambda.assign(static_cast<std::size_t>(S + 1), 0.0);
  for (Index p = 0; p <= S; ++p)
    for (Index i = 0; i <= p; ++i) {
      const double coef = mu[p] * a(p, i) / std::pow(s, static_cast<double>(i));
      if (coef == 0.0) continue;
      for (Index l = 0; l <= i; ++l)
        out.lambda[static_cast<std::size_t>(l)] += coef * binom(i, l) * std::pow(-c, static_cast<double>(i - l));
    }
  out.lambda[0] -= std::log(s);
  return out;
}

double run_error(const std::vector<MomentSet>& runs, const MomentSet& reference) {
  if (runs.empty()) throw InvalidInput("run_error: no runs");
  const double rn = reference.norm();
  if (!(rn > 0.0)) throw InvalidInput("run_error: reference moments have zero norm");
  double acc = 0.0;
  for (const auto& r : runs) {
    if (r.size() != reference.size()) throw ShapeMismatch("run_error: moment count differs from the reference");
    if (r.center != reference.center) throw InvalidInput("run_error: moments about different centers");
    double d = 0.0;
    for (Index p = 0; p < r.size(); ++p) {
      const double e = r.values[static_cast<std::size_t>(p)] - reference.values[static_cast<std::size_t>(p)];
      d += e * e;
    }
    if (d == 0.0) return 0.0;
    acc += 0.5 * std::log(d);
  }
  return std::exp(acc / static_cast<double>(runs.size()) - std::log(rn));
}

double pdf_distance(const PdfModel& pa, const PdfModel& pb) {
  const double lo = std::max(pa.support.a, pb.support.a), hi = std::min(pa.support.b, pb.support.b);
  if (!(hi > lo)) throw InvalidInput("pdf_distance: supports do not overlap");
  // composite Gauss-Legendre, 64 panels of 16 points
  const Rule r = legendre_rule(16);
  const Index panels = 64;
  const double hpanel = (hi - lo) / static_cast<double>(panels);
  double num = 0.0, den = 0.0;
  for (Index k = 0; k < panels; ++k) {
    const double mid = lo + (static_cast<double>(k) + 0.5) * hpanel;
    for (std::size_t g = 0; g < r.x.size(); ++g) {
      const double q = mid + 0.5 * hpanel * r.x[g];
      const double w = 0.5 * hpanel * r.w[g];
      const double va = pa(q), vb = pb(q);
      num += w * (va - vb) * (va - vb);
      den += w * vb * vb;
    }
  }
  return std::sqrt(num) / std::sqrt(den);
}

void write_pdf_csv(const std::filesystem::path& path, const PdfModel& p, Index points) {
  if (points < 2) throw InvalidInput("write_pdf_csv: need at least two points");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_pdf_csv: cannot open " + path.string());
  out.precision(17);
  out << "q,pdf\n";
  for (Index i = 0; i < points; ++i) {
    const double q = p.support.a + (p.support.b - p.support.a) * static_cast<double>(i) / static_cast<double>(points - 1);
    out << q << "," << p(q) << "\n";
  }
}

}  // namespace ttuq::post
