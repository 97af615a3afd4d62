// SPDX-License-Identifier: Apache-2.0
#include "ttuq/baselines.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <random>
#include <string>

namespace ttuq::baselines {

namespace {

constexpr double kTiny = 0x1p-64;

// runs q(i) for i < n into out, one DetSolver per thread
template <class F>
void sample_loop(const Model& model, Index n, bool parallel, std::vector<double>& out, F&& q) {
  out.assign(static_cast<std::size_t>(n), 0.0);
  if (!parallel) {
    fem::DetSolver solver(model.op);
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = q(solver, i);
    return;
  }
  std::exception_ptr err;
#pragma omp parallel
  {
    fem::DetSolver solver(model.op);
#pragma omp for schedule(dynamic, 4)
    for (Index i = 0; i < n; ++i) {
      try {
        out[static_cast<std::size_t>(i)] = q(solver, i);
      } catch (...) {
#pragma omp critical(ttuq_sample_error)
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

std::vector<double> power_means(const std::vector<double>& qs, Index S) {
  std::vector<double> m(static_cast<std::size_t>(S), 0.0);
  for (double q : qs) {
    double v = 1.0;
    for (Index p = 0; p < S; ++p) m[static_cast<std::size_t>(p)] += (v *= q);
  }
  for (auto& x : m) x /= static_cast<double>(qs.size());
  return m;
}

void draw_param(stochastic::Dist dist, std::mt19937_64& rng, std::span<double> y) {
  if (dist == stochastic::Dist::normal) {
    std::normal_distribution<double> nd;
    for (auto& v : y) v = nd(rng);
  } else {
    std::uniform_real_distribution<double> ud(-std::sqrt(3.0), std::sqrt(3.0));
    for (auto& v : y) v = ud(rng);
  }
}

std::mt19937_64 sample_rng(std::uint64_t seed, Index i) {
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
  return std::mt19937_64(sq);
}

}  // namespace

Model Model::build(const stochastic::KleSpec& spec, int level, Index d) {
  spec.validate();
  if (d < 1) d = stochastic::truncation_dim(spec);
  const auto mesh = fem::Mesh::from_level(level);
  Model m{spec, d, fem::FemOperator(mesh), stochastic::KleField(spec, d).psi_nodes(mesh), fem::qoi_weights(mesh), {}};
  return m;
}

Vector Model::nodal_coeff(std::span<const double> y) const {
  if (static_cast<Index>(y.size()) != d) throw ShapeMismatch("Model: parameter vector length differs from d");
  Vector c(op.nodes());
  for (Index i = 0; i < op.nodes(); ++i) c[i] = coeff_fn ? coeff_fn(i, y) : stochastic::coefficient(spec, psi, i, y);
  return c;
}

double Model::qoi(fem::DetSolver& solver, std::span<const double> y, std::string_view sample_id) const {
  const Vector c = nodal_coeff(y);
  const std::span<const double> cs(c.data(), static_cast<std::size_t>(c.size()));
  const Vector u = solver.solve(op.assemble(cs), op.lift(cs), sample_id);
  return w.dot(u) - post::kQoiOffset;
}

McResult mc_moments(const Model& model, Index n, Index S, const SampleOptions& opts) {
  if (n < 2) throw InvalidInput("mc_moments: need at least two samples");
  if (S < 1) throw InvalidInput("mc_moments: S must be >= 1");
  McResult r;
  sample_loop(model, n, opts.parallel, r.samples, [&](fem::DetSolver& solver, Index i) {
    auto rng = sample_rng(opts.seed, i);
    std::vector<double> y(static_cast<std::size_t>(model.d));
    draw_param(model.spec.dist, rng, y);
    return model.qoi(solver, y, "mc sample " + std::to_string(i));
  });
  r.moments.values = power_means(r.samples, S);
  r.std_errors.assign(static_cast<std::size_t>(S), 0.0);
  for (Index p = 0; p < S; ++p) {
    const double mean = r.moments.values[static_cast<std::size_t>(p)];
    double ss = 0.0;
    for (double q : r.samples) {
      const double e = std::pow(q, static_cast<double>(p + 1)) - mean;
      ss += e * e;
    }
    r.std_errors[static_cast<std::size_t>(p)] = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  }
  return r;
}

void LatticeRule::point(std::uint64_t i, std::span<double> x) const {
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < z.size(); ++k) {
    // i*z mod N with N a power of two
    const std::uint64_t iz = (i * z[k]) & (n - 1);
    double v = static_cast<double>(iz) / nn + (k < shift.size() ? shift[k] : 0.0);
    x[k] = v - std::floor(v);
  }
}

LatticeRule korobov_rule(Index d, int m, std::uint64_t a) {
  if (d < 1 || m < 0 || m > 40) throw InvalidInput("korobov_rule: need d >= 1 and 0 <= m <= 40");
  LatticeRule r;
  r.n = std::uint64_t{1} << m;
  std::uint64_t v = 1;
  for (Index k = 0; k < d; ++k) {
    r.z.push_back(v & (r.n - 1));
    v = (v * a) & (r.n - 1);
  }
  r.shift.assign(static_cast<std::size_t>(d), 0.0);
  return r;
}

namespace {

// B2({j / N}) for j < N
std::vector<double> bernoulli2(std::uint64_t n) {
  std::vector<double> t(n);
  for (std::uint64_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n);
    t[j] = x * x - x + 1.0 / 6.0;
  }
  return t;
}

}  // namespace

LatticeRule cbc_rule(Index d, int m, double decay) {
  if (d < 1 || m < 0 || m > 20) throw InvalidInput("cbc_rule: need d >= 1 and 0 <= m <= 20");
  LatticeRule r;
  r.n = std::uint64_t{1} << m;
  const std::uint64_t n = r.n, mask = n - 1;
  const auto b2 = bernoulli2(n);
  std::vector<double> prod(n, 1.0);
  for (Index k = 0; k < d; ++k) {
    const double g = std::pow(static_cast<double>(k + 1), -decay);
    std::uint64_t best = 1;
    double best_e = std::numeric_limits<double>::infinity();
    // odd candidates only; even ones share a factor with N
    for (std::uint64_t z = 1; z <= std::max<std::uint64_t>(1, n / 2); z += 2) {
      double e = 0.0;
      for (std::uint64_t i = 0; i < n; ++i) e += prod[i] * g * b2[(i * z) & mask];
      if (e < best_e) {
        best_e = e;
        best = z;
      }
    }
    const std::uint64_t zk = best & mask;
    r.z.push_back(zk);
    for (std::uint64_t i = 0; i < n; ++i) prod[i] *= 1.0 + g * b2[(i * zk) & mask];
  }
  r.shift.assign(static_cast<std::size_t>(d), 0.0);
  return r;
}

double worst_case_error2(const LatticeRule& rule, double decay) {
  const auto b2 = bernoulli2(rule.n);
  const std::uint64_t mask = rule.n - 1;
  double s = 0.0;
  for (std::uint64_t i = 0; i < rule.n; ++i) {
    double p = 1.0;
    for (std::size_t k = 0; k < rule.z.size(); ++k)
      p *= 1.0 + std::pow(static_cast<double>(k + 1), -decay) * b2[(i * rule.z[k]) & mask];
    s += p;
  }
  return s / static_cast<double>(rule.n) - 1.0;
}

void save_rule(const std::filesystem::path& path, const LatticeRule& rule) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_rule: cannot write " + path.string());
  for (auto z : rule.z) out << z << "\n";
}

LatticeRule load_rule(const std::filesystem::path& path, Index d, int m) {
  if (d < 1 || m < 0 || m > 40) throw InvalidInput("load_rule: need d >= 1 and 0 <= m <= 40");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_rule: cannot open " + path.string());
  LatticeRule r;
  r.n = std::uint64_t{1} << m;
  std::string line;
  int lineno = 0;
  while (static_cast<Index>(r.z.size()) < d && std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(line.substr(first), &used);
    } catch (const std::exception&) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected an integer");
    }
    if (v < 0) throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": negative generator component");
    r.z.push_back(static_cast<std::uint64_t>(v) & (r.n - 1));
  }
  if (static_cast<Index>(r.z.size()) < d)
    throw InvalidInput("load_rule: " + path.string() + " holds " + std::to_string(r.z.size()) +
                       " components, need " + std::to_string(d));
  r.shift.assign(static_cast<std::size_t>(d), 0.0);
  return r;
}

void set_shift(LatticeRule& rule, std::uint64_t seed) {
  rule.seed = seed;
  rule.shift.assign(rule.z.size(), 0.0);
  if (seed == 0) return;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (auto& s : rule.shift) s = ud(rng);
}

double inverse_normal(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("inverse_normal: p must lie in (0, 1)");
  // Acklam's rational approximation
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double dd[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                  3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  // one Halley step
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

void to_param(stochastic::Dist dist, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (dist == stochastic::Dist::uniform) {
      y[k] = std::sqrt(3.0) * (2.0 * x[k] - 1.0);
    } else {
      y[k] = inverse_normal(x[k] <= 0.0 ? kTiny : x[k]);
    }
  }
}

post::MomentSet qmc_moments(const Model& model, const LatticeRule& rule, Index S, const SampleOptions& opts) {
  if (rule.dim() < model.d) throw InvalidInput("qmc_moments: lattice dimension below d");
  if (S < 1) throw InvalidInput("qmc_moments: S must be >= 1");
  std::vector<double> qs;
  sample_loop(model, static_cast<Index>(rule.n), opts.parallel, qs, [&](fem::DetSolver& solver, Index i) {
    std::vector<double> x(static_cast<std::size_t>(rule.dim())), y(static_cast<std::size_t>(model.d));
    rule.point(static_cast<std::uint64_t>(i), x);
    to_param(model.spec.dist, std::span<const double>(x).first(y.size()), y);
    return model.qoi(solver, y, "qmc point " + std::to_string(i));
  });
  return post::MomentSet{power_means(qs, S)};
}

double qmc_mean(const LatticeRule& rule, stochastic::Dist dist, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> x(rule.z.size()), y(rule.z.size());
  double s = 0.0;
  for (std::uint64_t i = 0; i < rule.n; ++i) {
    rule.point(i, x);
    to_param(dist, x, y);
    s += f(y);
  }
  return s / static_cast<double>(rule.n);
}

double mc_mean(Index d, Index n, stochastic::Dist dist, std::uint64_t seed,
               const std::function<double(std::span<const double>)>& f) {
  std::vector<double> y(static_cast<std::size_t>(d));
  double s = 0.0;
  for (Index i = 0; i < n; ++i) {
    auto rng = sample_rng(seed, i);
    draw_param(dist, rng, y);
    s += f(y);
  }
  return s / static_cast<double>(n);
}

}  // namespace ttuq::baselines
