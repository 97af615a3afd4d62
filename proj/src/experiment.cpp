// SPDX-License-Identifier: Apache-2.0
#include "ttuq/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "ttuq/baselines.hpp"
#include "ttuq/log.hpp"

namespace ttuq::experiment {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Row base_row(const Problem& p, const std::string& method, std::uint64_t seed) {
  Row r;
  r.method = method;
  r.level = p.cfg.level;
  r.eps = p.cfg.eps;
  r.d = p.dim();
  r.n = p.cfg.n;
  r.seed = seed;
  return r;
}

baselines::Model sampling_model(const Problem& p) {
  auto m = baselines::Model::build(p.cfg.constant ? stochastic::KleSpec{} : p.cfg.kle, p.cfg.level, p.dim());
  if (p.cfg.constant) {
    const double c = *p.cfg.constant;
    m.coeff_fn = [c](Index, std::span<const double>) { return c; };
  }
  m.spec.dist = p.grid.dist;
  m.w = p.w;
  return m;
}

void fill_err(std::vector<Row>& rows, const config::ExperimentConfig& cfg) {
  if (!cfg.want_err) return;
  const auto ref = read_reference(cfg.reference_path, cfg.S);
  const double rn = ref.norm();
  if (!(rn > 0.0)) throw InvalidInput("reference moments have zero norm: " + cfg.reference_path.string());
  for (auto& r : rows) {
    double d2 = 0.0;
    for (std::size_t p = 0; p < r.q.size(); ++p) d2 += (r.q[p] - ref.values[p]) * (r.q[p] - ref.values[p]);
    r.err = std::sqrt(d2) / rn;
  }
}

// runs f(seed) for run indices 0..runs-1; concurrent over runs when more than one thread is available
template <class F>
std::vector<Row> over_runs(int runs, std::uint64_t seed, F&& f) {
  std::vector<Row> rows(static_cast<std::size_t>(runs));
  const bool concurrent = runs > 1 && omp_get_max_threads() > 1;
  if (!concurrent) {
    for (int i = 0; i < runs; ++i) rows[static_cast<std::size_t>(i)] = f(seed + static_cast<std::uint64_t>(i), true);
    return rows;
  }
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < runs; ++i) {
    try {
      rows[static_cast<std::size_t>(i)] = f(seed + static_cast<std::uint64_t>(i), false);
    } catch (...) {
#pragma omp critical(ttuq_run_error)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
  return rows;
}

}  // namespace

Problem::Problem(const config::ExperimentConfig& c)
    : cfg(c),
      mesh(fem::Mesh::from_level(c.level)),
      op(mesh),
      grid(stochastic::ParamGrid::build(c.constant ? stochastic::Dist::normal : c.kle.dist, c.grid_sizes())),
      w(fem::qoi_weights(mesh, c.qoi_average)) {
  cfg.validate();
}

std::vector<Index> Problem::coeff_modes() const {
  std::vector<Index> m{mesh.node_count()};
  for (Index s : grid.sizes()) m.push_back(s);
  return m;
}

std::vector<Index> Problem::solution_modes() const {
  std::vector<Index> m{mesh.dof_count()};
  for (Index s : grid.sizes()) m.push_back(s);
  return m;
}

std::string csv_header(Index S) {
  std::string h = "method,level,eps,d,n,r_max,n_det_solves,t_coeff,t_det,t_proj,t_stoch,t_qoi,t_total,seed";
  for (Index p = 1; p <= S; ++p) h += ",Q" + std::to_string(p);
  return h + ",err_vs_reference";
}

std::string csv_line(const Row& r) {
  std::string s = r.method + "," + std::to_string(r.level) + "," + real(r.eps) + "," + std::to_string(r.d) + "," +
                  std::to_string(r.n) + ",";
  s += (r.r_max ? std::to_string(*r.r_max) : "") + ",";
  s += (r.det_solves ? std::to_string(*r.det_solves) : "") + ",";
  for (double t : {r.times.coeff, r.times.det, r.times.proj, r.times.stoch, r.times.qoi, r.times.total()})
    s += real(t) + ",";
  s += std::to_string(r.seed);
  for (double q : r.q) s += "," + real(q);
  s += ",";
  if (r.err) s += real(*r.err);
  return s;
}

void write_rows(const std::filesystem::path& path, const std::vector<Row>& rows, Index S, bool append) {
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  if (fresh) out << csv_header(S) << "\n";
  for (const auto& r : rows) {
    if (static_cast<Index>(r.q.size()) != S) throw ShapeMismatch("write_rows: row moment count differs from S");
    out << csv_line(r) << "\n";
  }
}

post::MomentSet read_reference(const std::filesystem::path& path, Index S) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("missing reference file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty reference file: " + path.string());
  const auto head = split(line);
  std::vector<std::size_t> cols;
  for (Index p = 1; p <= S; ++p) {
    const std::string name = "Q" + std::to_string(p);
    std::size_t c = 0;
    while (c < head.size() && head[c] != name) ++c;
    if (c == head.size()) throw InvalidInput("reference file " + path.string() + " lacks column " + name);
    cols.push_back(c);
  }
  post::MomentSet m;
  m.values.assign(static_cast<std::size_t>(S), 0.0);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] >= cells.size()) throw InvalidInput("short row in reference file " + path.string());
      m.values[p] += std::stod(cells[cols[p]]);
    }
    ++rows;
  }
  if (rows == 0) throw InvalidInput("reference file has no rows: " + path.string());
  for (auto& v : m.values) v /= rows;
  return m;
}

TtTensor build_coeff(const Problem& p, std::uint64_t seed, double* seconds) {
  const auto t0 = Clock::now();
  TtTensor c;
  if (p.cfg.constant) {
    c = TtTensor::constant(p.coeff_modes(), *p.cfg.constant);
  } else if (p.cfg.kle.form == stochastic::Form::affine) {
    c = round(stochastic::coeff_affine_tt(p.cfg.kle, p.mesh, p.grid), 1e-14);
  } else {
    stochastic::LogCoeffOptions o;
    o.rel_tol = p.cfg.coeff_tol;
    o.init_count = p.cfg.coeff_init;
    o.seed = seed;
    c = stochastic::coeff_log_tt(p.cfg.kle, p.mesh, p.grid, o).tt;
  }
  if (seconds) *seconds = since(t0);
  return c;
}

als::AlsResult solve(const Problem& p, const TtTensor& coeff, std::uint64_t seed, bool parallel) {
  als::AlsOptions o;
  o.rel_tol = p.cfg.eps;
  o.mode = p.cfg.mode;
  o.enrich_rank = p.cfg.enrich_rank;
  o.max_sweeps = p.cfg.max_sweeps;
  o.seed = seed;
  o.parallel = parallel;
  return als::solve(p.op, coeff, als::lifted_rhs(p.op, coeff), o);
}

QoiResult qoi_moments(const Problem& p, const TtTensor& u, std::uint64_t seed, bool parallel, bool centered) {
  const auto t0 = Clock::now();
  QoiResult r;
  r.qy = post::spatial_qoi(u, p.w);
  post::MomentOptions o;
  if (centered) o.center = post::quadrature(r.qy, p.grid);
  o.rel_tol = p.cfg.moment_tol;
  o.seed = seed;
  o.parallel = parallel;
  r.moments = post::moments(r.qy, p.grid, p.cfg.S, o);
  r.seconds = since(t0);
  return r;
}

Row run_tt(const Problem& p, std::uint64_t seed, bool parallel) {
  Row row = base_row(p, "tt", seed);
  double tc = 0.0;
  const auto coeff = build_coeff(p, seed, &tc);
  const auto res = solve(p, coeff, seed, parallel);
  const auto q = qoi_moments(p, res.u, seed, parallel);
  row.r_max = res.u.max_rank();
  row.det_solves = static_cast<Index>(res.report.det_solves);
  row.times = res.report.times;
  row.times.coeff = tc;
  row.times.qoi = q.seconds;
  row.q = q.moments.values;
  return row;
}

Row run_mc(const Problem& p, std::uint64_t seed, bool parallel) {
  Row row = base_row(p, "mc", seed);
  const auto t0 = Clock::now();
  const auto r = baselines::mc_moments(sampling_model(p), p.cfg.mc_samples, p.cfg.S, {seed, parallel});
  row.times.det = since(t0);
  row.det_solves = p.cfg.mc_samples;
  row.q = r.moments.values;
  return row;
}

Row run_qmc(const Problem& p, std::uint64_t seed, bool parallel) {
  Row row = base_row(p, "qmc", seed);
  const auto t0 = Clock::now();
  auto rule = !p.cfg.lattice_path.empty()       ? baselines::load_rule(p.cfg.lattice_path, p.dim(), p.cfg.qmc_m)
              : p.cfg.qmc_generator == "cbc" ? baselines::cbc_rule(p.dim(), p.cfg.qmc_m)
                                             : baselines::korobov_rule(p.dim(), p.cfg.qmc_m);
  baselines::set_shift(rule, seed);
  const auto m = baselines::qmc_moments(sampling_model(p), rule, p.cfg.S, {seed, parallel});
  row.times.det = since(t0);
  row.det_solves = static_cast<Index>(rule.n);
  row.q = m.values;
  return row;
}

std::vector<Row> run_all(const config::ExperimentConfig& cfg, const std::vector<config::Method>& methods) {
  const Problem p(cfg);
  std::vector<Row> rows;
  for (auto m : methods) {
    auto part = over_runs(cfg.runs, cfg.seed, [&](std::uint64_t seed, bool parallel) {
      switch (m) {
        case config::Method::tt: return run_tt(p, seed, parallel);
        case config::Method::mc: return run_mc(p, seed, parallel);
        case config::Method::qmc: return run_qmc(p, seed, parallel);
      }
      throw InvalidInput("unknown method");
    });
    log::info("method " + config::to_string(m) + ": " + std::to_string(part.size()) + " runs done");
    rows.insert(rows.end(), part.begin(), part.end());
  }
  fill_err(rows, cfg);
  return rows;
}

std::vector<Row> study(const config::ExperimentConfig& cfg) {
  std::vector<double> levels = cfg.study_levels, eps = cfg.study_eps;
  if (levels.empty()) levels.push_back(cfg.level);
  const bool resync = !eps.empty();
  if (eps.empty()) eps.push_back(cfg.eps);
  std::vector<Row> rows;
  for (double l : levels)
    for (double e : eps) {
      auto c = cfg;
      c.level = static_cast<int>(l);
      if (resync) {
        c.eps = c.coeff_tol = c.kle.trunc_tol = e;
      }
      log::info("study: level " + std::to_string(c.level) + ", eps " + real(c.eps));
      auto part = run_all(c, {config::Method::tt});
      rows.insert(rows.end(), part.begin(), part.end());
    }
  return rows;
}

void check_modes(const TtTensor& t, const std::vector<Index>& expect, const std::string& what) {
  const auto got = t.mode_sizes();
  if (got == expect) return;
  auto show = [](const std::vector<Index>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
  };
  throw ShapeMismatch(what + " mode sizes " + show(got) + " do not match the config " + show(expect) +
                      "; rebuild it with the current config");
}

void cmd_build_coeff(const config::ExperimentConfig& cfg) {
  const Problem p(cfg);
  write_ttb(cfg.coeff_path, build_coeff(p, cfg.seed));
}

als::SolveReport cmd_solve(const config::ExperimentConfig& cfg) {
  const Problem p(cfg);
  const auto coeff = read_ttb(cfg.coeff_path);
  check_modes(coeff, p.coeff_modes(), cfg.coeff_path.string());
  const auto res = solve(p, coeff, cfg.seed);
  write_ttb(cfg.solution_path, res.u);
  return res.report;
}

Row cmd_moments(const config::ExperimentConfig& cfg) {
  const Problem p(cfg);
  const auto u = read_ttb(cfg.solution_path);
  check_modes(u, p.solution_modes(), cfg.solution_path.string());
  const auto q = qoi_moments(p, u, cfg.seed);
  Row row = base_row(p, "tt", cfg.seed);
  row.r_max = u.max_rank();
  row.times.qoi = q.seconds;
  row.q = q.moments.values;
  std::vector<Row> rows{row};
  fill_err(rows, cfg);
  return rows.front();
}

post::PdfModel cmd_pdf(const config::ExperimentConfig& cfg) {
  const Problem p(cfg);
  const auto u = read_ttb(cfg.solution_path);
  check_modes(u, p.solution_modes(), cfg.solution_path.string());
  const auto q = qoi_moments(p, u, cfg.seed, true, true);
  const auto support = post::sampled_support(q.qy, p.grid, 10000, cfg.seed);
  const auto pdf = post::maxent_pdf(q.moments, support);
  post::write_pdf_csv(cfg.pdf_path, pdf, cfg.pdf_points);
  return pdf;
}

}  // namespace ttuq::experiment
