// SPDX-License-Identifier: Apache-2.0
#include "ttuq/als_cross.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>

#include "ttuq/log.hpp"

namespace ttuq::als {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// c (rl x n x rr) contracted with m (rr x q) on its right rank
TtCore times_right(const TtCore& c, const MatrixRef& m) {
  if (c.rr != m.rows()) throw ShapeMismatch("times_right: rank mismatch");
  const Matrix prod = c.left() * m;
  return TtCore::from_left(prod, c.rl, c.n);
}

// m (q x rl) applied to the left rank of c
TtCore times_left(const MatrixRef& m, const TtCore& c) {
  if (c.rl != m.cols()) throw ShapeMismatch("times_left: rank mismatch");
  const Matrix prod = m * c.right();
  return TtCore::from_right(prod, c.n, c.rr);
}

Matrix right_columns(const TtCore& c, const dense::PivotSet& cols) {
  Matrix out(c.rl, static_cast<Index>(cols.size()));
  const auto r = c.right();
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Index>(i)) = r.col(cols[i]);
  return out;
}

std::string tuple_string(const cross::IndexSet& s, Index row) {
  std::ostringstream os;
  os << "(";
  for (Index c = 0; c < s.width; ++c) os << (c ? "," : "") << s(row, c);
  os << ")";
  return os.str();
}

cross::IndexSet unit_set() { return cross::IndexSet{1, 0, {}}; }

Vector column(const Matrix& m, Index c) { return m.col(c); }

}  // namespace

Mode parse_mode(const std::string& s) {
  if (s == "one_shot" || s == "one-shot") return Mode::one_shot;
  if (s == "iterative") return Mode::iterative;
  throw InvalidInput("unknown solver mode '" + s + "' (expected one_shot or iterative)");
}

std::string to_string(Mode m) { return m == Mode::one_shot ? "one_shot" : "iterative"; }

void AlsOptions::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidInput("als: rel_tol must lie in (0,1)");
  if (max_sweeps < 1) throw InvalidInput("als: max_sweeps must be >= 1");
  if (enrich_rank < 0) throw InvalidInput("als: enrich_rank must be >= 0");
}

TtTensor lifted_rhs(const fem::FemOperator& op, const TtTensor& coeff) {
  if (coeff.order() < 1 || coeff.mode_size(0) != op.nodes())
    throw ShapeMismatch("lifted_rhs: coefficient spatial mode differs from the mesh node count");
  std::vector<TtCore> cores = coeff.cores();
  const TtCore& c0 = coeff.core(0);
  const Matrix f0 = op.lift_map() * Matrix(c0.left());
  cores[0] = TtCore::from_left(f0, 1, op.dofs());
  return TtTensor(std::move(cores));
}

AlsCross::AlsCross(const fem::FemOperator& op, TtTensor coeff, TtTensor rhs, AlsOptions opts)
    : op_(&op), coeff_(std::move(coeff)), rhs_(std::move(rhs)), opts_(opts), d_(coeff_.order() - 1) {
  opts_.validate();
  if (d_ < 1) throw InvalidInput("als: need at least one parameter mode");
  if (coeff_.mode_size(0) != op.nodes()) throw ShapeMismatch("als: coefficient spatial mode must equal the node count");
  if (rhs_.order() != coeff_.order()) throw ShapeMismatch("als: rhs and coefficient orders differ");
  if (rhs_.mode_size(0) != op.dofs()) throw ShapeMismatch("als: rhs spatial mode must equal the DOF count");
  for (Index k = 1; k <= d_; ++k)
    if (rhs_.mode_size(k) != coeff_.mode_size(k)) throw ShapeMismatch("als: rhs and coefficient parameter modes differ");
}

void AlsCross::initialize() {
  const auto t0 = Clock::now();
  const auto sz = static_cast<std::size_t>(d_ + 1);
  cores_ = round(coeff_, opts_.rel_tol).cores();
  {
    // spatial block restricted to the free DOFs; replaced by snapshots in the first spatial step
    const TtCore c0 = cores_[0];
    TtCore u0(1, op_->dofs(), c0.rr);
    for (Index i = 0; i < op_->dofs(); ++i)
      for (Index b = 0; b < c0.rr; ++b) u0(0, i, b) = c0(0, op_->mesh().dof_to_node(i), b);
    cores_[0] = std::move(u0);
  }
  a_left_.assign(sz, {});
  f_left_.assign(sz, Matrix());
  c_right_.assign(sz, Matrix());
  f_right_.assign(sz, Matrix());
  j_right_.assign(sz, unit_set());
  c_right_[sz - 1] = Matrix::Ones(1, 1);
  f_right_[sz - 1] = Matrix::Ones(1, 1);
  for (Index k = d_; k >= 1; --k) restrict_step(k, false);
  if (opts_.mode == Mode::iterative && opts_.enrich_rank > 0) init_residual_sets();
  report_ = SolveReport{};
  report_.times.stoch += seconds_since(t0);
  initialized_ = true;
}

void AlsCross::init_residual_sets() {
  const auto sz = static_cast<std::size_t>(d_ + 1);
  std::mt19937_64 rng(opts_.seed);
  const auto modes = coeff_.mode_sizes();
  jt_right_.assign(sz, unit_set());
  ct_right_.assign(sz, Matrix::Ones(1, 1));
  ft_right_.assign(sz, Matrix::Ones(1, 1));
  ut_right_.assign(sz, Matrix::Ones(1, 1));
  for (Index k = 0; k < d_; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    jt_right_[kk] = cross::random_right_rows(modes, k, opts_.enrich_rank, rng);
    ct_right_[kk] = cross::right_interface(coeff_.cores(), jt_right_[kk]);
    ft_right_[kk] = cross::right_interface(rhs_.cores(), jt_right_[kk]);
    ut_right_[kk] = cross::right_interface(cores_, jt_right_[kk]);
  }
}

Matrix AlsCross::snapshots(const Matrix& chat, const Matrix& fhat, const cross::IndexSet& samples) const {
  const Index count = chat.cols();
  Matrix u(op_->dofs(), count);
  auto one = [&](fem::DetSolver& solver, Index a) {
    const Vector c = column(chat, a);
    const SparseMatrix A = op_->assemble({c.data(), static_cast<std::size_t>(c.size())});
    u.col(a) = solver.solve(A, column(fhat, a), "J_{>0} tuple " + tuple_string(samples, a));
  };
  if (!opts_.parallel) {
    fem::DetSolver solver(*op_);
    for (Index a = 0; a < count; ++a) one(solver, a);
    return u;
  }
  std::exception_ptr err;
#pragma omp parallel
  {
    fem::DetSolver solver(*op_);
#pragma omp for schedule(dynamic)
    for (Index a = 0; a < count; ++a) {
      try {
        one(solver, a);
      } catch (...) {
#pragma omp critical(ttuq_als_snapshot_error)
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
  return u;
}

void AlsCross::spatial_step() {
  if (!initialized_) initialize();
  const auto& J = j_right_[0];
  const Index r0 = cores_[0].rr;
  if (J.rows != r0) throw ShapeMismatch("als: J_{>0} size differs from r_0");

  auto t0 = Clock::now();
  const Matrix chat = Matrix(coeff_.core(0).left()) * c_right_[0];
  const Matrix fhat = Matrix(rhs_.core(0).left()) * f_right_[0];
  report_.times.proj += seconds_since(t0);

  t0 = Clock::now();
  const Matrix U = snapshots(chat, fhat, J);
  report_.det_solves += static_cast<std::size_t>(r0);
  report_.det_solves_per_sweep.push_back(r0);
  report_.times.det += seconds_since(t0);

  t0 = Clock::now();
  const auto sv = dense::svd_truncate(U, opts_.rel_tol);
  if (sv.rank == 0) throw RankDeficient("als: all snapshots vanish");
  Matrix basis = sv.u;
  if (opts_.mode == Mode::iterative && opts_.enrich_rank > 0) {
    // residuals of the snapshot solution at the enrichment tuples; no extra solves
    const auto& Jt = jt_right_[0];
    const Matrix ct = Matrix(coeff_.core(0).left()) * ct_right_[0];
    const Matrix ft = Matrix(rhs_.core(0).left()) * ft_right_[0];
    const Matrix ut = U * ut_right_[0];
    Matrix z(op_->dofs(), Jt.rows);
    for (Index b = 0; b < Jt.rows; ++b) {
      const Vector c = column(ct, b);
      const SparseMatrix A = op_->assemble({c.data(), static_cast<std::size_t>(c.size())});
      z.col(b) = column(ft, b) - A * column(ut, b);
    }
    const Index room = op_->dofs() - sv.rank;
    if (room > 0) {
      const auto zs = dense::svd_truncate(z, 0.0, std::min(opts_.enrich_rank, room));
      if (zs.rank > 0) {
        Matrix both(basis.rows(), basis.cols() + zs.rank);
        both << basis, zs.u;
        basis = std::move(both);
      }
    }
  }
  const auto qr = dense::qr_thin(basis);
  const Matrix carry = qr.r.leftCols(sv.rank) * sv.s.asDiagonal() * sv.vt;
  cores_[0] = TtCore::from_left(qr.q, 1, op_->dofs());
  cores_[1] = times_left(carry, cores_[1]);
  report_.times.stoch += seconds_since(t0);

  t0 = Clock::now();
  const TtCore& c0 = coeff_.core(0);
  const Index R0 = c0.rr;
  auto& A1 = a_left_[1];
  A1.assign(static_cast<std::size_t>(R0), Matrix());
  const Matrix& Q = qr.q;
#pragma omp parallel for schedule(dynamic) if (opts_.parallel)
  for (Index g = 0; g < R0; ++g) {
    const Vector c = c0.left().col(g);
    const SparseMatrix A = op_->assemble_component({c.data(), static_cast<std::size_t>(c.size())});
    const Matrix AQ = A * Q;
    A1[static_cast<std::size_t>(g)] = Q.transpose() * AQ;
  }
  f_left_[1] = Q.transpose() * Matrix(rhs_.core(0).left());
  report_.times.proj += seconds_since(t0);
}

TtCore AlsCross::solve_local(Index k) const {
  const auto kk = static_cast<std::size_t>(k);
  const auto& A = a_left_[kk];
  const Matrix& F = f_left_[kk];
  const TtCore w = times_right(coeff_.core(k), c_right_[kk]);
  const TtCore g = times_right(rhs_.core(k), f_right_[kk]);
  const Index r = cores_[kk].rl, n = w.n, rr = w.rr;
  if (A.empty() || A[0].rows() != r) throw ShapeMismatch("als: left projection rank differs from r_{k-1}");
  TtCore out(r, n, rr);
  Matrix m(r, r);
  Vector gv(g.rl);
  for (Index j = 0; j < n; ++j)
    for (Index b = 0; b < rr; ++b) {
      m.setZero();
      for (Index c = 0; c < w.rl; ++c) m += w(c, j, b) * A[static_cast<std::size_t>(c)];
      for (Index c = 0; c < g.rl; ++c) gv[c] = g(c, j, b);
      const Vector rhs = F * gv;
      dense::SmallSolve s;
      try {
        s = dense::solve_small(m, rhs);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "als: reduced system at (k=" << k << ", j=" << j << ", beta=" << b << ") failed: " << e.what();
        throw fem::SolveError(os.str());
      }
      if (s.ill_conditioned) {
        std::ostringstream os;
        os << "als: ill-conditioned reduced system at (k=" << k << ", j=" << j << ", beta=" << b
           << "), rcond " << s.rcond;
        log::warn(os.str());
      }
      for (Index a = 0; a < r; ++a) out(a, j, b) = s.x(a, 0);
    }
  return out;
}

TtCore AlsCross::residual_core(Index k, const TtCore& u) const {
  const auto kk = static_cast<std::size_t>(k);
  const auto& A = a_left_[kk];
  const Matrix& F = f_left_[kk];
  const TtCore w = times_right(coeff_.core(k), ct_right_[kk]);
  const TtCore g = times_right(rhs_.core(k), ft_right_[kk]);
  const TtCore ut = times_right(u, ut_right_[kk]);
  const Index r = u.rl, n = u.n, rt = w.rr;
  TtCore z(r, n, rt);
  Matrix m(r, r);
  Vector gv(g.rl), uv(r);
  for (Index j = 0; j < n; ++j)
    for (Index b = 0; b < rt; ++b) {
      m.setZero();
      for (Index c = 0; c < w.rl; ++c) m += w(c, j, b) * A[static_cast<std::size_t>(c)];
      for (Index c = 0; c < g.rl; ++c) gv[c] = g(c, j, b);
      for (Index a = 0; a < r; ++a) uv[a] = ut(a, j, b);
      const Vector res = F * gv - m * uv;
      for (Index a = 0; a < r; ++a) z(a, j, b) = res[a];
    }
  return z;
}

void AlsCross::project_left(Index k) {
  // a_left_[k+1], f_left_[k+1] from a_left_[k], f_left_[k] and the left-orthogonal cores_[k]
  const auto kk = static_cast<std::size_t>(k);
  const TtCore& q = cores_[kk];
  const TtCore& c = coeff_.core(k);
  const TtCore& f = rhs_.core(k);
  const auto& A = a_left_[kk];
  std::vector<Matrix> next(static_cast<std::size_t>(c.rr), Matrix::Zero(q.rr, q.rr));
  Matrix fnext = Matrix::Zero(q.rr, f.rr);
  for (Index j = 0; j < q.n; ++j) {
    const Matrix qj = q.slice(j);
    for (Index g = 0; g < c.rl; ++g) {
      const Matrix b = qj.transpose() * A[static_cast<std::size_t>(g)] * qj;
      for (Index h = 0; h < c.rr; ++h) {
        const double v = c(g, j, h);
        if (v != 0.0) next[static_cast<std::size_t>(h)] += v * b;
      }
    }
    fnext += qj.transpose() * f_left_[kk] * f.slice(j);
  }
  a_left_[kk + 1] = std::move(next);
  f_left_[kk + 1] = std::move(fnext);
}

void AlsCross::forward_step(Index k) {
  if (k < 1 || k > d_) throw InvalidInput("als: forward step index out of range");
  const auto t0 = Clock::now();
  const auto kk = static_cast<std::size_t>(k);
  TtCore u = solve_local(k);
  if (k == d_) {
    cores_[kk] = std::move(u);
    report_.times.stoch += seconds_since(t0);
    return;
  }
  const double tol = opts_.rel_tol / std::sqrt(static_cast<double>(d_));
  const auto sv = dense::svd_truncate(u.left(), tol);
  if (sv.rank == 0) throw RankDeficient("als: zero block in the forward sweep");
  Matrix basis = sv.u;
  if (opts_.mode == Mode::iterative && opts_.enrich_rank > 0) {
    const TtCore z = residual_core(k, u);
    const Index room = u.rl * u.n - sv.rank;
    if (room > 0) {
      const auto zs = dense::svd_truncate(z.left(), 0.0, std::min(opts_.enrich_rank, room));
      if (zs.rank > 0) {
        Matrix both(basis.rows(), basis.cols() + zs.rank);
        both << basis, zs.u;
        basis = std::move(both);
      }
    }
  }
  const auto qr = dense::qr_thin(basis);
  const Matrix carry = qr.r.leftCols(sv.rank) * sv.s.asDiagonal() * sv.vt;
  cores_[kk] = TtCore::from_left(qr.q, u.rl, u.n);
  cores_[kk + 1] = times_left(carry, cores_[kk + 1]);
  project_left(k);
  report_.times.stoch += seconds_since(t0);
}

void AlsCross::restrict_step(Index k, bool solve) {
  const auto kk = static_cast<std::size_t>(k);
  TtCore u = solve ? solve_local(k) : cores_[kk];
  const Index n = u.n, rr = u.rr;
  const bool enrich = opts_.mode == Mode::iterative && opts_.enrich_rank > 0 && !jt_right_.empty();

  const double tol = opts_.rel_tol / std::sqrt(static_cast<double>(d_));
  const Matrix ut_fold = u.right().transpose();
  const auto sv = dense::svd_truncate(ut_fold, tol);
  if (sv.rank == 0) throw RankDeficient("als: zero block in the backward sweep");
  const dense::PivotSet piv = dense::maxvol(sv.u);
  const Matrix qsel = dense::select_rows(sv.u, piv);
  // interpolatory right block: identity on the selected columns
  const Matrix interp = sv.u * qsel.inverse();
  const Matrix carry = sv.vt.transpose() * sv.s.asDiagonal() * qsel.transpose();

  dense::PivotSet tpiv;
  if (enrich) {
    const TtCore z = residual_core(k, u);
    const auto zs = dense::svd_truncate(Matrix(z.right().transpose()), 0.0, opts_.enrich_rank);
    if (zs.rank > 0) {
      tpiv = dense::maxvol(zs.u);
    } else {
      // exact residual: spread the set over the mode values
      for (Index j = 0; j < std::min(n, opts_.enrich_rank); ++j) tpiv.push_back(j * z.rr);
    }
  }

  TtCore interp_core = TtCore::from_right(Matrix(interp.transpose()), n, rr);
  cores_[kk] = std::move(interp_core);
  cores_[kk - 1] = times_right(cores_[kk - 1], carry);

  const TtCore w = times_right(coeff_.core(k), c_right_[kk]);
  const TtCore g = times_right(rhs_.core(k), f_right_[kk]);
  c_right_[kk - 1] = right_columns(w, piv);
  f_right_[kk - 1] = right_columns(g, piv);
  j_right_[kk - 1] = cross::merge_right(j_right_[kk], n, piv);

  if (enrich) {
    const TtCore wt = times_right(coeff_.core(k), ct_right_[kk]);
    const TtCore gt = times_right(rhs_.core(k), ft_right_[kk]);
    const TtCore ut = times_right(cores_[kk], ut_right_[kk]);
    ct_right_[kk - 1] = right_columns(wt, tpiv);
    ft_right_[kk - 1] = right_columns(gt, tpiv);
    ut_right_[kk - 1] = right_columns(ut, tpiv);
    jt_right_[kk - 1] = cross::merge_right(jt_right_[kk], n, tpiv);
  }
}

void AlsCross::backward_step(Index k) {
  if (k < 1 || k > d_) throw InvalidInput("als: backward step index out of range");
  const auto t0 = Clock::now();
  restrict_step(k, true);
  report_.times.stoch += seconds_since(t0);
}

double AlsCross::sweep() {
  if (!initialized_) initialize();
  const TtTensor before(cores_);
  spatial_step();
  for (Index k = 1; k <= d_; ++k) forward_step(k);
  for (Index k = d_; k >= 1; --k) backward_step(k);
  const TtTensor after(cores_);
  const double nrm = norm(after);
  const double change = report_.sweeps == 0 ? 1.0 : (nrm > 0.0 ? distance(after, before) / nrm : 0.0);
  ++report_.sweeps;
  report_.changes.push_back(change);
  report_.final_change = change;
  return change;
}

AlsResult AlsCross::run() {
  if (!initialized_) initialize();
  if (opts_.mode == Mode::one_shot) {
    sweep();
    report_.final_change = 0.0;
    report_.converged = true;
  } else {
    for (int s = 0; s < opts_.max_sweeps; ++s) {
      const double change = sweep();
      std::ostringstream os;
      os << "als sweep " << report_.sweeps << ": change " << change << ", max rank " << TtTensor(cores_).max_rank()
         << ", det solves " << report_.det_solves_per_sweep.back();
      log::info(os.str());
      if (report_.sweeps > 1 && change <= opts_.rel_tol) {
        report_.converged = true;
        break;
      }
    }
    if (!report_.converged) log::warn("als: no convergence within max_sweeps");
  }
  AlsResult out{TtTensor(cores_), report_};
  out.report.ranks = out.u.ranks();
  out.report.max_rank = out.u.max_rank();
  return out;
}

AlsResult solve(const fem::FemOperator& op, const TtTensor& coeff, const TtTensor& rhs, const AlsOptions& opts) {
  AlsCross s(op, coeff, rhs, opts);
  return s.run();
}

namespace {

// All parameter tuples over modes 1..k-1 in row-major order, with the matching products of slices.
template <class Visit>
void for_each_left_tuple(const std::vector<Index>& modes, Index k, Visit visit) {
  std::vector<Index> idx(static_cast<std::size_t>(std::max<Index>(k - 1, 0)), 0);
  double total = 1.0;
  for (Index m = 1; m < k; ++m) total *= static_cast<double>(modes[static_cast<std::size_t>(m)]);
  if (total > 1e6) throw InvalidInput("reference projection: too many tuples");
  for (;;) {
    visit(idx);
    Index m = k - 1;
    while (m >= 1) {
      auto& v = idx[static_cast<std::size_t>(m - 1)];
      if (++v < modes[static_cast<std::size_t>(m)]) break;
      v = 0;
      --m;
    }
    if (m < 1) return;
  }
}

Matrix slice_product(const std::vector<TtCore>& cores, const std::vector<Index>& idx, Index first_rank) {
  Matrix p = Matrix::Identity(first_rank, first_rank);
  for (std::size_t m = 0; m < idx.size(); ++m) p = p * cores[m + 1].slice(idx[m]);
  return p;
}

}  // namespace

std::vector<Matrix> reference_a_left(const AlsCross& s, Index k) {
  if (k < 1 || k > s.dim()) throw InvalidInput("reference_a_left: k out of range");
  const auto& u = s.cores();
  const auto& c = s.coeff().cores();
  const auto& op = s.op();
  const Index R0 = c[0].rr, Rk = c[static_cast<std::size_t>(k - 1)].rr, rk = u[static_cast<std::size_t>(k - 1)].rr;
  std::vector<SparseMatrix> a0;
  for (Index g = 0; g < R0; ++g) {
    const Vector col = c[0].left().col(g);
    a0.push_back(op.assemble_component({col.data(), static_cast<std::size_t>(col.size())}));
  }
  std::vector<Matrix> out(static_cast<std::size_t>(Rk), Matrix::Zero(rk, rk));
  const Matrix u0 = u[0].left();
  for_each_left_tuple(s.coeff().mode_sizes(), k, [&](const std::vector<Index>& idx) {
    const Matrix uj = u0 * slice_product(u, idx, u[0].rr);
    const Matrix cj = slice_product(c, idx, R0);
    for (Index g0 = 0; g0 < R0; ++g0) {
      const Matrix b = uj.transpose() * (a0[static_cast<std::size_t>(g0)] * uj);
      for (Index g = 0; g < Rk; ++g) out[static_cast<std::size_t>(g)] += cj(g0, g) * b;
    }
  });
  return out;
}

Matrix reference_f_left(const AlsCross& s, Index k) {
  if (k < 1 || k > s.dim()) throw InvalidInput("reference_f_left: k out of range");
  const auto& u = s.cores();
  const auto& f = s.rhs().cores();
  const Matrix u0 = u[0].left();
  const Matrix f0 = f[0].left();
  Matrix out = Matrix::Zero(u[static_cast<std::size_t>(k - 1)].rr, f[static_cast<std::size_t>(k - 1)].rr);
  for_each_left_tuple(s.coeff().mode_sizes(), k, [&](const std::vector<Index>& idx) {
    const Matrix uj = u0 * slice_product(u, idx, u[0].rr);
    out += uj.transpose() * f0 * slice_product(f, idx, f[0].rr);
  });
  return out;
}

Vector spatial_fiber(const TtTensor& v, std::span<const Index> param) {
  if (static_cast<Index>(param.size()) != v.order() - 1) throw ShapeMismatch("spatial_fiber: index length mismatch");
  Matrix tail = Matrix::Ones(1, 1);
  for (Index m = v.order() - 1; m >= 1; --m) tail = v.core(m).slice(param[static_cast<std::size_t>(m - 1)]) * tail;
  return Matrix(v.core(0).left()) * tail;
}

double sampled_residual(const fem::FemOperator& op, const TtTensor& coeff, const TtTensor& rhs, const TtTensor& u,
                        const std::vector<std::vector<Index>>& samples) {
  double worst = 0.0;
  for (const auto& j : samples) {
    const Vector c = spatial_fiber(coeff, j);
    const Vector f = spatial_fiber(rhs, j);
    const Vector x = spatial_fiber(u, j);
    const SparseMatrix A = op.assemble({c.data(), static_cast<std::size_t>(c.size())});
    const double fn = f.norm();
    worst = std::max(worst, (f - A * x).norm() / (fn > 0.0 ? fn : 1.0));
  }
  return worst;
}

}  // namespace ttuq::als
