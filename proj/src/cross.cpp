// SPDX-License-Identifier: Apache-2.0
#include "ttuq/cross.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "ttuq/log.hpp"

namespace ttuq::cross {

IndexSet merge_left(const IndexSet& left, Index n, const dense::PivotSet& pivots) {
  IndexSet out;
  out.rows = static_cast<Index>(pivots.size());
  out.width = left.width + 1;
  out.data.reserve(static_cast<std::size_t>(out.rows * out.width));
  for (Index p : pivots) {
    if (p < 0 || p >= left.rows * n) throw CrossError("merge_left: pivot out of composite range");
    const Index alpha = p / n, j = p % n;
    for (Index c = 0; c < left.width; ++c) out.data.push_back(left(alpha, c));
    out.data.push_back(j);
  }
  return out;
}

IndexSet merge_right(const IndexSet& right, Index n, const dense::PivotSet& pivots) {
  IndexSet out;
  out.rows = static_cast<Index>(pivots.size());
  out.width = right.width + 1;
  out.data.reserve(static_cast<std::size_t>(out.rows * out.width));
  for (Index p : pivots) {
    if (p < 0 || p >= right.rows * n) throw CrossError("merge_right: pivot out of composite range");
    const Index j = p / right.rows, alpha = p % right.rows;
    out.data.push_back(j);
    for (Index c = 0; c < right.width; ++c) out.data.push_back(right(alpha, c));
  }
  return out;
}

Matrix left_interface(std::span<const TtCore> cores, const IndexSet& left) {
  const Index k = left.width;
  if (k > static_cast<Index>(cores.size())) throw ShapeMismatch("left_interface: tuple wider than the tensor");
  const Index r = k == 0 ? 1 : cores[static_cast<std::size_t>(k - 1)].rr;
  Matrix out(left.rows, r);
  for (Index a = 0; a < left.rows; ++a) {
    Matrix v = Matrix::Ones(1, 1);
    for (Index m = 0; m < k; ++m) v = v * cores[static_cast<std::size_t>(m)].slice(left(a, m));
    out.row(a) = v.row(0);
  }
  return out;
}

Matrix right_interface(std::span<const TtCore> cores, const IndexSet& right) {
  const Index order = static_cast<Index>(cores.size());
  const Index k = order - 1 - right.width;
  if (k < 0) throw ShapeMismatch("right_interface: tuple wider than the tensor");
  const Index r = cores[static_cast<std::size_t>(k)].rr;
  Matrix out(r, right.rows);
  for (Index b = 0; b < right.rows; ++b) {
    Matrix v = Matrix::Ones(1, 1);
    for (Index m = order - 1; m > k; --m) v = cores[static_cast<std::size_t>(m)].slice(right(b, m - k - 1)) * v;
    out.col(b) = v.col(0);
  }
  return out;
}

EvalFn tt_evaluator(const TtTensor& v, std::function<double(double)> map) {
  auto batch = [v, map](std::span<const Index> idx, Index count, std::span<double> out) {
    const auto order = static_cast<std::size_t>(v.order());
    for (Index i = 0; i < count; ++i) {
      const double x = element(v, idx.subspan(static_cast<std::size_t>(i) * order, order));
      out[static_cast<std::size_t>(i)] = map ? map(x) : x;
    }
  };
  auto block = [v, map](Index k, const IndexSet& left, Index n, const IndexSet& right, std::span<double> out) {
    const auto& cores = v.cores();
    const Matrix lv = left_interface(cores, left);
    const Matrix rv = right_interface(cores, right);
    const TtCore& c = cores[static_cast<std::size_t>(k)];
    if (n != c.n) throw ShapeMismatch("tt_evaluator: mode size mismatch");
    MatrixMap dst(out.data(), left.rows * n, right.rows);
    for (Index j = 0; j < n; ++j) {
      const Matrix part = lv * c.slice(j) * rv;
      for (Index a = 0; a < left.rows; ++a) dst.row(a * n + j) = part.row(a);
    }
    if (map)
      for (auto& x : out) x = map(x);
  };
  return EvalFn(v.order(), batch, block);
}

// Distinct uniformly drawn tuples over modes k+1..d; the full tuple space when it is smaller.
IndexSet random_right_rows(const std::vector<Index>& modes, Index k, Index count, std::mt19937_64& rng) {
  const Index d = static_cast<Index>(modes.size()) - 1;
  if (count < 1) throw InvalidInput("random_right_rows: count must be >= 1");
  IndexSet s;
  s.width = d - k;
  double space = 1.0;
  for (Index m = k + 1; m <= d; ++m) space *= static_cast<double>(modes[static_cast<std::size_t>(m)]);
  if (space <= static_cast<double>(count)) {
    s.rows = static_cast<Index>(space);
    for (Index r = 0; r < s.rows; ++r) {
      Index rem = r;
      std::vector<Index> tuple(static_cast<std::size_t>(s.width));
      for (Index m = d; m > k; --m) {
        const Index n = modes[static_cast<std::size_t>(m)];
        tuple[static_cast<std::size_t>(m - k - 1)] = rem % n;
        rem /= n;
      }
      s.data.insert(s.data.end(), tuple.begin(), tuple.end());
    }
    return s;
  }
  // Each mode column is a concatenation of random permutations of 0..n-1, so every value
  // appears before any repeats.
  s.rows = count;
  std::vector<std::vector<Index>> cols;
  for (Index m = k + 1; m <= d; ++m) {
    const Index n = modes[static_cast<std::size_t>(m)];
    std::vector<Index> col;
    std::vector<Index> perm(static_cast<std::size_t>(n));
    while (static_cast<Index>(col.size()) < s.rows) {
      std::iota(perm.begin(), perm.end(), Index{0});
      std::shuffle(perm.begin(), perm.end(), rng);
      col.insert(col.end(), perm.begin(), perm.end());
    }
    col.resize(static_cast<std::size_t>(s.rows));
    cols.push_back(std::move(col));
  }
  auto tuple_at = [&](Index row) {
    std::vector<Index> t;
    for (const auto& col : cols) t.push_back(col[static_cast<std::size_t>(row)]);
    return t;
  };
  // Score an arrangement by the number of distinct leading sub-tuples of every length. Reshuffling
  // a column keeps its value counts; the best of a few arrangements is kept.
  auto score = [&]() {
    Index total = 0;
    for (std::size_t len = 1; len <= cols.size(); ++len) {
      std::set<std::vector<Index>> prefixes;
      for (Index r = 0; r < s.rows; ++r) {
        auto t = tuple_at(r);
        t.resize(len);
        prefixes.insert(std::move(t));
      }
      total += static_cast<Index>(prefixes.size());
    }
    return total;
  };
  Index best_score = -1, ideal = 0;
  {
    double prod = 1.0;
    for (Index m = k + 1; m <= d; ++m) {
      prod *= static_cast<double>(modes[static_cast<std::size_t>(m)]);
      ideal += static_cast<Index>(std::min(prod, static_cast<double>(s.rows)));
    }
  }
  auto best = cols;
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Index sc = score();
    if (sc > best_score) {
      best_score = sc;
      best = cols;
    }
    if (sc == ideal) break;
    for (std::size_t c = 1; c < cols.size(); ++c) std::shuffle(cols[c].begin(), cols[c].end(), rng);
  }
  cols = std::move(best);
  std::set<std::vector<Index>> seen;
  for (Index r = 0; r < s.rows; ++r) {
    auto tuple = tuple_at(r);
    while (seen.count(tuple)) {
      for (Index m = k + 1; m <= d; ++m) {
        std::uniform_int_distribution<Index> u(0, modes[static_cast<std::size_t>(m)] - 1);
        tuple[static_cast<std::size_t>(m - k - 1)] = u(rng);
      }
    }
    seen.insert(tuple);
    s.data.insert(s.data.end(), tuple.begin(), tuple.end());
  }
  return s;
}

namespace {

class CrossRun {
 public:
  CrossRun(EvalFn& f, std::vector<Index> modes, const CrossOptions& opts)
      : f_(f), modes_(std::move(modes)), opts_(opts), d_(static_cast<Index>(modes_.size()) - 1) {
    if (modes_.empty()) throw InvalidInput("tt_cross: no modes");
    if (f.order() != d_ + 1) throw ShapeMismatch("tt_cross: evaluator order differs from mode count");
    if (!(opts.rel_tol > 0.0 && opts.rel_tol < 1.0)) throw InvalidInput("tt_cross: rel_tol must lie in (0,1)");
    sets_.left.assign(static_cast<std::size_t>(d_ + 1), IndexSet::empty());
    sets_.right.assign(static_cast<std::size_t>(d_ + 1), IndexSet::empty());
    cores_.resize(static_cast<std::size_t>(d_ + 1));
    max_rank_.assign(static_cast<std::size_t>(d_ + 2), 1);
  }

  CrossResult run_random() {
    if (opts_.random_count < 1) throw InvalidInput("tt_cross: random_count must be >= 1");
    std::mt19937_64 rng(opts_.seed);
    for (Index k = 0; k < d_; ++k) sets_.right[static_cast<std::size_t>(k)] = random_right_rows(modes_, k, opts_.random_count, rng);
    have_right_ = true;
    truncate_first_ = true;
    return iterate();
  }

  CrossResult run_init(const TtTensor& init) {
    cores_ = init.cores();
    have_right_ = false;
    truncate_first_ = false;
    return iterate();
  }

 private:

  void note_sizes(Index k) {
    auto& ml = max_rank_[static_cast<std::size_t>(k)];
    auto& mr = max_rank_[static_cast<std::size_t>(k + 1)];
    ml = std::max(ml, sets_.left[static_cast<std::size_t>(k)].rows);
    mr = std::max(mr, sets_.right[static_cast<std::size_t>(k)].rows);
  }

  void evaluate_block(Index k) {
    const auto& L = sets_.left[static_cast<std::size_t>(k)];
    const auto& R = sets_.right[static_cast<std::size_t>(k)];
    const Index n = modes_[static_cast<std::size_t>(k)];
    const Index count = L.rows * n * R.rows;
    const Index w = d_ + 1;
    auto tuple = [&](Index pos, Index* dst) {
      const Index a = pos / (n * R.rows), j = (pos / R.rows) % n, b = pos % R.rows;
      for (Index c = 0; c < k; ++c) dst[c] = L(a, c);
      dst[k] = j;
      for (Index c = 0; c < R.width; ++c) dst[k + 1 + c] = R(b, c);
    };
    TtCore core(L.rows, n, R.rows);
    if (f_.has_block()) {
      f_.block(k, L, n, R, core.data);
    } else {
      std::vector<Index> idx(static_cast<std::size_t>(count * w));
      for (Index pos = 0; pos < count; ++pos) tuple(pos, idx.data() + pos * w);
      f_(idx, count, core.data);
    }
    for (Index i = 0; i < count; ++i) {
      if (!std::isfinite(core.data[static_cast<std::size_t>(i)])) {
        std::vector<Index> t(static_cast<std::size_t>(w));
        tuple(i, t.data());
        std::ostringstream os;
        os << "tt_cross: evaluator returned a non-finite value at index (";
        for (Index c = 0; c < w; ++c) os << (c ? "," : "") << t[static_cast<std::size_t>(c)];
        os << ")";
        throw CrossError(os.str());
      }
    }
    note_sizes(k);
    cores_[static_cast<std::size_t>(k)] = std::move(core);
  }

  void forward(bool evaluate, bool truncate) {
    for (Index k = 0; k < d_; ++k) {
      if (evaluate) evaluate_block(k);
      auto& c = cores_[static_cast<std::size_t>(k)];
      auto s = dense::svd_truncate(c.left(), truncate ? opts_.rel_tol / std::sqrt(static_cast<double>(std::max<Index>(d_, 1))) : opts_.pivot_tol);
      if (s.rank == 0) throw CrossError("tt_cross: rank collapse to 0 at mode " + std::to_string(k));
      auto piv = dense::maxvol(s.u);
      Matrix sel = dense::select_rows(s.u, piv);
      // Q * Q(L)^{-1}
      Matrix interp =
          Eigen::PartialPivLU<Eigen::MatrixXd>(sel.transpose()).solve(Eigen::MatrixXd(s.u.transpose())).transpose();
      if (!evaluate) {
        auto& nx = cores_[static_cast<std::size_t>(k + 1)];
        Matrix carried = sel * s.s.asDiagonal() * s.vt * nx.right();
        nx = TtCore::from_right(carried, nx.n, nx.rr);
      }
      c = TtCore::from_left(interp, c.rl, c.n);
      sets_.left[static_cast<std::size_t>(k + 1)] =
          merge_left(sets_.left[static_cast<std::size_t>(k)], modes_[static_cast<std::size_t>(k)], piv);
    }
    if (evaluate) evaluate_block(d_);
  }

  void backward(bool last_fresh) {
    for (Index k = d_; k >= 1; --k) {
      if (!(k == d_ && last_fresh)) evaluate_block(k);
      auto& c = cores_[static_cast<std::size_t>(k)];
      auto s = dense::svd_truncate(c.right().transpose(), opts_.pivot_tol);
      if (s.rank == 0) throw CrossError("tt_cross: rank collapse to 0 at mode " + std::to_string(k));
      auto piv = dense::maxvol(s.u);
      Matrix sel = dense::select_rows(s.u, piv);
      // (Q Q(L)^{-1})^T = Q(L)^{-T} Q^T
      Matrix rows = Eigen::PartialPivLU<Eigen::MatrixXd>(sel.transpose()).solve(Eigen::MatrixXd(s.u.transpose()));
      c = TtCore::from_right(rows, c.n, c.rr);
      sets_.right[static_cast<std::size_t>(k - 1)] =
          merge_right(sets_.right[static_cast<std::size_t>(k)], modes_[static_cast<std::size_t>(k)], piv);
    }
    evaluate_block(0);
  }

  CrossResult iterate() {
    CrossResult res;
    if (d_ == 0) {
      evaluate_block(0);
      res.tt = TtTensor(cores_);
      res.stats.sweeps = 1;
      res.stats.converged = true;
      res.stats.evaluations = f_.evaluations();
      res.stats.eval_bound = 2 * static_cast<std::size_t>(modes_[0]);
      res.indices = sets_;
      return res;
    }
    std::optional<TtTensor> prev;
    int sweep = 0;
    double change = 0.0;
    bool converged = false;
    while (sweep < opts_.max_sweeps) {
      ++sweep;
      const bool evaluate = have_right_;
      forward(evaluate, truncate_first_ && sweep == 1);
      backward(evaluate);
      have_right_ = true;
      TtTensor cur(cores_);
      if (prev) {
        const double nv = norm(cur);
        change = nv > 0 ? distance(cur, *prev) / nv : 0.0;
        log::debug("tt_cross sweep " + std::to_string(sweep) + " change " + std::to_string(change));
        if (change <= opts_.rel_tol) {
          converged = true;
          prev = std::move(cur);
          break;
        }
      }
      prev = std::move(cur);
    }
    res.tt = std::move(*prev);
    res.stats.sweeps = sweep;
    res.stats.converged = converged;
    res.stats.final_change = change;
    res.stats.evaluations = f_.evaluations();
    res.stats.ranks = res.tt.ranks();
    std::size_t per = 0;
    for (Index k = 0; k <= d_; ++k)
      per += 2 * static_cast<std::size_t>(max_rank_[static_cast<std::size_t>(k)] * modes_[static_cast<std::size_t>(k)] *
                                          max_rank_[static_cast<std::size_t>(k + 1)]);
    res.stats.eval_bound = static_cast<std::size_t>(sweep) * per;
    res.indices = sets_;
    return res;
  }

  EvalFn& f_;
  std::vector<Index> modes_;
  CrossOptions opts_;
  Index d_;
  CrossIndexSets sets_;
  std::vector<TtCore> cores_;
  std::vector<Index> max_rank_;
  bool have_right_ = false;
  bool truncate_first_ = false;
};

}  // namespace

CrossResult tt_cross(EvalFn& f, const std::vector<Index>& modes, const CrossOptions& opts) {
  return CrossRun(f, modes, opts).run_random();
}

CrossResult tt_cross(EvalFn& f, const TtTensor& init, const CrossOptions& opts) {
  return CrossRun(f, init.mode_sizes(), opts).run_init(init);
}

}  // namespace ttuq::cross
