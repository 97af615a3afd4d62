// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "ttuq/dense.hpp"
#include "ttuq/tt.hpp"

namespace ttuq::cross {

struct CrossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// `rows` tuples of `width` mode indices, row-major.
struct IndexSet {
  Index rows = 1;
  Index width = 0;
  std::vector<Index> data;

  Index operator()(Index r, Index c) const { return data[static_cast<std::size_t>(r * width + c)]; }
  std::span<const Index> row(Index r) const {
    return {data.data() + r * width, static_cast<std::size_t>(width)};
  }
  static IndexSet empty() { return {}; }
};

// left[k] = I_{<k} (tuples over modes 0..k-1), right[k] = J_{>k} (tuples over modes k+1..d), k = 0..d.
struct CrossIndexSets {
  std::vector<IndexSet> left;
  std::vector<IndexSet> right;
};

// Pivot p addresses the composite (alpha, j) with alpha slowest: p = alpha * n + j.
IndexSet merge_left(const IndexSet& left, Index n, const dense::PivotSet& pivots);
// Pivot p addresses the composite (j, alpha) with j slowest: p = j * rows(right) + alpha.
IndexSet merge_right(const IndexSet& right, Index n, const dense::PivotSet& pivots);

class EvalFn {
 public:
  // indices: count rows of `order` mode indices, row-major; out: count values
  using Batch = std::function<void(std::span<const Index> indices, Index count, std::span<double> out)>;
  // Fills the whole block left x {0..n-1} x right for mode k, rank-major (left row slowest).
  using Block = std::function<void(Index k, const IndexSet& left, Index n, const IndexSet& right, std::span<double> out)>;

  EvalFn(Index order, Batch fn) : order_(order), fn_(std::move(fn)) {}
  EvalFn(Index order, Batch fn, Block block) : order_(order), fn_(std::move(fn)), block_(std::move(block)) {}

  void operator()(std::span<const Index> indices, Index count, std::span<double> out) {
    fn_(indices, count, out);
    evaluations_ += static_cast<std::size_t>(count);
  }
  bool has_block() const { return static_cast<bool>(block_); }
  void block(Index k, const IndexSet& left, Index n, const IndexSet& right, std::span<double> out) {
    block_(k, left, n, right, out);
    evaluations_ += static_cast<std::size_t>(left.rows * n * right.rows);
  }
  Index order() const { return order_; }
  std::size_t evaluations() const { return evaluations_; }
  void reset_counter() { evaluations_ = 0; }

 private:
  Index order_;
  Batch fn_;
  Block block_;
  std::size_t evaluations_ = 0;
};

// Interface values at index tuples. left_interface: rows(I) x r_{k-1} with k = width(I), built from
// cores 0..k-1. right_interface: r_k x rows(J) with k = d - width(J), built from cores k+1..d.
Matrix left_interface(std::span<const TtCore> cores, const IndexSet& left);
Matrix right_interface(std::span<const TtCore> cores, const IndexSet& right);

// `count` distinct tuples over modes k+1..d, spread so each mode value appears before any repeats;
// the whole tuple space when it is not larger than count.
IndexSet random_right_rows(const std::vector<Index>& modes, Index k, Index count, std::mt19937_64& rng);

// Evaluator over the entries of a TT, optionally passed through `map`; fills blocks via interfaces.
EvalFn tt_evaluator(const TtTensor& v, std::function<double(double)> map = {});

struct CrossOptions {
  double rel_tol = 1e-6;
  int max_sweeps = 10;
  Index random_count = 32;
  std::uint64_t seed = 1;
  // rank-revealing threshold used outside the first randomized sweep
  double pivot_tol = 1e-13;
};

struct CrossStats {
  int sweeps = 0;
  std::size_t evaluations = 0;
  std::vector<Index> ranks;
  bool converged = false;
  double final_change = 0.0;
  // sweeps * sum_k 2 * max r_{k-1} * n_k * max r_k over the run, index-set sizes included
  std::size_t eval_bound = 0;
};

struct CrossResult {
  TtTensor tt;
  CrossStats stats;
  CrossIndexSets indices;
};

CrossResult tt_cross(EvalFn& f, const std::vector<Index>& modes, const CrossOptions& opts);
CrossResult tt_cross(EvalFn& f, const TtTensor& init, const CrossOptions& opts);

}  // namespace ttuq::cross
