// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ttuq/tt.hpp"

using namespace ttuq;

namespace {

double rel_max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return den > 0 ? num / den : num;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<Index> unflatten(std::size_t lin, const std::vector<Index>& modes) {
  std::vector<Index> idx(modes.size());
  for (std::size_t k = modes.size(); k-- > 0;) {
    idx[k] = static_cast<Index>(lin % static_cast<std::size_t>(modes[k]));
    lin /= static_cast<std::size_t>(modes[k]);
  }
  return idx;
}

// Zero-pad every bond of v to rank `pad`.
TtTensor pad_ranks(const TtTensor& v, Index pad) {
  std::vector<TtCore> cores;
  for (Index k = 0; k < v.order(); ++k) {
    const auto& c = v.core(k);
    const Index rl = k == 0 ? 1 : pad, rr = k + 1 == v.order() ? 1 : pad;
    TtCore p(rl, c.n, rr);
    for (Index a = 0; a < c.rl; ++a)
      for (Index j = 0; j < c.n; ++j)
        for (Index b = 0; b < c.rr; ++b) p(a, j, b) = c(a, j, b);
    cores.push_back(std::move(p));
  }
  return TtTensor(std::move(cores));
}

}  // namespace

TEST(TtElement, RankOneProduct) {
  Vector a(3), b(4);
  a << 1, 2, 3;
  b << 5, 6, 7, 8;
  auto v = TtTensor::rank_one({a, b});
  std::vector<Index> idx{1, 2};
  EXPECT_DOUBLE_EQ(element(v, idx), 2.0 * 7.0);
  std::vector<Index> bad{3, 0};
  EXPECT_THROW(element(v, bad), InvalidInput);
}

TEST(TtElement, OnesEverywhere) {
  auto v = TtTensor::constant({2, 3, 2}, 1.0);
  for (std::size_t i = 0; i < 12; ++i) {
    auto idx = unflatten(i, {2, 3, 2});
    EXPECT_DOUBLE_EQ(element(v, idx), 1.0);
  }
}

TEST(TtElement, MatchesFullExpand) {
  std::mt19937_64 rng(1);
  auto v = TtTensor::random({4, 3, 5}, {2, 3}, rng);
  auto full = full_expand(v);
  ASSERT_EQ(full.size(), 60u);
  for (std::size_t i = 0; i < 60; ++i) {
    auto idx = unflatten(i, {4, 3, 5});
    EXPECT_NEAR(element(v, idx), full[i], 1e-13 * (1 + std::abs(full[i])));
  }
}

TEST(TtFullExpand, SingleBlockAndLoops) {
  TtCore c(1, 5, 1);
  for (Index j = 0; j < 5; ++j) c(0, j, 0) = j * 1.5;
  auto v = TtTensor({c});
  EXPECT_EQ(full_expand(v), c.data);

  std::mt19937_64 rng(2);
  auto w = TtTensor::random({3, 3, 3}, {2, 2}, rng);
  auto full = full_expand(w);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      for (Index k = 0; k < 3; ++k) {
        double s = 0.0;
        for (Index a = 0; a < 2; ++a)
          for (Index b = 0; b < 2; ++b) s += w.core(0)(0, i, a) * w.core(1)(a, j, b) * w.core(2)(b, k, 0);
        EXPECT_NEAR(full[static_cast<std::size_t>(i * 9 + j * 3 + k)], s, 1e-13);
      }
  EXPECT_THROW(full_expand(w, 26), InvalidInput);
}

TEST(TtInner, ZeroOnesAndRandom) {
  std::mt19937_64 rng(3);
  auto v = TtTensor::random({3, 4, 2}, {2, 3}, rng);
  EXPECT_EQ(inner(v, TtTensor::zeros({3, 4, 2})), 0.0);
  EXPECT_NEAR(norm(TtTensor::constant({2, 2, 2}, 1.0)), std::sqrt(8.0), 1e-15);
  auto u = TtTensor::random({3, 4, 2}, {3, 2}, rng);
  const double ref = dot(full_expand(u), full_expand(v));
  EXPECT_NEAR(inner(u, v), ref, 1e-12 * std::abs(ref));
  EXPECT_THROW(inner(u, TtTensor::zeros({3, 4, 3})), ShapeMismatch);
}

TEST(TtInner, Bilinear) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto u = TtTensor::random({3, 2, 4}, {2, 2}, rng);
    auto w = TtTensor::random({3, 2, 4}, {3, 2}, rng);
    auto v = TtTensor::random({3, 2, 4}, {2, 3}, rng);
    const double alpha = -1.7;
    const double lhs = inner(add(scale(u, alpha), w), v);
    const double rhs = alpha * inner(u, v) + inner(w, v);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(lhs) + std::abs(alpha * inner(u, v)) + std::abs(inner(w, v))));
  }
}

TEST(TtOrthogonalize, ScaleShufflingAndOrthonormality) {
  Vector a = Vector::LinSpaced(3, 1, 3), b = Vector::LinSpaced(4, 2, 5);
  auto v = TtTensor::rank_one({2.0 * a, 3.0 * b});
  auto l = orthogonalize(v, Direction::left);
  EXPECT_NEAR(ConstMatrixMap(l.core(0).data.data(), 3, 1).norm(), 1.0, 1e-14);
  EXPECT_LE(rel_max_diff(full_expand(l), full_expand(v)), 1e-13);

  std::mt19937_64 rng(5);
  auto r = TtTensor::random({4, 3, 5, 2}, {3, 4, 2}, rng);
  for (auto dir : {Direction::left, Direction::right}) {
    auto o = orthogonalize(r, dir);
    EXPECT_LE(rel_max_diff(full_expand(o), full_expand(r)), 1e-12);
    EXPECT_NEAR(norm(o), norm(r), 1e-12 * norm(r));
    for (Index k = 0; k + 1 < o.order(); ++k) {
      if (dir == Direction::left) {
        auto m = o.core(k).left();
        EXPECT_LE((m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).norm(), 1e-13);
      } else {
        auto m = o.core(k + 1).right();
        EXPECT_LE((m * m.transpose() - Matrix::Identity(m.rows(), m.rows())).norm(), 1e-13);
      }
    }
    // orthogonalizing again leaves elements identical
    auto o2 = orthogonalize(o, dir);
    EXPECT_LE(rel_max_diff(full_expand(o2), full_expand(o)), 1e-13);
  }
}

TEST(TtRound, ParallelAddition) {
  std::mt19937_64 rng(6);
  auto v = TtTensor::random({3, 4, 3, 2}, {2, 3, 2}, rng);
  auto r = round(add(v, v), 1e-12);
  EXPECT_EQ(r.ranks(), v.ranks());
  EXPECT_NEAR(norm(r), 2.0 * norm(v), 1e-12 * norm(v));
}

TEST(TtRound, ZeroPaddedRankTwo) {
  std::mt19937_64 rng(7);
  auto v = TtTensor::random({4, 4, 4, 4}, {2, 2, 2}, rng);
  auto p = pad_ranks(v, 5);
  EXPECT_EQ(p.ranks(), (std::vector<Index>{5, 5, 5}));
  auto r = round(p, 1e-12);
  EXPECT_EQ(r.ranks(), (std::vector<Index>{2, 2, 2}));
  EXPECT_LE(rel_max_diff(full_expand(r), full_expand(v)), 1e-12);
}

TEST(TtRound, ErrorContractMonotoneRanksIdempotence) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    auto v = TtTensor::random({3, 4, 5, 3}, {3, 4, 3}, rng);
    for (double tol : {0.3, 0.05, 1e-3}) {
      auto r = round(v, tol);
      EXPECT_LE(distance(r, v), tol * norm(v) * (1 + 1e-10));
      const auto rv = v.ranks(), rr = r.ranks();
      for (std::size_t k = 0; k < rv.size(); ++k) EXPECT_LE(rr[k], rv[k]);
      auto full_r = full_expand(r), full_v = full_expand(v);
      double e = 0.0, nv = 0.0;
      for (std::size_t i = 0; i < full_v.size(); ++i) {
        e += (full_r[i] - full_v[i]) * (full_r[i] - full_v[i]);
        nv += full_v[i] * full_v[i];
      }
      EXPECT_LE(std::sqrt(e), tol * std::sqrt(nv) * (1 + 1e-10));
    }
    // ranks never grow under repeated rounding
    auto once = round(v, 0.3);
    const auto r1 = once.ranks(), r2 = round(once, 0.3).ranks();
    for (std::size_t k = 0; k < r1.size(); ++k) EXPECT_LE(r2[k], r1[k]);
  }
}

TEST(TtRound, RepeatedRoundingKeepsRanks) {
  std::mt19937_64 rng(21);
  auto v = TtTensor::random({3, 4, 5, 3}, {3, 4, 3}, rng);
  auto once = round(v, 0.3);
  EXPECT_EQ(round(once, 0.3).ranks(), once.ranks());
}

TEST(TtRound, ZeroTensorStaysZero) {
  auto z = round(TtTensor::zeros({3, 3}), 1e-8);
  EXPECT_EQ(norm(z), 0.0);
  EXPECT_EQ(z.ranks(), (std::vector<Index>{1}));
}

TEST(TtAddScale, Basics) {
  std::mt19937_64 rng(9);
  auto u = TtTensor::random({3, 2, 4}, {2, 3}, rng);
  auto v = TtTensor::random({3, 2, 4}, {1, 2}, rng);
  EXPECT_LE(rel_max_diff(full_expand(add(u, TtTensor::zeros({3, 2, 4}))), full_expand(u)), 0.0);
  EXPECT_EQ(norm(scale(u, 0.0)), 0.0);
  auto s = add(u, v);
  EXPECT_EQ(s.ranks(), (std::vector<Index>{3, 5}));
  auto fu = full_expand(u), fv = full_expand(v), fs = full_expand(s);
  for (std::size_t i = 0; i < fs.size(); ++i) EXPECT_NEAR(fs[i], fu[i] + fv[i], 1e-13);
  auto d0 = TtTensor::random({5}, {}, rng);
  auto d0s = add(d0, d0);
  EXPECT_NEAR(full_expand(d0s)[2], 2 * full_expand(d0)[2], 1e-15);
  EXPECT_THROW(add(u, TtTensor::zeros({3, 2})), ShapeMismatch);
}

TEST(TtMatvec, IdentityAndDiagonalScaling) {
  std::mt19937_64 rng(10);
  auto v = TtTensor::random({3, 4, 2}, {2, 2}, rng);
  auto iv = matvec(TtMatrix::identity({3, 4, 2}), v);
  EXPECT_LE(rel_max_diff(full_expand(iv), full_expand(v)), 0.0);
  std::vector<TtMatrixCore> cores;
  for (Index n : {3, 4, 2}) {
    auto c = TtMatrixCore::diagonal_block(1, n, 1);
    std::fill(c.data.begin(), c.data.end(), cores.empty() ? 2.0 : 1.0);
    cores.push_back(std::move(c));
  }
  auto tv = matvec(TtMatrix(std::move(cores)), v);
  auto fv = full_expand(v), ft = full_expand(tv);
  for (std::size_t i = 0; i < fv.size(); ++i) EXPECT_NEAR(ft[i], 2 * fv[i], 1e-14);
}

TEST(TtMatvec, DenseKronOracle) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  const Index n = 3, R = 2;
  // mode 0: sparse-tagged block, mode 1: dense block
  std::vector<SparseMatrix> s0;
  std::vector<Eigen::MatrixXd> d0;
  for (Index h = 0; h < R; ++h) {
    Eigen::MatrixXd m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = (i + j) % 2 == 0 ? nd(rng) : 0.0;
    d0.push_back(m);
    s0.push_back(m.sparseView());
  }
  auto c1 = TtMatrixCore::dense_block(R, n, n, 1);
  for (auto& x : c1.data) x = nd(rng);
  TtMatrix a({TtMatrixCore::sparse_block(1, R, s0), c1});
  auto v = TtTensor::random({n, n}, {2}, rng);
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Index h = 0; h < R; ++h) {
    Eigen::MatrixXd a1(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) a1(i, j) = c1.entry(h, i, j, 0);
    for (Index i0 = 0; i0 < n; ++i0)
      for (Index j0 = 0; j0 < n; ++j0)
        for (Index i1 = 0; i1 < n; ++i1)
          for (Index j1 = 0; j1 < n; ++j1) full(i0 * n + i1, j0 * n + j1) += d0[h](i0, j0) * a1(i1, j1);
  }
  auto fv = full_expand(v);
  Eigen::VectorXd ref = full * Eigen::Map<Eigen::VectorXd>(fv.data(), n * n);
  auto av = matvec(a, v);
  EXPECT_EQ(av.ranks(), (std::vector<Index>{4}));
  auto fa = full_expand(av);
  for (Index i = 0; i < n * n; ++i) EXPECT_NEAR(fa[static_cast<std::size_t>(i)], ref[i], 1e-12 * (1 + std::abs(ref[i])));
}

TEST(TtSerialize, RoundTripBitExact) {
  std::mt19937_64 rng(12);
  auto v = TtTensor::random({3, 5, 2, 4}, {2, 4, 3}, rng);
  auto bytes = serialize(v);
  auto w = deserialize(bytes);
  ASSERT_EQ(w.mode_sizes(), v.mode_sizes());
  ASSERT_EQ(w.ranks(), v.ranks());
  for (Index k = 0; k < v.order(); ++k) EXPECT_EQ(w.core(k).data, v.core(k).data);
  EXPECT_EQ(bytes[0], 'T');
  EXPECT_EQ(bytes[4], 4);  // little-endian d+1
}

TEST(TtSerialize, ParseErrors) {
  std::vector<std::uint8_t> empty_dims{'T', 'T', 'B', '1', 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(deserialize(empty_dims), ParseError);
  std::vector<std::uint8_t> bad_magic{'T', 'T', 'B', '2', 1, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(deserialize(bad_magic), ParseError);

  std::mt19937_64 rng(13);
  auto bytes = serialize(TtTensor::random({50, 60}, {7}, rng));
  bytes.resize(bytes.size() - 100);
  try {
    deserialize(bytes);
    FAIL() << "truncated stream accepted";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    const std::size_t expected = 8 * (50 * 7 + 7 * 60);
    EXPECT_NE(msg.find("expected " + std::to_string(expected)), std::string::npos) << msg;
    EXPECT_NE(msg.find("got " + std::to_string(expected - 100)), std::string::npos) << msg;
    EXPECT_EQ(e.offset, 4u + 8u * 4u);
  }
}
