// SPDX-License-Identifier: Apache-2.0
#include "ttuq/tt.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace ttuq {

TtCore TtCore::from_left(const MatrixRef& m, Index rl, Index n) {
  if (m.rows() != rl * n) throw ShapeMismatch("TtCore::from_left: row count is not rl*n");
  TtCore c(rl, n, m.cols());
  MatrixMap(c.data.data(), m.rows(), m.cols()) = m;
  return c;
}

TtCore TtCore::from_right(const MatrixRef& m, Index n, Index rr) {
  if (m.cols() != n * rr) throw ShapeMismatch("TtCore::from_right: column count is not n*rr");
  TtCore c(m.rows(), n, rr);
  MatrixMap(c.data.data(), m.rows(), m.cols()) = m;
  return c;
}

TtTensor::TtTensor(std::vector<TtCore> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw InvalidInput("TtTensor: at least one block required");
  if (cores_.front().rl != 1 || cores_.back().rr != 1) throw ShapeMismatch("TtTensor: boundary ranks must be 1");
  for (std::size_t k = 0; k < cores_.size(); ++k) {
    const auto& c = cores_[k];
    if (c.rl < 1 || c.n < 1 || c.rr < 1) throw ShapeMismatch("TtTensor: block " + std::to_string(k) + " has an empty dimension");
    if (c.data.size() != static_cast<std::size_t>(c.rl * c.n * c.rr)) throw ShapeMismatch("TtTensor: block storage size mismatch");
    if (k + 1 < cores_.size() && c.rr != cores_[k + 1].rl) {
      throw ShapeMismatch("TtTensor: rank mismatch between blocks " + std::to_string(k) + " and " + std::to_string(k + 1));
    }
    for (double x : c.data) {
      if (!std::isfinite(x)) throw InvalidInput("TtTensor: non-finite entry in block " + std::to_string(k));
    }
  }
}

TtTensor TtTensor::zeros(const std::vector<Index>& modes) {
  std::vector<TtCore> cores;
  for (Index n : modes) cores.emplace_back(1, n, 1);
  return TtTensor(std::move(cores));
}

TtTensor TtTensor::constant(const std::vector<Index>& modes, double value) {
  std::vector<TtCore> cores;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    TtCore c(1, modes[k], 1);
    std::fill(c.data.begin(), c.data.end(), k == 0 ? value : 1.0);
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

TtTensor TtTensor::rank_one(const std::vector<Vector>& factors) {
  std::vector<TtCore> cores;
  for (const auto& f : factors) {
    TtCore c(1, f.size(), 1);
    for (Index j = 0; j < f.size(); ++j) c.data[static_cast<std::size_t>(j)] = f[j];
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

TtTensor TtTensor::random(const std::vector<Index>& modes, const std::vector<Index>& ranks, std::mt19937_64& rng) {
  if (modes.empty() || ranks.size() + 1 != modes.size()) throw ShapeMismatch("TtTensor::random: need d ranks for d+1 modes");
  std::normal_distribution<double> nd;
  std::vector<TtCore> cores;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const Index rl = k == 0 ? 1 : ranks[k - 1];
    const Index rr = k + 1 == modes.size() ? 1 : ranks[k];
    TtCore c(rl, modes[k], rr);
    for (auto& x : c.data) x = nd(rng);
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

std::vector<Index> TtTensor::mode_sizes() const {
  std::vector<Index> m;
  for (const auto& c : cores_) m.push_back(c.n);
  return m;
}

std::vector<Index> TtTensor::ranks() const {
  std::vector<Index> r;
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k) r.push_back(cores_[k].rr);
  return r;
}

Index TtTensor::max_rank() const {
  Index m = 1;
  for (Index r : ranks()) m = std::max(m, r);
  return m;
}

std::size_t TtTensor::storage() const {
  std::size_t s = 0;
  for (const auto& c : cores_) s += c.data.size();
  return s;
}

double element(const TtTensor& v, std::span<const Index> idx) {
  if (static_cast<Index>(idx.size()) != v.order()) throw ShapeMismatch("element: index length differs from tensor order");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  for (Index k = 0; k < v.order(); ++k) {
    const auto& c = v.core(k);
    const Index j = idx[static_cast<std::size_t>(k)];
    if (j < 0 || j >= c.n) throw InvalidInput("element: index out of range in mode " + std::to_string(k));
    row = row * c.slice(j);
  }
  return row(0);
}

std::vector<double> full_expand(const TtTensor& v, std::size_t cap) {
  std::size_t total = 1;
  for (Index n : v.mode_sizes()) {
    total *= static_cast<std::size_t>(n);
    if (total > cap) throw InvalidInput("full_expand: tensor size exceeds cap of " + std::to_string(cap) + " entries");
  }
  Matrix p = Matrix::Ones(1, 1);
  for (Index k = 0; k < v.order(); ++k) {
    const auto& c = v.core(k);
    Matrix q = p * c.right();
    p = MatrixMap(q.data(), q.rows() * c.n, c.rr);
  }
  return std::vector<double>(p.data(), p.data() + p.size());
}

namespace {

void require_same_modes(const TtTensor& u, const TtTensor& v, const char* who) {
  if (u.mode_sizes() != v.mode_sizes()) throw ShapeMismatch(std::string(who) + ": mode sizes differ");
}

}  // namespace

double inner(const TtTensor& u, const TtTensor& v) {
  require_same_modes(u, v, "inner");
  Matrix w = Matrix::Ones(1, 1);
  for (Index k = 0; k < u.order(); ++k) {
    const auto& cu = u.core(k);
    const auto& cv = v.core(k);
    Matrix x = w * cv.right();  // ru x (n rv')
    ConstMatrixMap xl(x.data(), cu.rl * cu.n, cv.rr);
    w = cu.left().transpose() * xl;
  }
  return w(0, 0);
}

double norm(const TtTensor& v) { return std::sqrt(std::max(0.0, inner(v, v))); }

void left_orthogonalize_to(std::vector<TtCore>& cores, Index k) {
  for (Index i = 0; i < k; ++i) {
    auto& c = cores[static_cast<std::size_t>(i)];
    auto& nx = cores[static_cast<std::size_t>(i + 1)];
    auto qr = dense::qr_thin(c.left());
    c = TtCore::from_left(qr.q, c.rl, c.n);
    Matrix carried = qr.r * nx.right();
    nx = TtCore::from_right(carried, nx.n, nx.rr);
  }
}

void right_orthogonalize_to(std::vector<TtCore>& cores, Index k) {
  for (Index i = static_cast<Index>(cores.size()) - 1; i > k; --i) {
    auto& c = cores[static_cast<std::size_t>(i)];
    auto& pv = cores[static_cast<std::size_t>(i - 1)];
    auto qr = dense::qr_thin(c.right().transpose());
    c = TtCore::from_right(qr.q.transpose(), c.n, c.rr);
    Matrix carried = pv.left() * qr.r.transpose();
    pv = TtCore::from_left(carried, pv.rl, pv.n);
  }
}

TtTensor orthogonalize(const TtTensor& v, Direction dir) {
  std::vector<TtCore> cores = v.cores();
  if (dir == Direction::left)
    left_orthogonalize_to(cores, v.order() - 1);
  else
    right_orthogonalize_to(cores, 0);
  return TtTensor(std::move(cores));
}

TtTensor round(const TtTensor& v, double rel_tol, Index rank_cap) {
  if (!(rel_tol >= 0.0 && rel_tol < 1.0)) throw InvalidInput("round: rel_tol must lie in [0,1)");
  const Index d = v.order() - 1;
  if (d == 0) return v;
  std::vector<TtCore> cores = v.cores();
  right_orthogonalize_to(cores, 0);
  const double step_tol = rel_tol / std::sqrt(static_cast<double>(d));
  for (Index k = 0; k < d; ++k) {
    auto& c = cores[static_cast<std::size_t>(k)];
    auto& nx = cores[static_cast<std::size_t>(k + 1)];
    auto s = dense::svd_truncate(c.left(), step_tol, rank_cap);
    if (s.rank == 0) return TtTensor::zeros(v.mode_sizes());
    c = TtCore::from_left(s.u, c.rl, c.n);
    Matrix carried = s.s.asDiagonal() * s.vt * nx.right();
    nx = TtCore::from_right(carried, nx.n, nx.rr);
  }
  return TtTensor(std::move(cores));
}

namespace {

std::vector<TtCore> concat_cores(const TtTensor& u, const TtTensor& v, double sv) {
  const Index d1 = u.order();
  std::vector<TtCore> out;
  if (d1 == 1) {
    TtCore c = u.core(0);
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += sv * v.core(0).data[i];
    out.push_back(std::move(c));
    return out;
  }
  for (Index k = 0; k < d1; ++k) {
    const auto& a = u.core(k);
    const auto& b = v.core(k);
    const bool first = k == 0, last = k == d1 - 1;
    const Index rl = first ? 1 : a.rl + b.rl;
    const Index rr = last ? 1 : a.rr + b.rr;
    TtCore c(rl, a.n, rr);
    const double fb = first ? sv : 1.0;
    for (Index j = 0; j < a.n; ++j) {
      for (Index x = 0; x < a.rl; ++x)
        for (Index y = 0; y < a.rr; ++y) c(x, j, y) = a(x, j, y);
      const Index ol = first ? 0 : a.rl;
      const Index orr = last ? 0 : a.rr;
      for (Index x = 0; x < b.rl; ++x)
        for (Index y = 0; y < b.rr; ++y) c(ol + x, j, orr + y) += fb * b(x, j, y);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

TtTensor add(const TtTensor& u, const TtTensor& v) {
  require_same_modes(u, v, "add");
  return TtTensor(concat_cores(u, v, 1.0));
}

TtTensor scale(const TtTensor& v, double s) {
  if (s == 0.0) return TtTensor::zeros(v.mode_sizes());
  std::vector<TtCore> cores = v.cores();
  for (auto& x : cores.front().data) x *= s;
  return TtTensor(std::move(cores));
}

double distance(const TtTensor& u, const TtTensor& v) {
  require_same_modes(u, v, "distance");
  std::vector<TtCore> cores = concat_cores(u, v, -1.0);
  left_orthogonalize_to(cores, static_cast<Index>(cores.size()) - 1);
  const auto& last = cores.back().data;
  double s = 0.0;
  for (double x : last) s += x * x;
  return std::sqrt(s);
}

TtMatrixCore TtMatrixCore::dense_block(Index rl, Index rows, Index cols, Index rr) {
  TtMatrixCore c;
  c.rl = rl;
  c.rows = rows;
  c.cols = cols;
  c.rr = rr;
  c.kind = BlockKind::dense;
  c.data.assign(static_cast<std::size_t>(rl * rows * cols * rr), 0.0);
  return c;
}

TtMatrixCore TtMatrixCore::diagonal_block(Index rl, Index n, Index rr) {
  TtMatrixCore c;
  c.rl = rl;
  c.rows = c.cols = n;
  c.rr = rr;
  c.kind = BlockKind::diagonal;
  c.data.assign(static_cast<std::size_t>(rl * n * rr), 0.0);
  return c;
}

TtMatrixCore TtMatrixCore::sparse_block(Index rl, Index rr, std::vector<SparseMatrix> mats) {
  if (static_cast<Index>(mats.size()) != rl * rr || mats.empty()) throw ShapeMismatch("sparse_block: need rl*rr matrices");
  TtMatrixCore c;
  c.rl = rl;
  c.rr = rr;
  c.rows = mats.front().rows();
  c.cols = mats.front().cols();
  for (const auto& m : mats) {
    if (m.rows() != c.rows || m.cols() != c.cols) throw ShapeMismatch("sparse_block: inconsistent matrix sizes");
  }
  c.kind = BlockKind::sparse;
  c.sparse = std::move(mats);
  return c;
}

double TtMatrixCore::entry(Index g, Index i, Index j, Index h) const {
  switch (kind) {
    case BlockKind::dense:
      return data[static_cast<std::size_t>(((g * rows + i) * cols + j) * rr + h)];
    case BlockKind::diagonal:
      return i == j ? data[static_cast<std::size_t>((g * rows + i) * rr + h)] : 0.0;
    case BlockKind::sparse:
      return sparse[static_cast<std::size_t>(g * rr + h)].coeff(i, j);
  }
  return 0.0;
}

TtMatrix::TtMatrix(std::vector<TtMatrixCore> cores) : cores_(std::move(cores)) {
  if (cores_.empty()) throw InvalidInput("TtMatrix: at least one block required");
  if (cores_.front().rl != 1 || cores_.back().rr != 1) throw ShapeMismatch("TtMatrix: boundary ranks must be 1");
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k) {
    if (cores_[k].rr != cores_[k + 1].rl) throw ShapeMismatch("TtMatrix: rank mismatch after block " + std::to_string(k));
  }
}

TtMatrix TtMatrix::identity(const std::vector<Index>& modes) {
  std::vector<TtMatrixCore> cores;
  for (Index n : modes) {
    auto c = TtMatrixCore::diagonal_block(1, n, 1);
    std::fill(c.data.begin(), c.data.end(), 1.0);
    cores.push_back(std::move(c));
  }
  return TtMatrix(std::move(cores));
}

std::vector<Index> TtMatrix::row_sizes() const {
  std::vector<Index> r;
  for (const auto& c : cores_) r.push_back(c.rows);
  return r;
}

std::vector<Index> TtMatrix::col_sizes() const {
  std::vector<Index> r;
  for (const auto& c : cores_) r.push_back(c.cols);
  return r;
}

std::vector<Index> TtMatrix::ranks() const {
  std::vector<Index> r;
  for (std::size_t k = 0; k + 1 < cores_.size(); ++k) r.push_back(cores_[k].rr);
  return r;
}

TtTensor matvec(const TtMatrix& a, const TtTensor& v) {
  if (a.col_sizes() != v.mode_sizes()) throw ShapeMismatch("matvec: operator column sizes differ from tensor modes");
  std::vector<TtCore> out;
  for (Index k = 0; k < v.order(); ++k) {
    const auto& ac = a.core(k);
    const auto& vc = v.core(k);
    const Index rl = ac.rl * vc.rl, rr = ac.rr * vc.rr;
    TtCore o(rl, ac.rows, rr);
    for (Index g = 0; g < ac.rl; ++g) {
      for (Index h = 0; h < ac.rr; ++h) {
        for (Index x = 0; x < vc.rl; ++x) {
          const Index ol = g * vc.rl + x;
          // slice of v at left rank x: cols x vc.rr
          Eigen::Map<const Matrix> vx(vc.data.data() + x * vc.n * vc.rr, vc.n, vc.rr);
          Matrix prod;
          switch (ac.kind) {
            case BlockKind::dense: {
              Matrix ag(ac.rows, ac.cols);
              for (Index i = 0; i < ac.rows; ++i)
                for (Index j = 0; j < ac.cols; ++j) ag(i, j) = ac.entry(g, i, j, h);
              prod = ag * vx;
              break;
            }
            case BlockKind::diagonal: {
              prod.resize(ac.rows, vc.rr);
              for (Index i = 0; i < ac.rows; ++i)
                prod.row(i) = ac.data[static_cast<std::size_t>((g * ac.rows + i) * ac.rr + h)] * vx.row(i);
              break;
            }
            case BlockKind::sparse:
              prod = ac.sparse[static_cast<std::size_t>(g * ac.rr + h)] * vx;
              break;
          }
          for (Index i = 0; i < ac.rows; ++i)
            for (Index y = 0; y < vc.rr; ++y) o(ol, i, h * vc.rr + y) = prod(i, y);
        }
      }
    }
    out.push_back(std::move(o));
  }
  return TtTensor(std::move(out));
}

namespace {

constexpr char kMagic[4] = {'T', 'T', 'B', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((x >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[off + static_cast<std::size_t>(i)]) << (8 * i);
  return x;
}

}  // namespace

std::vector<std::uint8_t> serialize(const TtTensor& v) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u64(out, static_cast<std::uint64_t>(v.order()));
  for (Index n : v.mode_sizes()) put_u64(out, static_cast<std::uint64_t>(n));
  for (Index r : v.ranks()) put_u64(out, static_cast<std::uint64_t>(r));
  for (const auto& c : v.cores())
    for (double x : c.data) put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

TtTensor deserialize(std::span<const std::uint8_t> b) {
  std::size_t off = 0;
  auto need = [&](std::size_t bytes, const char* what) {
    if (b.size() - off < bytes) {
      throw ParseError(std::string("truncated stream while reading ") + what + ": expected " + std::to_string(bytes) +
                           " bytes, got " + std::to_string(b.size() - off),
                       off);
    }
  };
  need(4, "magic");
  if (!std::equal(kMagic, kMagic + 4, b.begin())) throw ParseError("bad magic or version (expected TTB1)", 0);
  off = 4;
  need(8, "order");
  const std::uint64_t order = get_u64(b, off);
  if (order == 0) throw ParseError("tensor order d+1 must be at least 1", off);
  if (order > (1u << 20)) throw ParseError("implausible tensor order " + std::to_string(order), off);
  off += 8;
  need(8 * (2 * order - 1), "header");
  std::vector<Index> modes(order), ranks(order + 1, 1);
  for (std::uint64_t k = 0; k < order; ++k, off += 8) {
    const std::uint64_t n = get_u64(b, off);
    if (n == 0 || n > (std::uint64_t{1} << 40)) throw ParseError("invalid mode size", off);
    modes[k] = static_cast<Index>(n);
  }
  for (std::uint64_t k = 1; k < order; ++k, off += 8) {
    const std::uint64_t r = get_u64(b, off);
    if (r == 0 || r > (std::uint64_t{1} << 30)) throw ParseError("invalid rank", off);
    ranks[k] = static_cast<Index>(r);
  }
  std::uint64_t entries = 0;
  for (std::uint64_t k = 0; k < order; ++k) {
    const long double e = static_cast<long double>(ranks[k]) * modes[k] * ranks[k + 1];
    if (e > 1e15L) throw ParseError("block size too large", off);
    entries += static_cast<std::uint64_t>(e);
  }
  const std::uint64_t payload = entries * 8;
  if (b.size() - off != payload) {
    throw ParseError("payload size mismatch: expected " + std::to_string(payload) + " bytes, got " +
                         std::to_string(b.size() - off),
                     off);
  }
  std::vector<TtCore> cores;
  for (std::uint64_t k = 0; k < order; ++k) {
    TtCore c(ranks[k], modes[k], ranks[k + 1]);
    for (auto& x : c.data) {
      x = std::bit_cast<double>(get_u64(b, off));
      off += 8;
    }
    cores.push_back(std::move(c));
  }
  return TtTensor(std::move(cores));
}

void write_ttb(const std::filesystem::path& path, const TtTensor& v) {
  const auto bytes = serialize(v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

TtTensor read_ttb(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace ttuq
