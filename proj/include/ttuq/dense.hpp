// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttuq {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using MatrixRef = Eigen::Ref<const Matrix>;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace dense {

// Row positions selected by maxvol, 0-based, distinct.
using PivotSet = std::vector<Index>;

struct QrResult {
  Matrix q;
  Matrix r;
};

struct SvdResult {
  Matrix u;   // n x r
  Vector s;   // r, nonincreasing
  Matrix vt;  // r x m
  Index rank = 0;
};

struct MaxvolOptions {
  double dominance_tol = 0.01;
  int max_iters = 100;
};

struct SmallSolve {
  Matrix x;
  double rcond = 1.0;
  bool ill_conditioned = false;
};

struct TridiagEig {
  Vector values;            // ascending
  Vector first_components;  // first row of the eigenvector matrix
};

bool all_finite(const MatrixRef& m);

QrResult qr_thin(const MatrixRef& m);

// Smallest rank r with ||M - U_r S_r Vt_r||_F <= rel_tol ||M||_F, capped by rank_cap.
SvdResult svd_truncate(const MatrixRef& m, double rel_tol, Index rank_cap = -1);

PivotSet maxvol(const MatrixRef& m, const MaxvolOptions& opts = {});

// rows of m selected by pivots, in pivot order
Matrix select_rows(const MatrixRef& m, const PivotSet& rows);

SmallSolve solve_small(const MatrixRef& a, const MatrixRef& b);

TridiagEig symtridiag_eig(std::span<const double> diag, std::span<const double> offdiag);

}  // namespace dense
}  // namespace ttuq
