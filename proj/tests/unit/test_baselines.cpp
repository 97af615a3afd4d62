// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ttuq/als_cross.hpp"
#include "ttuq/baselines.hpp"

using namespace ttuq;
using namespace ttuq::baselines;
using stochastic::Dist;

namespace {

Model constant_model(double c) {
  stochastic::KleSpec s;
  auto m = Model::build(s, 2, 3);
  m.coeff_fn = [c](Index, std::span<const double>) { return c; };
  return m;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(InverseNormal, KnownValues) {
  EXPECT_NEAR(inverse_normal(0.5), 0.0, 1e-15);
  EXPECT_NEAR(inverse_normal(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(inverse_normal(0.025), -1.959963984540054, 1e-12);
  EXPECT_NEAR(inverse_normal(0.8413447460685429), 1.0, 1e-12);
}

TEST(InverseNormal, RoundTripAcrossTails) {
  // above x = 5 the double p itself no longer resolves x to 1e-9
  for (double x = -9.0; x <= 5.0; x += 0.0137) {
    const double p = phi(x);
    EXPECT_NEAR(inverse_normal(p), x, 1e-9) << "x = " << x;
  }
  EXPECT_TRUE(std::isfinite(inverse_normal(0x1p-64)));
  EXPECT_THROW(inverse_normal(0.0), InvalidInput);
}

TEST(Lattice, OneDimensionalPoints) {
  auto r = korobov_rule(1, 2);
  std::vector<double> x(1);
  const double expect[] = {0.0, 0.25, 0.5, 0.75};
  for (std::uint64_t i = 0; i < 4; ++i) {
    r.point(i, x);
    EXPECT_EQ(x[0], expect[i]);
  }
}

TEST(Lattice, KorobovGenerator) {
  const auto r = korobov_rule(3, 10);
  EXPECT_EQ(r.n, 1024u);
  EXPECT_EQ(r.z[0], 1u);
  EXPECT_EQ(r.z[1], 76u);
  EXPECT_EQ(r.z[2], (76u * 76u) % 1024u);
}

TEST(Lattice, ShiftedSetIsRotationInvariant) {
  auto r = korobov_rule(3, 5);
  set_shift(r, 7);
  std::vector<std::vector<double>> a, b;
  std::vector<double> x(3);
  for (std::uint64_t i = 0; i < r.n; ++i) {
    r.point(i, x);
    a.push_back(x);
    r.point(i + 1, x);
    b.push_back(x);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(a[i][k], b[i][k], 1e-15);
}

TEST(Lattice, ConstantIntegratesToOne) {
  auto r = korobov_rule(4, 6);
  set_shift(r, 3);
  EXPECT_EQ(qmc_mean(r, Dist::normal, [](std::span<const double>) { return 1.0; }), 1.0);
  EXPECT_EQ(qmc_mean(r, Dist::uniform, [](std::span<const double>) { return 1.0; }), 1.0);
}

TEST(Lattice, BeatsMonteCarloOnSmoothIntegrand) {
  const double exact = std::sinh(std::sqrt(3.0)) / std::sqrt(3.0);
  auto f = [](std::span<const double> y) { return std::exp(y[0]); };
  auto r = korobov_rule(1, 10);
  set_shift(r, 5);
  const double eq = std::abs(qmc_mean(r, Dist::uniform, f) - exact);
  const double em = std::abs(mc_mean(1, 1024, Dist::uniform, 5, f) - exact);
  EXPECT_LE(eq, em);
}

TEST(Lattice, LoadsGeneratorFile) {
  const auto path = std::filesystem::temp_directory_path() / "ttuq_lattice_test.txt";
  {
    std::ofstream out(path);
    out << "1\n\n433461\n 315689\n9999\n";
  }
  const auto r = load_rule(path, 3, 10);
  EXPECT_EQ(r.z[0], 1u);
  EXPECT_EQ(r.z[1], 433461u % 1024u);
  EXPECT_EQ(r.z[2], 315689u % 1024u);
  EXPECT_THROW(load_rule(path, 5, 10), InvalidInput);
  {
    std::ofstream out(path);
    out << "1\nabc\n";
  }
  EXPECT_THROW(load_rule(path, 2, 4), InvalidInput);
  std::filesystem::remove(path);
}

TEST(MonteCarlo, ConstantCoefficientHasZeroError) {
  const auto m = constant_model(10.0);
  const auto r = mc_moments(m, 8, 2);
  EXPECT_NEAR(r.moments.values[0], -0.1970703125, 1e-12);
  EXPECT_NEAR(r.moments.values[1], 0.1970703125 * 0.1970703125, 1e-12);
  for (double e : r.std_errors) EXPECT_NEAR(e, 0.0, 1e-14);
}

TEST(MonteCarlo, SeedReproducesAndThreadsAgree) {
  stochastic::KleSpec s;
  const auto m = Model::build(s, 1, 4);
  const auto a = mc_moments(m, 32, 3, {.seed = 4, .parallel = true});
  const auto b = mc_moments(m, 32, 3, {.seed = 4, .parallel = false});
  const auto c = mc_moments(m, 32, 3, {.seed = 5, .parallel = true});
  for (std::size_t p = 0; p < 3; ++p) {
    EXPECT_EQ(a.moments.values[p], b.moments.values[p]);
    EXPECT_EQ(a.std_errors[p], b.std_errors[p]);
  }
  EXPECT_NE(a.moments.values[0], c.moments.values[0]);
}

TEST(MonteCarlo, RejectsSingleSample) {
  EXPECT_THROW(mc_moments(constant_model(1.0), 1, 1), InvalidInput);
}

TEST(MonteCarlo, SampleFailureNamesSample) {
  auto m = constant_model(-1.0);
  try {
    mc_moments(m, 4, 1, {.parallel = false});
    ADD_FAILURE() << "expected a solve error";
  } catch (const fem::SolveError& e) {
    EXPECT_NE(std::string(e.what()).find("mc sample 0"), std::string::npos) << e.what();
  }
}

TEST(Qmc, ConstantCoefficient) {
  const auto m = constant_model(3.0);
  auto r = korobov_rule(m.d, 3);
  set_shift(r, 1);
  const auto q = qmc_moments(m, r, 1);
  EXPECT_NEAR(q.values[0], -0.1970703125, 1e-12);
  EXPECT_THROW(qmc_moments(m, korobov_rule(m.d - 1, 3), 1), InvalidInput);
}

TEST(Qmc, SerialAndParallelAgree) {
  stochastic::KleSpec s;
  const auto m = Model::build(s, 1, 4);
  auto r = korobov_rule(m.d, 5);
  set_shift(r, 2);
  const auto a = qmc_moments(m, r, 2, {.parallel = true});
  const auto b = qmc_moments(m, r, 2, {.parallel = false});
  EXPECT_EQ(a.values, b.values);
}

TEST(MonteCarlo, FirstMomentAgreesWithTensorTrain) {
  stochastic::KleSpec s;
  const auto mesh = fem::Mesh::from_level(2);
  const Index d = stochastic::truncation_dim(s);
  const auto grid = stochastic::ParamGrid::build(s.dist, stochastic::anisotropic_sizes(7, s, d));
  stochastic::LogCoeffOptions co;
  co.rel_tol = 1e-4;
  const auto coeff = stochastic::coeff_log_tt(s, mesh, grid, co).tt;
  const fem::FemOperator op(mesh);
  const auto u = als::solve(op, coeff, als::lifted_rhs(op, coeff), {.rel_tol = 1e-4}).u;
  const auto tt = post::moments(post::spatial_qoi(u, fem::qoi_weights(mesh)), grid, 1);

  const auto m = Model::build(s, 2, d);
  const auto mc = mc_moments(m, 400, 1, {.seed = 3});
  EXPECT_LE(std::abs(mc.moments.values[0] - tt.values[0]), 3.0 * mc.std_errors[0])
      << "mc " << mc.moments.values[0] << " +- " << mc.std_errors[0] << ", tt " << tt.values[0];
}

TEST(Lattice, CbcBeatsDegenerateKorobov) {
  // 76 is even, so 76^k vanishes mod 2^m once 4^k divides 2^m
  const auto k = korobov_rule(9, 10);
  EXPECT_EQ(k.z[5], 0u);
  const auto c = cbc_rule(9, 10);
  for (auto z : c.z) EXPECT_EQ(z % 2, 1u);
  EXPECT_EQ(c.z[0], 1u);
  EXPECT_LT(worst_case_error2(c), 1e-2 * worst_case_error2(k));
  EXPECT_LT(worst_case_error2(cbc_rule(9, 11)), worst_case_error2(c));
}

TEST(Lattice, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ttuq_lattice_rt.txt";
  const auto c = cbc_rule(4, 8);
  save_rule(path, c);
  const auto r = load_rule(path, 4, 8);
  EXPECT_EQ(r.z, c.z);
  std::filesystem::remove(path);
}
