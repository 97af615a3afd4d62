// SPDX-License-Identifier: Apache-2.0
// ttuq command line driver.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include "ttuq/experiment.hpp"
#include "ttuq/log.hpp"

using namespace ttuq;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string method;
  std::string log_level;
};

config::ExperimentConfig load(const Args& a) {
  auto c = config::Config::load(a.config);
  if (a.seed) c.set("seed", std::to_string(*a.seed));
  return config::ExperimentConfig::from(c);
}

void apply_threads() {
  const char* env = std::getenv("TTUQ_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw InvalidInput(std::string("TTUQ_THREADS must be a positive integer, got '") + env + "'");
  omp_set_num_threads(static_cast<int>(std::min(n, static_cast<long>(omp_get_max_threads()))));
}

void print_row(const experiment::Row& r, Index S) {
  std::cout << experiment::csv_header(S) << "\n" << experiment::csv_line(r) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank stochastic collocation for elliptic PDEs with random coefficients"};
  app.require_subcommand(1);
  app.fallthrough();
  Args a;
  app.add_option("--config", a.config, "Experiment config file")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", a.seed, "Base seed, overrides the config");
  app.add_option("--out", a.out, "Output path, overrides the config");
  app.add_option("--log", a.log_level, "Log level: off, warn, info, debug");

  auto* build = app.add_subcommand("build-coeff", "Build the coefficient TT and write it as .ttb");
  auto* solve = app.add_subcommand("solve", "Solve for the stored coefficient and write the solution .ttb");
  auto* moments = app.add_subcommand("moments", "QoI moments of the stored solution as one CSV row");
  auto* pdf = app.add_subcommand("pdf", "Maximum-entropy PDF of the stored solution's QoI as (q, P) CSV");
  auto* baseline = app.add_subcommand("baseline", "Monte Carlo or lattice QMC moments");
  baseline->add_option("--method", a.method, "mc or qmc")->check(CLI::IsMember({"mc", "qmc"}));
  auto* study = app.add_subcommand("study", "Sweep levels and tolerances, appending rows");
  auto* run = app.add_subcommand("run", "Full pipeline for the configured methods and runs");
  run->add_option("--method", a.method, "Only this method")->check(CLI::IsMember({"tt", "mc", "qmc"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (!a.log_level.empty()) log::set_level(a.log_level);
    apply_threads();
    auto cfg = load(a);
    if (*build) {
      if (!a.out.empty()) cfg.coeff_path = a.out;
      experiment::cmd_build_coeff(cfg);
    } else if (*solve) {
      if (!a.out.empty()) cfg.solution_path = a.out;
      const auto rep = experiment::cmd_solve(cfg);
      std::cout << "sweeps " << rep.sweeps << ", det solves " << rep.det_solves << ", max rank " << rep.max_rank
                << "\n";
    } else if (*moments) {
      if (!a.out.empty()) cfg.out = a.out;
      const auto row = experiment::cmd_moments(cfg);
      experiment::write_rows(cfg.out, {row}, cfg.S, false);
      print_row(row, cfg.S);
    } else if (*pdf) {
      if (!a.out.empty()) cfg.pdf_path = a.out;
      const auto p = experiment::cmd_pdf(cfg);
      std::cout << "support [" << p.support.a << ", " << p.support.b << "], newton iterations " << p.newton_iters
                << ", residual " << p.residual << "\n";
    } else if (*baseline) {
      if (!a.out.empty()) cfg.out = a.out;
      const auto m = config::parse_method(a.method.empty() ? "mc" : a.method);
      experiment::write_rows(cfg.out, experiment::run_all(cfg, {m}), cfg.S, false);
    } else if (*study) {
      if (!a.out.empty()) cfg.out = a.out;
      experiment::write_rows(cfg.out, experiment::study(cfg), cfg.S, true);
    } else if (*run) {
      if (!a.out.empty()) cfg.out = a.out;
      const auto methods = a.method.empty() ? cfg.methods : std::vector<config::Method>{config::parse_method(a.method)};
      experiment::write_rows(cfg.out, experiment::run_all(cfg, methods), cfg.S, false);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
