// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttuq/als_cross.hpp"
#include "ttuq/stochastic.hpp"

namespace ttuq::config {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& source, int line, const std::string& msg);
  int line;
};

// Flat "key = value" text. '#' starts a comment; keys may carry dotted prefixes (kle.nu).
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  // 0 when absent or set programmatically
  int line_of(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const;

  // throws on the first key never read through a getter
  void check_unused() const;
  const std::string& source() const { return source_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& key, const std::string& msg) const;

  std::string source_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

enum class Method { tt, mc, qmc };
Method parse_method(const std::string& s);
std::string to_string(Method m);

struct ExperimentConfig {
  stochastic::KleSpec kle;
  // nodal constant coefficient in place of the KLE field when set
  std::optional<double> constant;
  int level = 2;
  Index n = 7;
  Index d = 0;  // 0: truncation dimension of kle
  double eps = 1e-4;
  double coeff_tol = 1e-4;
  // raw moments must resolve the QoI variance, so this stays far below eps
  double moment_tol = 1e-10;
  Index coeff_init = 800;
  als::Mode mode = als::Mode::one_shot;
  Index enrich_rank = 4;
  int max_sweeps = 20;
  Index S = 4;
  int runs = 16;
  std::uint64_t seed = 1;
  std::vector<Method> methods{Method::tt};
  Index mc_samples = 1000;
  int qmc_m = 10;
  // generator when no vector file is given: korobov (a = 76) or cbc
  std::string qmc_generator = "korobov";
  std::filesystem::path lattice_path;
  std::filesystem::path out = "results.csv";
  std::filesystem::path coeff_path = "coeff.ttb";
  std::filesystem::path solution_path = "solution.ttb";
  std::filesystem::path pdf_path = "pdf.csv";
  std::filesystem::path reference_path;
  bool want_err = false;
  Index pdf_points = 512;
  // QoI as the subdomain mean instead of the integral
  bool qoi_average = false;
  std::vector<double> study_levels;
  std::vector<double> study_eps;
  // level from eps through err(l) = 2^(-fit_a l - fit_b)
  double fit_a = 2.034, fit_b = 5.579;

  static ExperimentConfig from(const Config& c);
  void validate() const;
  std::vector<Index> grid_sizes() const;
  Index dim() const;
};

// Smallest level whose fitted spatial error is at most eps, at least 1.
int level_for_eps(double eps, double fit_a, double fit_b);

}  // namespace ttuq::config
