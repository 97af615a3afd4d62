// SPDX-License-Identifier: Apache-2.0
#include "ttuq/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ttuq::config {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
  });
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e && std::isfinite(v);
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg), line(line) {}

Config Config::parse(const std::string& text, const std::string& source) {
  Config c;
  c.source_ = source;
  std::stringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(source, lineno, "invalid key '" + key + "'");
    if (value.empty()) throw ConfigError(source, lineno, "missing value for '" + key + "'");
    if (c.entries_.count(key))
      throw ConfigError(source, lineno,
                        "duplicate key '" + key + "' (first set on line " + std::to_string(c.entries_[key].line) + ")");
    c.entries_[key] = {value, lineno};
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = entries_.find(key);
  entries_[key] = {value, it == entries_.end() ? 0 : it->second.line};
}

int Config::line_of(const std::string& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

const Config::Entry* Config::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

void Config::fail(const Entry& e, const std::string& key, const std::string& msg) const {
  throw ConfigError(source_, e.line, "'" + key + "': " + msg);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v)) fail(*e, key, "expected a real number, got '" + e->value + "'");
  return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::int64_t v = 0;
  const char* b = e->value.data();
  const char* end = b + e->value.size();
  auto r = std::from_chars(b, end, v);
  if (r.ec != std::errc() || r.ptr != end) fail(*e, key, "expected an integer, got '" + e->value + "'");
  return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(*e, key, "expected true or false, got '" + e->value + "'");
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(e->value)) {
    double v = 0.0;
    if (!parse_double(item, v)) fail(*e, key, "expected a list of real numbers, got '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
  const Entry* e = find(key);
  return e ? split_list(e->value) : fallback;
}

void Config::check_unused() const {
  for (const auto& [key, e] : entries_)
    if (!used_.count(key)) throw ConfigError(source_, e.line, "unknown key '" + key + "'");
}

Method parse_method(const std::string& s) {
  if (s == "tt") return Method::tt;
  if (s == "mc") return Method::mc;
  if (s == "qmc") return Method::qmc;
  throw InvalidInput("unknown method '" + s + "' (expected tt, mc or qmc)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::tt: return "tt";
    case Method::mc: return "mc";
    case Method::qmc: return "qmc";
  }
  return "?";
}

int level_for_eps(double eps, double fit_a, double fit_b) {
  if (!(eps > 0.0) || !(fit_a > 0.0)) throw InvalidInput("level_for_eps: need eps > 0 and fit slope > 0");
  const double l = (-std::log2(eps) - fit_b) / fit_a;
  return std::max(1, static_cast<int>(std::ceil(l - 1e-12)));
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig x;
  // wrap value errors from enum parsers with the key's line
  auto with_line = [&](const std::string& key, auto&& fn) {
    try {
      return fn();
    } catch (const InvalidInput& e) {
      throw ConfigError(c.source(), c.line_of(key), "'" + key + "': " + e.what());
    }
  };
  x.eps = c.get_double("eps", x.eps);
  x.fit_a = c.get_double("sync.fit_a", x.fit_a);
  x.fit_b = c.get_double("sync.fit_b", x.fit_b);

  x.kle.nu = c.get_double("kle.nu", x.kle.nu);
  x.kle.sigma2 = c.get_double("kle.sigma2", x.kle.sigma2);
  x.kle.k0 = static_cast<int>(c.get_int("kle.k0", x.kle.k0));
  x.kle.form = with_line("kle.form", [&] { return stochastic::parse_form(c.get_string("kle.form", "log")); });
  x.kle.dist = with_line("kle.dist", [&] {
    return stochastic::parse_dist(c.get_string("kle.dist", x.kle.form == stochastic::Form::affine ? "uniform" : "normal"));
  });
  x.kle.affine_mean = c.get_double("kle.affine_mean", x.kle.affine_mean);
  x.kle.max_dim = c.get_int("kle.max_dim", x.kle.max_dim);
  // one eps drives truncation, TT tolerances and the level unless overridden
  x.kle.trunc_tol = c.get_double("kle.trunc_tol", x.eps);
  x.coeff_tol = c.get_double("coeff.rel_tol", x.eps);
  x.coeff_init = c.get_int("coeff.init_count", x.coeff_init);
  x.moment_tol = c.get_double("moments.rel_tol", x.moment_tol);
  x.level = static_cast<int>(c.get_int("level", level_for_eps(x.eps, x.fit_a, x.fit_b)));
  if (c.has("kle.constant")) x.constant = c.get_double("kle.constant", 1.0);

  x.n = c.get_int("n", x.n);
  x.d = c.get_int("d", x.d);
  x.mode = with_line("solver.mode", [&] { return als::parse_mode(c.get_string("solver.mode", "one_shot")); });
  x.enrich_rank = c.get_int("solver.enrich_rank", x.enrich_rank);
  x.max_sweeps = static_cast<int>(c.get_int("solver.max_sweeps", x.max_sweeps));
  x.S = c.get_int("S", x.S);
  x.runs = static_cast<int>(c.get_int("runs", x.runs));
  x.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<std::int64_t>(x.seed)));
  x.methods.clear();
  for (const auto& m : c.get_strings("methods", {"tt"})) x.methods.push_back(with_line("methods", [&] { return parse_method(m); }));
  x.mc_samples = c.get_int("mc.samples", x.mc_samples);
  x.qmc_m = static_cast<int>(c.get_int("qmc.m", x.qmc_m));
  x.lattice_path = c.get_string("qmc.vector", "");
  x.qmc_generator = c.get_string("qmc.generator", x.qmc_generator);
  x.out = c.get_string("out.csv", x.out.string());
  x.coeff_path = c.get_string("out.coeff", x.coeff_path.string());
  x.solution_path = c.get_string("out.solution", x.solution_path.string());
  x.pdf_path = c.get_string("out.pdf", x.pdf_path.string());
  x.pdf_points = c.get_int("pdf.points", x.pdf_points);
  x.qoi_average = c.get_bool("qoi.average", x.qoi_average);
  x.reference_path = c.get_string("reference", "");
  x.want_err = c.get_bool("err", !x.reference_path.empty());
  x.study_levels = c.get_doubles("study.levels", {});
  x.study_eps = c.get_doubles("study.eps", {});
  c.check_unused();
  try {
    x.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(c.source(), 0, e.what());
  }
  return x;
}

void ExperimentConfig::validate() const {
  if (!constant) kle.validate();
  if (constant && !(*constant > 0.0)) throw InvalidInput("kle.constant must be positive");
  if (level < 1 || level > 7) throw InvalidInput("level must lie in 1..7");
  if (n < 1) throw InvalidInput("n must be >= 1");
  if (d < 0) throw InvalidInput("d must be >= 0");
  for (double t : {eps, coeff_tol, moment_tol})
    if (!(t > 0.0 && t < 1.0)) throw InvalidInput("tolerances must lie in (0, 1)");
  if (S < 1) throw InvalidInput("S must be >= 1");
  if (runs < 1) throw InvalidInput("runs must be >= 1");
  if (methods.empty()) throw InvalidInput("methods must not be empty");
  if (mc_samples < 2) throw InvalidInput("mc.samples must be >= 2");
  if (qmc_m < 0 || qmc_m > 30) throw InvalidInput("qmc.m must lie in 0..30");
  if (qmc_generator != "korobov" && qmc_generator != "cbc") throw InvalidInput("qmc.generator must be korobov or cbc");
  if (pdf_points < 2) throw InvalidInput("pdf.points must be >= 2");
  if (want_err && reference_path.empty()) throw InvalidInput("err requested but no reference path given");
  for (double l : study_levels)
    if (l < 1 || l > 7 || l != std::floor(l)) throw InvalidInput("study.levels must be integers in 1..7");
  for (double e : study_eps)
    if (!(e > 0.0 && e < 1.0)) throw InvalidInput("study.eps entries must lie in (0, 1)");
  als::AlsOptions o;
  o.rel_tol = eps;
  o.mode = mode;
  o.enrich_rank = enrich_rank;
  o.max_sweeps = max_sweeps;
  o.validate();
}

Index ExperimentConfig::dim() const {
  if (d > 0) return d;
  if (constant) return 1;
  return stochastic::truncation_dim(kle);
}

std::vector<Index> ExperimentConfig::grid_sizes() const { return stochastic::anisotropic_sizes(n, kle, dim()); }

}  // namespace ttuq::config
