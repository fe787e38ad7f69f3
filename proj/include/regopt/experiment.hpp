#ifndef REGOPT_EXPERIMENT_HPP
#define REGOPT_EXPERIMENT_HPP

#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regopt/problems.hpp"
#include "regopt/solvers.hpp"

namespace regopt {

/// Configuration error carrying the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

inline const std::set<std::string>& solver_roster() {
  static const std::set<std::string> names{"r2",         "r2dh-spec", "r2dh-spec-nm", "r2dh-psb",
                                           "r2dh-andrei", "r2dh-dbfgs", "r2n-r2",      "r2n-r2dh",
                                           "lm-r2",      "lm-r2dh"};
  return names;
}

struct SolverChoice {
  std::string name;
  std::map<std::string, std::string> overrides;
};

/// Parsed experiment description: one problem instance, a list of solvers
/// with per-solver option overrides, and output settings.
struct ExperimentConfig {
  std::string family;
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  bool trace = false;
  std::vector<SolverChoice> solvers;
  std::map<std::string, std::string> problem_params;
  std::map<std::string, std::string> global_overrides;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + value + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + value + "'");
}

enum class ParamType { integer, real, text };

inline const std::map<std::string, ParamType>& problem_param_keys(const std::string& family) {
  static const std::map<std::string, std::map<std::string, ParamType>> keys{
      {"bpdn",
       {{"m", ParamType::integer},
        {"n", ParamType::integer},
        {"k_sparse", ParamType::integer},
        {"noise_std", ParamType::real}}},
      {"mc",
       {{"n", ParamType::integer},
        {"rank", ParamType::integer},
        {"c", ParamType::real},
        {"sigma_a", ParamType::real},
        {"sigma_b", ParamType::real},
        {"obs_fraction", ParamType::real},
        {"regularizer", ParamType::text},
        {"lambda", ParamType::real}}},
      {"svm",
       {{"m", ParamType::integer},
        {"n", ParamType::integer},
        {"lambda", ParamType::real},
        {"features", ParamType::text},
        {"labels", ParamType::text}}},
      {"denoise",
       {{"side", ParamType::integer},
        {"lambda", ParamType::real},
        {"kernel_radius", ParamType::integer},
        {"kernel_sigma", ParamType::real},
        {"noise_std", ParamType::real},
        {"image", ParamType::text}}}};
  return keys.at(family);
}

inline void apply_option(SolverOptions& opts, const std::string& key, const std::string& name,
                         const std::string& value) {
  if (name == "max_iter") opts.max_iter = static_cast<int>(parse_long(key, value));
  else if (name == "max_time_s") opts.max_time_s = parse_double(key, value);
  else if (name == "eps_abs") opts.eps_abs = parse_double(key, value);
  else if (name == "eps_rel") opts.eps_rel = parse_double(key, value);
  else if (name == "sigma0") opts.sigma0 = parse_double(key, value);
  else if (name == "sigma_min") opts.sigma_min = parse_double(key, value);
  else if (name == "theta1") opts.theta1 = parse_double(key, value);
  else if (name == "theta2") opts.theta2 = parse_double(key, value);
  else if (name == "eta1") opts.eta1 = parse_double(key, value);
  else if (name == "eta2") opts.eta2 = parse_double(key, value);
  else if (name == "nonmonotone_memory") opts.nonmonotone_memory = static_cast<int>(parse_long(key, value));
  else if (name == "inner_max_iter") opts.inner_max_iter = static_cast<int>(parse_long(key, value));
  else if (name == "lbfgs_memory") opts.lbfgs_memory = static_cast<int>(parse_long(key, value));
  else throw ConfigError(key, "unknown solver option '" + name + "'");
}

}  // namespace detail

/// Parse the flat key-value experiment grammar (one `key = value` pair per
/// line, '#' comments).  Every diagnostic names the offending key.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> kv;
  std::vector<std::string> order;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, "line " + std::to_string(lineno) + " is not of the form key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "empty key on line " + std::to_string(lineno));
    if (kv.count(key)) throw ConfigError(key, "duplicate key");
    kv[key] = value;
    order.push_back(key);
  }

  if (!kv.count("problem")) throw ConfigError("problem", "missing (one of bpdn, mc, svm, denoise)");
  cfg.family = kv.at("problem");
  if (cfg.family != "bpdn" && cfg.family != "mc" && cfg.family != "svm" && cfg.family != "denoise")
    throw ConfigError("problem", "unknown problem family '" + cfg.family + "'");

  if (!kv.count("solvers")) throw ConfigError("solvers", "missing (comma-separated solver names)");
  for (const std::string& name : detail::split(kv.at("solvers"), ',')) {
    if (!solver_roster().count(name)) throw ConfigError("solvers", "unknown solver '" + name + "'");
    cfg.solvers.push_back(SolverChoice{name, {}});
  }
  if (cfg.solvers.empty()) throw ConfigError("solvers", "at least one solver is required");

  for (const std::string& key : order) {
    const std::string& value = kv.at(key);
    if (key == "problem" || key == "solvers") continue;
    if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::parse_long(key, value));
    } else if (key == "out") {
      cfg.out_dir = value;
    } else if (key == "trace") {
      cfg.trace = detail::parse_bool(key, value);
    } else if (key.rfind("options.", 0) == 0) {
      SolverOptions probe;  // validate the option name and value now
      detail::apply_option(probe, key, key.substr(8), value);
      cfg.global_overrides[key.substr(8)] = value;
    } else if (key.rfind("solver.", 0) == 0) {
      const auto rest = key.substr(7);
      const auto dot = rest.find('.');
      if (dot == std::string::npos)
        throw ConfigError(key, "expected solver.<name>.<option>");
      const std::string sname = rest.substr(0, dot);
      const std::string oname = rest.substr(dot + 1);
      if (!solver_roster().count(sname)) throw ConfigError(key, "unknown solver '" + sname + "'");
      SolverOptions probe;
      detail::apply_option(probe, key, oname, value);
      bool found = false;
      for (auto& choice : cfg.solvers)
        if (choice.name == sname) {
          choice.overrides[oname] = value;
          found = true;
        }
      if (!found) throw ConfigError(key, "solver '" + sname + "' is not in the solvers list");
    } else {
      const auto dot = key.find('.');
      if (dot != std::string::npos && key.substr(0, dot) == cfg.family) {
        const std::string pname = key.substr(dot + 1);
        const auto& known = detail::problem_param_keys(cfg.family);
        const auto it = known.find(pname);
        if (it == known.end())
          throw ConfigError(key, "unknown parameter for problem '" + cfg.family + "'");
        if (it->second == detail::ParamType::integer) detail::parse_long(key, value);
        if (it->second == detail::ParamType::real) detail::parse_double(key, value);
        if (key == "mc.regularizer" && value != "rank" && value != "nuclear")
          throw ConfigError(key, "expected nuclear or rank, got '" + value + "'");
        cfg.problem_params[pname] = value;
      } else {
        throw ConfigError(key, "unknown key");
      }
    }
  }
  return cfg;
}

namespace detail {

inline std::string param(const ExperimentConfig& cfg, const std::string& name,
                         const std::string& fallback) {
  const auto it = cfg.problem_params.find(name);
  return it == cfg.problem_params.end() ? fallback : it->second;
}

}  // namespace detail

/// Instantiate the configured problem.  Deterministic: repeated calls with
/// the same config produce bit-identical instances, which is how each solver
/// receives its own pristine copy.
inline ProblemInstance make_instance(const ExperimentConfig& cfg) {
  using detail::param;
  using detail::parse_double;
  using detail::parse_long;
  if (cfg.family == "bpdn") {
    return bpdn_generate(parse_long("bpdn.m", param(cfg, "m", "200")),
                         parse_long("bpdn.n", param(cfg, "n", "512")),
                         parse_long("bpdn.k_sparse", param(cfg, "k_sparse", "10")),
                         parse_double("bpdn.noise_std", param(cfg, "noise_std", "0.1")), cfg.seed);
  }
  if (cfg.family == "mc") {
    const std::string reg = param(cfg, "regularizer", "nuclear");
    if (reg != "nuclear" && reg != "rank")
      throw ConfigError("mc.regularizer", "expected nuclear or rank, got '" + reg + "'");
    return mc_generate(parse_long("mc.n", param(cfg, "n", "24")),
                       parse_long("mc.rank", param(cfg, "rank", "4")),
                       parse_double("mc.c", param(cfg, "c", "0.1")),
                       parse_double("mc.sigma_a", param(cfg, "sigma_a", "0.1")),
                       parse_double("mc.sigma_b", param(cfg, "sigma_b", "1.0")),
                       parse_double("mc.obs_fraction", param(cfg, "obs_fraction", "0.5")),
                       reg == "rank" ? MatrixRegularizer::rank : MatrixRegularizer::nuclear,
                       parse_double("mc.lambda", param(cfg, "lambda", "0.1")), cfg.seed);
  }
  if (cfg.family == "svm") {
    const std::string features = param(cfg, "features", "");
    const std::string labels = param(cfg, "labels", "");
    const double lambda = parse_double("svm.lambda", param(cfg, "lambda", "0.1"));
    if (!features.empty() || !labels.empty()) {
      if (features.empty() || labels.empty())
        throw ConfigError("svm.features", "file source needs both svm.features and svm.labels");
      return svm_generate(features, labels, lambda, cfg.seed);
    }
    return svm_generate(parse_long("svm.m", param(cfg, "m", "200")),
                        parse_long("svm.n", param(cfg, "n", "50")), lambda, cfg.seed);
  }
  const Eigen::Index side = parse_long("denoise.side", param(cfg, "side", "16"));
  const double lambda = parse_double("denoise.lambda", param(cfg, "lambda", "1e-4"));
  const int radius = static_cast<int>(parse_long("denoise.kernel_radius", param(cfg, "kernel_radius", "1")));
  const double ksigma = parse_double("denoise.kernel_sigma", param(cfg, "kernel_sigma", "0.7"));
  const double noise = parse_double("denoise.noise_std", param(cfg, "noise_std", "0.05"));
  const std::string image = param(cfg, "image", "");
  if (!image.empty())
    return denoise_generate(side, lambda, radius, ksigma, noise, image, cfg.seed);
  return denoise_generate(side, lambda, radius, ksigma, noise, cfg.seed);
}

/// Run one named roster solver on an instance.
inline RunRecord run_solver(const std::string& name, ProblemInstance& inst, SolverOptions opts) {
  SmoothObjective& obj = inst.objective;
  const Regularizer& h = *inst.regularizer;
  const Eigen::VectorXd& x0 = inst.x0;
  if (name == "r2") return r2_solve(obj, h, x0, opts, name);
  if (name == "r2dh-spec") return r2dh_solve(obj, h, x0, DiagonalKind::spectral, opts, name);
  if (name == "r2dh-spec-nm") return r2dh_solve(obj, h, x0, DiagonalKind::spectral, opts, name);
  if (name == "r2dh-psb") return r2dh_solve(obj, h, x0, DiagonalKind::psb, opts, name);
  if (name == "r2dh-andrei") return r2dh_solve(obj, h, x0, DiagonalKind::andrei, opts, name);
  if (name == "r2dh-dbfgs") return r2dh_solve(obj, h, x0, DiagonalKind::dbfgs, opts, name);
  if (name == "r2n-r2" || name == "r2n-r2dh") {
    LbfgsHessian B(x0.size(), opts.lbfgs_memory);
    SubsolverSpec sub;
    if (name == "r2n-r2") {
      sub.type = SubsolverSpec::Type::r2;
    } else {
      sub.type = SubsolverSpec::Type::r2dh;
      sub.kind = DiagonalKind::spectral;
      sub.nonmonotone_memory = 5;
    }
    return r2n_solve(obj, h, x0, B, sub, opts, name);
  }
  if (name == "lm-r2" || name == "lm-r2dh") {
    SubsolverSpec sub;
    if (name == "lm-r2") {
      sub.type = SubsolverSpec::Type::r2;
    } else {
      sub.type = SubsolverSpec::Type::r2dh;
      sub.kind = DiagonalKind::spectral;
      sub.nonmonotone_memory = 5;
    }
    return lm_solve(obj, h, x0, sub, opts, name);
  }
  throw std::invalid_argument("unknown solver name: " + name);
}

/// Run every configured solver on its own copy of the instance.  Failures
/// are reported per row; the remaining solvers still run.  delta_fh is
/// measured against the best final objective across the set.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  std::vector<RunRecord> records;
  for (const SolverChoice& choice : cfg.solvers) {
    SolverOptions opts;
    if (choice.name == "r2dh-spec-nm") opts.nonmonotone_memory = 5;
    for (const auto& [oname, value] : cfg.global_overrides)
      detail::apply_option(opts, "options." + oname, oname, value);
    for (const auto& [oname, value] : choice.overrides)
      detail::apply_option(opts, "solver." + choice.name + "." + oname, oname, value);
    try {
      ProblemInstance inst = make_instance(cfg);
      records.push_back(run_solver(choice.name, inst, opts));
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.solver = choice.name;
      failed.error = e.what();
      records.push_back(std::move(failed));
    }
  }
  double best = kInf;
  for (const RunRecord& r : records)
    if (r.error.empty() && r.final_fh < best) best = r.final_fh;
  for (RunRecord& r : records)
    if (r.error.empty()) r.delta_fh = r.final_fh - best;
  return records;
}

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

}  // namespace detail

enum class TableFormat { csv, markdown };

/// Statistics table over a set of runs.  Scalar columns use scientific
/// notation with 3 significant digits; CSV uses comma separators, a header
/// row and LF line endings.
inline std::string emit_table(const std::vector<RunRecord>& records, TableFormat format) {
  if (records.empty()) throw std::invalid_argument("emit_table: no records");
  const char* headers[] = {"Solver",     "f",     "h/lambda",        "Delta_f_plus_h",
                           "sqrt_xi_over_nu", "num_f", "num_grad_or_J", "num_prox",
                           "time_s"};
  std::vector<std::vector<std::string>> cells;
  for (const RunRecord& r : records) {
    std::vector<std::string> row;
    row.push_back(r.solver);
    if (!r.error.empty()) {
      row.insert(row.end(), {"nan", "nan", "nan", "nan", "0", "0", "0", "nan"});
    } else {
      row.push_back(detail::sci(r.final_f));
      row.push_back(detail::sci(r.final_h_over_lambda));
      row.push_back(detail::sci(r.delta_fh));
      row.push_back(detail::sci(r.final_measure));
      row.push_back(std::to_string(r.n_f));
      row.push_back(std::to_string(r.report_jprod ? r.n_jprod : r.n_grad));
      row.push_back(std::to_string(r.n_prox));
      row.push_back(detail::sci(r.wall_time_s));
    }
    cells.push_back(std::move(row));
  }
  std::string out;
  if (format == TableFormat::csv) {
    for (int c = 0; c < 9; ++c) out += std::string(c ? "," : "") + headers[c];
    out += "\n";
    for (const auto& row : cells) {
      for (int c = 0; c < 9; ++c) out += (c ? "," : "") + row[static_cast<std::size_t>(c)];
      out += "\n";
    }
  } else {
    out += "|";
    for (const char* head : headers) out += std::string(" ") + head + " |";
    out += "\n|";
    for (int c = 0; c < 9; ++c) out += " --- |";
    out += "\n";
    for (const auto& row : cells) {
      out += "|";
      for (const auto& cell : row) out += " " + cell + " |";
      out += "\n";
    }
  }
  return out;
}

/// Per-iteration trace of one run as CSV (k, f_plus_h, sigma, nu, measure,
/// rho, status), one row per outer iteration.
inline std::string emit_trace(const RunRecord& record) {
  if (!record.error.empty())
    throw std::invalid_argument("emit_trace: no trace, solver failed: " + record.error);
  std::string out = "k,f_plus_h,sigma,nu,measure,rho,status\n";
  char buf[160];
  for (const TraceRow& row : record.trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.9e,%.9e,%.9e,%.9e,%.9e,%s\n", row.k, row.f_plus_h,
                  row.sigma, row.nu, row.measure, row.rho, to_string(row.status));
    out += buf;
  }
  return out;
}

}  // namespace regopt

#endif  // REGOPT_EXPERIMENT_HPP
