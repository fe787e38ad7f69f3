#ifndef REGOPT_SOLVERS_HPP
#define REGOPT_SOLVERS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "regopt/models.hpp"
#include "regopt/objective.hpp"
#include "regopt/quasinewton.hpp"
#include "regopt/regularizers.hpp"

namespace regopt {

inline constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

enum class IterationStatus { very_successful, successful, unsuccessful };
enum class TerminationStatus { first_order, max_iter, max_time };

inline const char* to_string(IterationStatus s) {
  switch (s) {
    case IterationStatus::very_successful: return "very_successful";
    case IterationStatus::successful: return "successful";
    default: return "unsuccessful";
  }
}

inline const char* to_string(TerminationStatus s) {
  switch (s) {
    case TerminationStatus::first_order: return "first_order";
    case TerminationStatus::max_iter: return "max_iter";
    default: return "max_time";
  }
}

/// Algorithm constants and stopping tolerances.  Defaults follow the
/// machine-epsilon parameterization so the same settings scale across
/// floating-point formats:
///   theta1 = (1 + eps^(1/5))^-1, theta2 = 1/eps, eta1 = eps^(1/4),
///   eta2 = 0.9, sigma0 = eps^(1/3), eps_abs = eps_rel = eps^(3/10).
struct SolverOptions {
  double theta1 = 1.0 / (1.0 + std::pow(kMachineEps, 0.2));
  double theta2 = 1.0 / kMachineEps;
  double eta1 = std::pow(kMachineEps, 0.25);
  double eta2 = 0.9;
  double gamma1 = 3.0;
  double gamma2 = 3.0;
  double gamma3 = 1.0 / 3.0;
  double sigma0 = std::pow(kMachineEps, 1.0 / 3.0);
  double sigma_min = std::pow(kMachineEps, 2.0 / 3.0);
  double sigma_decrease_factor = 1.0 / 3.0;
  double sigma_increase_factor = 3.0;
  double eps_abs = std::pow(kMachineEps, 0.3);
  double eps_rel = std::pow(kMachineEps, 0.3);
  int max_iter = 1000;
  double max_time_s = 3600.0;
  int nonmonotone_memory = 0;  ///< q; 0 is the monotone algorithm
  int inner_max_iter = 100;    ///< subproblem iteration cap per outer iteration
  int lbfgs_memory = 5;

  /// Invoked once per outer iteration with the freshly recorded trace row.
  std::function<void(const struct TraceRow&)> iteration_callback;

  void validate() const {
    if (!(0.0 < theta1 && theta1 < 1.0 && 1.0 < theta2))
      throw std::invalid_argument("SolverOptions: need 0 < theta1 < 1 < theta2");
    if (!(0.0 < eta1 && eta1 <= eta2 && eta2 < 1.0))
      throw std::invalid_argument("SolverOptions: need 0 < eta1 <= eta2 < 1");
    if (!(0.0 < gamma3 && gamma3 <= 1.0 && 1.0 < gamma1 && gamma1 <= gamma2))
      throw std::invalid_argument("SolverOptions: need 0 < gamma3 <= 1 < gamma1 <= gamma2");
    if (!(0.0 < sigma_min && sigma_min <= sigma0))
      throw std::invalid_argument("SolverOptions: need 0 < sigma_min <= sigma0");
    if (!(sigma_decrease_factor >= gamma3 && sigma_decrease_factor <= 1.0))
      throw std::invalid_argument("SolverOptions: sigma_decrease_factor must lie in [gamma3, 1]");
    if (!(sigma_increase_factor >= gamma1 && sigma_increase_factor <= gamma2))
      throw std::invalid_argument("SolverOptions: sigma_increase_factor must lie in [gamma1, gamma2]");
    if (max_iter < 0 || inner_max_iter < 1 || lbfgs_memory < 1 || nonmonotone_memory < 0)
      throw std::invalid_argument("SolverOptions: bad iteration/memory limit");
  }
};

struct TraceRow {
  int k;
  double f_plus_h;  ///< objective at the iterate before the step
  double sigma;
  double nu;
  double measure;  ///< sqrt(xi_cp / nu)
  double rho;
  IterationStatus status;
};

/// Violation counts of the algorithm-law runtime monitors; every field is
/// expected to stay zero on consistent problems.
struct MonitorTally {
  long cauchy_decrease = 0;   ///< actual (phi+psi) decrease vs (1-theta1) xi_cp
  long xi_lower_bound = 0;    ///< xi_cp >= (1/2) nu^-1 ||s_cp||^2
  long step_norm_bound = 0;   ///< xi_cp >= (1/(2 theta2^2)) nu^-1 ||s||^2
  long sigma_interval = 0;    ///< sigma update stays in its classification interval
  long step_guard = 0;        ///< ||s|| <= theta2 ||s_cp|| after the reset

  long total() const {
    return cauchy_decrease + xi_lower_bound + step_norm_bound + sigma_interval + step_guard;
  }
  void merge(const MonitorTally& o) {
    cauchy_decrease += o.cauchy_decrease;
    xi_lower_bound += o.xi_lower_bound;
    step_norm_bound += o.step_norm_bound;
    sigma_interval += o.sigma_interval;
    step_guard += o.step_guard;
  }
};

/// Outcome of one solver run: final statistics, oracle tallies and the
/// per-iteration trace.
struct RunRecord {
  std::string solver;
  TerminationStatus status = TerminationStatus::max_iter;
  double final_f = 0.0;
  double final_h = 0.0;
  double final_fh = 0.0;
  double final_h_over_lambda = 0.0;
  double final_measure = 0.0;
  double delta_fh = std::numeric_limits<double>::quiet_NaN();  ///< vs best in the run set
  long n_f = 0;
  long n_grad = 0;
  long n_jprod = 0;
  long n_prox = 0;
  bool report_jprod = false;  ///< table reports #J instead of #grad
  long iterations = 0;
  long n_successful = 0;
  long n_unsuccessful = 0;
  double wall_time_s = 0.0;
  Eigen::VectorXd x;
  std::vector<TraceRow> trace;
  MonitorTally monitors;
  long curvature_clamps = 0;  ///< per-coordinate curvature floors applied
  std::string error;          ///< set by run_experiment when the solver threw
};

/// Absolute tolerance for the subproblem stationarity measure at outer
/// iteration k: 1e-3 at k = 0, then
/// min((xi_cp/nu)^(3/2), 1e-3 (xi_cp/nu)^(1/2)).
inline double subsolver_tolerance(double xi_cp, double nu, int k) {
  if (k == 0) return 1e-3;
  const double t = xi_cp / nu;
  return std::min(std::pow(t, 1.5), 1e-3 * std::sqrt(t));
}

/// Reference objective value for the nonmonotone acceptance test: the
/// maximum objective over the stored history (the q most recent successful
/// iterates, seeded with the starting point).
inline double nonmonotone_reference(const std::deque<double>& history) {
  if (history.empty()) throw std::invalid_argument("nonmonotone_reference: empty history");
  return *std::max_element(history.begin(), history.end());
}

enum class DiagonalKind { spectral, psb, andrei, dbfgs };

inline std::unique_ptr<DiagonalHessian> make_diagonal_model(DiagonalKind kind, Eigen::Index n) {
  switch (kind) {
    case DiagonalKind::spectral: return std::make_unique<SpectralHessian>(n);
    case DiagonalKind::psb: return std::make_unique<PsbDiagonalHessian>(n);
    case DiagonalKind::andrei: return std::make_unique<AndreiDiagonalHessian>(n);
    default: return std::make_unique<DbfgsDiagonalHessian>(n);
  }
}

/// Inner method run on the regularized quadratic model at each outer
/// iteration of R2N/LM.
struct SubsolverSpec {
  enum class Type { r2, r2dh };
  Type type = Type::r2;
  DiagonalKind kind = DiagonalKind::spectral;  ///< for Type::r2dh
  int nonmonotone_memory = 0;
};

namespace detail {

struct EngineConfig {
  std::string name;
  SolverOptions opts;
  HessianModel* B = nullptr;
  std::function<void(const Eigen::VectorXd&)> refresh;  ///< rebuild B at a new iterate
  std::function<Eigen::VectorXd(const ModelContext&, const CauchyResult&, int)> step;
  bool update_pairs = false;  ///< push (s, y) into B on successful iterations
  bool report_jprod = false;
};

/// Adaptive-regularization loop shared by every solver in the family:
/// refresh B, pick nu = theta1/(||B|| + sigma), take the Cauchy
/// (proximal-gradient) step, optionally improve it with the configured step
/// computer under the model-decrease guarantee, accept by the ratio test
/// and update sigma.
inline RunRecord solve(SmoothObjective& prob, const Regularizer& h, Eigen::VectorXd x,
                       EngineConfig cfg) {
  const SolverOptions& o = cfg.opts;
  o.validate();
  if (x.size() != prob.dim())
    throw std::invalid_argument(cfg.name + ": starting point has wrong dimension");
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&t_start] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  prob.reset_counters();
  h.reset_prox_evals();

  RunRecord rec;
  rec.solver = cfg.name;
  rec.report_jprod = cfg.report_jprod;

  double fx = prob.value(x);
  if (!std::isfinite(fx)) throw std::domain_error(cfg.name + ": f is not finite at x0");
  double hx = h.value(x);
  if (!std::isfinite(hx)) throw std::invalid_argument(cfg.name + ": h must be finite at x0");
  Eigen::VectorXd gx = prob.gradient(x);

  double sigma = o.sigma0;
  std::deque<double> history{fx + hx};
  const std::size_t history_cap = static_cast<std::size_t>(std::max(o.nonmonotone_memory, 1));

  double stop_threshold = kInf;
  bool threshold_set = false;
  double last_measure = kInf;
  bool moved = true;  // B refresh pending (covers k = 0)
  const double mtol = 1e-10;

  int k = 0;
  for (; k < o.max_iter; ++k) {
    if (elapsed() > o.max_time_s) {
      rec.status = TerminationStatus::max_time;
      break;
    }
    if (cfg.refresh && moved) cfg.refresh(x);
    moved = false;

    const double beta = cfg.B->norm_estimate();
    const double nu = o.theta1 / (beta + sigma);
    if (!(nu > 0.0) || !std::isfinite(nu))
      throw std::runtime_error(cfg.name + ": step length underflow (sigma overflow?)");

    const ModelContext ctx{x, fx, hx, gx, *cfg.B, h, sigma, nu, o.theta1};
    const CauchyResult cp = cauchy_step(ctx);
    const bool cp_finite = std::isfinite(cp.xi);
    const double measure = cp_finite ? stationarity_measure(cp.xi, nu) : kInf;
    last_measure = measure;
    if (cp_finite && !threshold_set) {
      stop_threshold = o.eps_abs + o.eps_rel * measure;
      threshold_set = true;
    }
    if (measure < stop_threshold) {
      rec.status = TerminationStatus::first_order;
      break;
    }

    Eigen::VectorXd s = cp.step;
    if (cfg.step && cp_finite) {
      s = cfg.step(ctx, cp, k);
      // Line 7 guarantee: the refined step may not degrade the model.
      if (!(model_value(ctx, s) <= model_value(ctx, cp.step))) s = cp.step;
    }
    const double norm_scp = cp.step.norm();
    if (s.norm() > o.theta2 * norm_scp) s = cp.step;  // Line 8 reset
    const double norm_s = s.norm();

    const double f_trial = prob.value(x + s);
    const double h_trial = h.value(x + s);
    const double fh_ref =
        o.nonmonotone_memory > 0 ? nonmonotone_reference(history) : fx + hx;
    const double phi_s = phi_value(ctx, s);
    const double num = fh_ref - (f_trial + h_trial);
    const double den = fh_ref - (phi_s + h_trial);

    double rho;
    IterationStatus status;
    bool accept;
    const double tiny = 1e-12 * (1.0 + std::abs(fx + hx));
    if (!std::isfinite(num) || !std::isfinite(den)) {
      // extended arithmetic: inf/inf := 0
      rho = 0.0;
      status = IterationStatus::unsuccessful;
      accept = false;
    } else if (std::abs(num) < tiny && std::abs(den) < tiny && num >= 0.0) {
      // 0/0 regime near convergence: harmless no-progress step
      rho = 1.0;
      status = IterationStatus::very_successful;
      accept = true;
    } else if (den <= 0.0) {
      rho = 0.0;
      status = IterationStatus::unsuccessful;
      accept = false;
    } else {
      rho = num / den;
      status = rho >= o.eta2 ? IterationStatus::very_successful
               : rho >= o.eta1 ? IterationStatus::successful
                               : IterationStatus::unsuccessful;
      accept = rho >= o.eta1;
    }

    // runtime monitors (skipped where the extended path makes them void)
    if (cp_finite) {
      const double xi_tol = mtol * (1.0 + std::abs(cp.xi));
      if (cp.xi + xi_tol < 0.5 / nu * norm_scp * norm_scp) ++rec.monitors.xi_lower_bound;
      if (cp.xi + xi_tol < 0.5 / (o.theta2 * o.theta2 * nu) * norm_s * norm_s)
        ++rec.monitors.step_norm_bound;
      if (std::isfinite(h_trial)) {
        const double decrease = (fx + hx) - (phi_s + h_trial);
        const double dec_tol = mtol * (1.0 + std::abs(fx + hx) + std::abs(cp.xi));
        if (decrease < (1.0 - o.theta1) * cp.xi - dec_tol) ++rec.monitors.cauchy_decrease;
      }
    }
    if (norm_s > o.theta2 * norm_scp * (1.0 + mtol)) ++rec.monitors.step_guard;

    const double sigma_old = sigma;
    switch (status) {
      case IterationStatus::very_successful:
        sigma = std::max(sigma * o.sigma_decrease_factor, o.sigma_min);
        break;
      case IterationStatus::successful:
        break;
      case IterationStatus::unsuccessful:
        sigma = sigma * o.sigma_increase_factor;
        break;
    }
    {
      const double lo = status == IterationStatus::very_successful ? o.gamma3 * sigma_old
                        : status == IterationStatus::successful    ? sigma_old
                                                                   : o.gamma1 * sigma_old;
      const double hi = status == IterationStatus::very_successful ? sigma_old
                        : status == IterationStatus::successful    ? o.gamma1 * sigma_old
                                                                   : o.gamma2 * sigma_old;
      const double slack = mtol * sigma_old;
      if (sigma < lo - slack || sigma > hi + slack) ++rec.monitors.sigma_interval;
    }

    rec.trace.push_back(TraceRow{k, fx + hx, sigma_old, nu, measure, rho, status});
    if (o.iteration_callback) o.iteration_callback(rec.trace.back());

    if (accept) {
      ++rec.n_successful;
      x += s;
      Eigen::VectorXd g_new = prob.gradient(x);
      if (cfg.update_pairs && norm_s > 0.0) cfg.B->update(s, g_new - gx);
      fx = f_trial;
      hx = h_trial;
      gx.swap(g_new);
      history.push_back(fx + hx);
      while (history.size() > history_cap) history.pop_front();
      moved = true;
    } else {
      ++rec.n_unsuccessful;
    }
  }

  rec.iterations = static_cast<long>(rec.trace.size());
  rec.final_f = fx;
  rec.final_h = hx;
  rec.final_fh = fx + hx;
  rec.final_h_over_lambda = h.weight() > 0.0 ? hx / h.weight() : hx;
  rec.final_measure = last_measure;
  rec.n_f = prob.counters().n_f;
  rec.n_grad = prob.counters().n_grad;
  rec.n_jprod = prob.counters().n_jprod;
  rec.n_prox = h.prox_evals();
  rec.wall_time_s = elapsed();
  rec.x = std::move(x);
  return rec;
}

inline SmoothObjective make_model_objective(const Eigen::VectorXd& g, const HessianModel& B,
                                            double sigma) {
  auto f = [&g, &B, sigma](const Eigen::VectorXd& s) {
    return g.dot(s) + 0.5 * s.dot(B.apply(s)) + 0.5 * sigma * s.squaredNorm();
  };
  auto grad = [&g, &B, sigma](const Eigen::VectorXd& s) {
    return Eigen::VectorXd(g + B.apply(s) + sigma * s);
  };
  return SmoothObjective(g.size(), std::move(f), std::move(grad));
}

}  // namespace detail

/// Proximal-gradient method with adaptive step size: the base algorithm with
/// B = 0 and s = s_cp.  sigma0 is pinned to theta1 so the first step length
/// is 1.
inline RunRecord r2_solve(SmoothObjective& prob, const Regularizer& h, const Eigen::VectorXd& x0,
                          SolverOptions opts = {}, std::string name = "r2") {
  opts.sigma0 = opts.theta1;
  if (opts.sigma_min > opts.sigma0) opts.sigma_min = opts.sigma0;
  ZeroHessian B(x0.size());
  detail::EngineConfig cfg;
  cfg.name = std::move(name);
  cfg.opts = std::move(opts);
  cfg.B = &B;
  return detail::solve(prob, h, x0, std::move(cfg));
}

/// Diagonal-Hessian solver: the base algorithm where the regularized
/// quadratic model is minimized in closed form.  For the spectral kind the
/// step is a single proximal evaluation with step length 1/(tau + sigma)
/// and h may be any prox-capable regularizer; the other kinds require a
/// separable h and use the per-coordinate shifted prox with weights
/// d_i + sigma, floored at a tiny positive value when an indefinite
/// diagonal would make a coordinate nonconvex.
inline RunRecord r2dh_solve(SmoothObjective& prob, const Regularizer& h, const Eigen::VectorXd& x0,
                            DiagonalKind kind, SolverOptions opts = {},
                            std::string name = "r2dh") {
  if (!h.separable() && kind != DiagonalKind::spectral)
    throw std::invalid_argument(name + ": non-separable regularizer needs the spectral kind");
  auto B = make_diagonal_model(kind, x0.size());
  long clamps = 0;
  detail::EngineConfig cfg;
  cfg.name = std::move(name);
  cfg.opts = std::move(opts);
  cfg.B = B.get();
  cfg.update_pairs = true;
  cfg.step = [kind, &B, &clamps](const ModelContext& ctx, const CauchyResult&,
                                 int) -> Eigen::VectorXd {
    if (kind == DiagonalKind::spectral) {
      const double tau = static_cast<const SpectralHessian*>(B.get())->factor();
      const double step_len = 1.0 / (tau + ctx.sigma);
      return ctx.h.prox(step_len, ctx.x - step_len * ctx.gx) - ctx.x;
    }
    const Eigen::VectorXd& d = *B->diagonal();
    Eigen::VectorXd dtilde(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double floor_i = 1e-12 * (1.0 + std::abs(d[i]));
      dtilde[i] = d[i] + ctx.sigma;
      if (dtilde[i] < floor_i) {
        dtilde[i] = floor_i;
        ++clamps;
      }
    }
    return ctx.h.shifted_prox_separable(ctx.x, ctx.gx, dtilde);
  };
  RunRecord rec = detail::solve(prob, h, x0, std::move(cfg));
  rec.curvature_clamps = clamps;
  return rec;
}

namespace detail {

/// Step computer running a full R2/R2DH solve on the regularized quadratic
/// model, warm-started at the Cauchy step.
inline std::function<Eigen::VectorXd(const ModelContext&, const CauchyResult&, int)>
make_inner_step(const SolverOptions& outer_opts, SubsolverSpec sub, MonitorTally* tally,
                long* clamps, std::string name) {
  return [outer_opts, sub, tally, clamps, name](const ModelContext& ctx, const CauchyResult& cp,
                                                int k) -> Eigen::VectorXd {
    SolverOptions io = outer_opts;
    io.eps_abs = subsolver_tolerance(cp.xi, ctx.nu, k);
    io.eps_rel = 0.0;
    io.max_iter = outer_opts.inner_max_iter;
    io.nonmonotone_memory = sub.nonmonotone_memory;
    io.sigma0 = std::pow(kMachineEps, 1.0 / 3.0);
    io.iteration_callback = nullptr;
    SmoothObjective model = make_model_objective(ctx.gx, ctx.B, ctx.sigma);
    ShiftedRegularizer shifted(ctx.h, ctx.x);
    try {
      RunRecord inner = sub.type == SubsolverSpec::Type::r2
                            ? r2_solve(model, shifted, cp.step, io)
                            : r2dh_solve(model, shifted, cp.step, sub.kind, io);
      tally->merge(inner.monitors);
      *clamps += inner.curvature_clamps;
      return inner.x;
    } catch (const std::exception& e) {
      throw std::runtime_error(name + ": subsolver failed at outer iteration " +
                               std::to_string(k) + ": " + e.what());
    }
  };
}

}  // namespace detail

/// Modified quasi-Newton method: the base algorithm with a general symmetric
/// model Hessian B (updated on successful iterations) and an iterative
/// subsolver for the step.
inline RunRecord r2n_solve(SmoothObjective& prob, const Regularizer& h, const Eigen::VectorXd& x0,
                           HessianModel& B, SubsolverSpec subsolver, SolverOptions opts = {},
                           std::string name = "r2n") {
  MonitorTally inner_tally;
  long inner_clamps = 0;
  detail::EngineConfig cfg;
  cfg.name = std::move(name);
  cfg.B = &B;
  cfg.update_pairs = true;
  cfg.step = detail::make_inner_step(opts, subsolver, &inner_tally, &inner_clamps, cfg.name);
  cfg.opts = std::move(opts);
  RunRecord rec = detail::solve(prob, h, x0, std::move(cfg));
  rec.monitors.merge(inner_tally);
  rec.curvature_clamps += inner_clamps;
  return rec;
}

/// Levenberg-Marquardt specialization for least-squares objectives:
/// B = J^T J with the Jacobian refreshed at every new iterate.  Jacobian
/// products replace gradient evaluations in reported statistics.
inline RunRecord lm_solve(SmoothObjective& prob, const Regularizer& h, const Eigen::VectorXd& x0,
                          SubsolverSpec subsolver, SolverOptions opts = {},
                          std::string name = "lm") {
  if (!prob.has_residual())
    throw std::invalid_argument(name + ": objective has no residual structure");
  GaussNewtonHessian B(prob.jacobian(x0));
  MonitorTally inner_tally;
  long inner_clamps = 0;
  detail::EngineConfig cfg;
  cfg.name = std::move(name);
  cfg.B = &B;
  cfg.refresh = [&prob, &B](const Eigen::VectorXd& x) { B.set_jacobian(prob.jacobian(x)); };
  cfg.report_jprod = true;
  cfg.step = detail::make_inner_step(opts, subsolver, &inner_tally, &inner_clamps, cfg.name);
  cfg.opts = std::move(opts);
  RunRecord rec = detail::solve(prob, h, x0, std::move(cfg));
  rec.monitors.merge(inner_tally);
  rec.curvature_clamps += inner_clamps;
  return rec;
}

}  // namespace regopt

#endif  // REGOPT_SOLVERS_HPP
