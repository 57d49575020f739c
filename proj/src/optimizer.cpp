#include "molcomm/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "molcomm/random.hpp"

namespace molcomm {

void OptProblem::validate() const {
  channel.validate();
  if (samples < 1) throw std::invalid_argument("OptProblem: N must be >= 1");
  if (memory_depth < 0) throw std::invalid_argument("OptProblem: negative memory depth");
  if (stop_time0 < 1 || stop_time0 > samples || stop_time1 < 1 || stop_time1 > samples)
    throw std::invalid_argument("OptProblem: desired stopping times must lie in [1, N]");
  if (!(power > 0.0)) throw std::invalid_argument("OptProblem: power budget must be positive");
  if (!(eps >= 0.0)) throw std::invalid_argument("OptProblem: eps must be non-negative");
  (void)thresholds();
}

double P1Constraints::violation() const { return std::max({0.0, -c1, -c0, -power}); }

namespace {

OptProblem validated(const OptProblem& problem) {
  problem.validate();
  OptProblem p = problem;
  p.channel = p.channel.receiver_view();
  return p;
}

}  // namespace

P1Model::P1Model(const OptProblem& problem)
    : problem_(validated(problem)),
      inputs_(problem_.channel, problem_.samples, problem_.memory_depth, problem_.thresholds(), problem_.mu_variant) {}

double P1Model::objective(const VectorXd& x1) const { return prop1_bound(x1, inputs_); }

double P1Model::objective(const VectorXd& x1, double mu) const { return prop1_bound(x1, inputs_, mu); }

P1Constraints P1Model::constraints(const VectorXd& x1) const {
  if (x1.size() != problem_.samples) throw std::invalid_argument("p1_constraints: x1 length must equal N");
  P1Constraints c;
  const WaldThresholds t = inputs_.thresholds();
  c.c1 = prop2_lhs(Symbol::s1, x1, problem_.stop_time1, inputs_) - t.logB / problem_.stop_time1;
  c.c0 = prop2_lhs(Symbol::s0, x1, problem_.stop_time0, inputs_) + t.logA / problem_.stop_time0;
  c.power = problem_.power - x1.norm();
  return c;
}

double p1_objective(const VectorXd& x1, const OptProblem& problem) { return P1Model(problem).objective(x1); }

P1Constraints p1_constraints(const VectorXd& x1, const OptProblem& problem) {
  return P1Model(problem).constraints(x1);
}

VectorXd project_feasible(const VectorXd& x, double power) {
  VectorXd out = x.cwiseMax(0.0);
  const double norm = out.norm();
  if (norm > power) out *= power / norm;
  return out;
}

namespace {

/// Rate constraints as a vector c(x) >= 0; empty when they are switched off.
Eigen::Vector2d rate_constraints(const P1Model& model, const VectorXd& x) {
  const P1Constraints c = model.constraints(x);
  return {c.c1, c.c0};
}

struct Lagrangian {
  const P1Model& model;
  VectorXd weights;
  Eigen::Vector2d multipliers;
  double penalty;

  double operator()(const VectorXd& x) const {
    double value = weights.dot(x);
    if (!model.problem().rate_constraints) return value;
    const Eigen::Vector2d c = rate_constraints(model, x);
    for (int i = 0; i < 2; ++i) {
      const double shifted = std::max(0.0, multipliers(i) - penalty * c(i));
      value += (shifted * shifted - multipliers(i) * multipliers(i)) / (2.0 * penalty);
    }
    return value;
  }
};

double projected_step_norm(const VectorXd& x, const VectorXd& g, double power) {
  return (x - project_feasible(x - g, power)).cwiseAbs().maxCoeff();
}

struct InnerResult {
  VectorXd x;
  int iterations = 0;
  double stationarity = 0.0;
};

/// Projected gradient with Barzilai-Borwein steps and Armijo backtracking.
InnerResult minimize_inner(const Lagrangian& lagrangian, VectorXd x, double power, double tol, int max_iter) {
  InnerResult out;
  double value = lagrangian(x);
  VectorXd g = numerical_gradient(lagrangian, x);
  double step = 1.0 / std::max(1.0, g.norm());
  for (int it = 0; it < max_iter; ++it) {
    out.stationarity = projected_step_norm(x, g, power);
    if (out.stationarity <= tol) break;
    VectorXd candidate;
    double candidate_value = 0.0;
    double trial = step;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      candidate = project_feasible(x - trial * g, power);
      candidate_value = lagrangian(candidate);
      if (candidate_value <= value + 1e-4 * g.dot(candidate - x)) break;
      trial *= 0.5;
    }
    const VectorXd s = candidate - x;
    if (s.cwiseAbs().maxCoeff() == 0.0) break;
    const VectorXd g_next = numerical_gradient(lagrangian, candidate);
    const VectorXd y = g_next - g;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : std::min(trial * 2.0, 1e10);
    x = candidate;
    value = candidate_value;
    g = g_next;
    out.iterations = it + 1;
  }
  out.stationarity = projected_step_norm(x, g, power);
  out.x = std::move(x);
  return out;
}

/// Smallest scaling of `direction` (within the power ball) that meets both rate
/// constraints, by bisection; the full-power point if none does.
VectorXd restore_feasibility(const P1Model& model, const VectorXd& direction, double power) {
  const double norm = direction.norm();
  if (!(norm > 0.0)) return VectorXd::Constant(direction.size(), power / std::sqrt(double(direction.size())));
  const VectorXd unit = direction / norm;
  if (!model.constraints(unit * power).feasible()) return unit * power;
  double lo = 0.0, hi = power;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (model.constraints(unit * mid).feasible() ? hi : lo) = mid;
  }
  return unit * hi;
}

void finalize(OptResult& r, const P1Model& model) {
  const P1Constraints c = model.constraints(r.x1_hat);
  r.objective = model.objective(r.x1_hat);
  r.mu = mu_factor(r.x1_hat, model.inputs()).value;
  r.slack0 = c.c0;
  r.slack1 = c.c1;
  r.norm = r.x1_hat.norm();
  const OptProblem& p = model.problem();
  r.tail0 = prop2_tail(Symbol::s0, r.x1_hat, p.stop_time0, p.eps, model.inputs());
  r.tail1 = prop2_tail(Symbol::s1, r.x1_hat, p.stop_time1, p.eps, model.inputs());
  r.denominators = denominator_assumption(r.x1_hat, model.inputs());
}

}  // namespace

OptResult solve_p1(const OptProblem& problem, const VectorXd& init, const SolverOptions& options) {
  const P1Model model(problem);
  const OptProblem& p = model.problem();
  if (init.size() != p.samples) throw std::invalid_argument("solve_p1: init length must equal N");

  const VectorXd start = project_feasible(init, p.power);
  const bool start_feasible = !p.rate_constraints || model.constraints(start).feasible(options.tol);

  Lagrangian lagrangian{model, VectorXd(), Eigen::Vector2d::Zero(), 100.0};
  VectorXd anchor = start;  // last iterate with a usable direction
  VectorXd x = start;
  double mu = mu_factor(x, model.inputs()).value;
  std::vector<double> mu_history{mu};
  bool mu_frozen = false;
  double previous_violation = std::numeric_limits<double>::infinity();

  OptResult result;
  result.x1_hat = x;
  bool have_feasible = false;
  double best_feasible_objective = std::numeric_limits<double>::infinity();

  for (int outer = 1; outer <= options.max_outer; ++outer) {
    lagrangian.weights = bound_weights(mu, model.inputs());
    const InnerResult inner = minimize_inner(lagrangian, x, p.power, options.tol, options.max_iter);
    x = inner.x;
    result.iterations += inner.iterations;
    // x = 0 is stationary for the penalty terms (the K-L gradients vanish there),
    // so an inner solve that lands on it cannot recover by itself.
    if (p.rate_constraints && x.cwiseAbs().maxCoeff() == 0.0) {
      x = restore_feasibility(model, anchor, p.power);
      lagrangian.penalty = std::min(lagrangian.penalty * 10.0, 1e9);
    }
    if (x.cwiseAbs().maxCoeff() > 0.0) anchor = x;
    result.outer_iterations = outer;

    double violation = 0.0;
    if (p.rate_constraints) {
      const Eigen::Vector2d c = rate_constraints(model, x);
      for (int i = 0; i < 2; ++i)
        lagrangian.multipliers(i) = std::max(0.0, lagrangian.multipliers(i) - lagrangian.penalty * c(i));
      violation = std::max({0.0, -c(0), -c(1)});
      if (violation > 0.25 * previous_violation) lagrangian.penalty = std::min(lagrangian.penalty * 10.0, 1e9);
      previous_violation = violation;
    }

    // mu is piecewise constant in x and can cycle between outer iterations; on a
    // revisit it is frozen at the largest value of the cycle.
    if (!mu_frozen) {
      const double next_mu = mu_factor(x, model.inputs()).value;
      const auto seen = std::find(mu_history.begin(), mu_history.end(), next_mu);
      if (next_mu != mu && seen != mu_history.end()) {
        mu = *std::max_element(seen, mu_history.end());
        mu_frozen = true;
      } else {
        mu = next_mu;
        mu_history.push_back(mu);
      }
    }
    const bool mu_settled = mu_frozen || mu_history.size() < 2 || mu_history.end()[-2] == mu;

    if (violation <= options.tol) {
      const double obj = model.objective(x);
      if (!have_feasible || obj < best_feasible_objective) {
        have_feasible = true;
        best_feasible_objective = obj;
        result.x1_hat = x;
      }
    } else if (!have_feasible) {
      result.x1_hat = x;
    }

    // Re-check stationarity with the updated multipliers and mu.
    lagrangian.weights = bound_weights(mu, model.inputs());
    result.stationarity = projected_step_norm(x, numerical_gradient(lagrangian, x), p.power);
    if (violation <= options.tol && mu_settled && result.stationarity <= options.tol) {
      result.x1_hat = x;
      result.converged = true;
      break;
    }
  }

  finalize(result, model);
  if (mu_frozen) result.message = "mu cycled and was frozen at " + std::to_string(mu);
  if (!result.converged) {
    result.message = "no KKT point within " + std::to_string(options.max_outer) + " outer iterations; best iterate returned";
  }
  if (start_feasible && model.objective(start) < result.objective) {
    result.x1_hat = start;
    finalize(result, model);
    result.message = "start point had a lower objective and was kept";
  }
  return result;
}

std::vector<VectorXd> default_starts(const OptProblem& problem, const SolverOptions& options) {
  std::vector<VectorXd> starts;
  starts.push_back(VectorXd::Constant(problem.samples, problem.power / std::sqrt(double(problem.samples))));
  for (int r = 1; r <= options.restarts; ++r) {
    CounterRng rng(derive_seed(options.seed, static_cast<std::uint64_t>(r)));
    VectorXd x(problem.samples);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform();
    const double radius = problem.power * (0.25 + 0.75 * rng.uniform());
    starts.push_back(x * (radius / std::max(x.norm(), 1e-300)));
  }
  for (const VectorXd& w : options.warm_starts) {
    if (w.size() != problem.samples) throw std::invalid_argument("default_starts: warm start length must equal N");
    starts.push_back(project_feasible(w, problem.power));
  }
  return starts;
}

MultiStartResult solve_p1_multistart(const OptProblem& problem, const SolverOptions& options) {
  const std::vector<VectorXd> starts = default_starts(problem, options);
  MultiStartResult out;
  out.runs.resize(starts.size());
  const std::size_t workers = static_cast<std::size_t>(std::max(1, options.workers));
  for (std::size_t begin = 0; begin < starts.size(); begin += workers) {
    std::vector<std::future<OptResult>> batch;
    for (std::size_t i = begin; i < std::min(starts.size(), begin + workers); ++i)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                 [&, i] { return solve_p1(problem, starts[i], options); }));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      out.runs[begin + i] = batch[i].get();
      out.runs[begin + i].restart = static_cast<int>(begin + i);
    }
  }

  auto feasible = [&](const OptResult& r) {
    return !problem.rate_constraints || (r.slack0 >= -options.tol && r.slack1 >= -options.tol);
  };
  auto score = [&](const OptResult& r) {
    return feasible(r) ? r.objective : std::max({0.0, -r.slack0, -r.slack1});
  };
  // Objectives within the solver tolerance count as equal; a converged run then wins.
  auto better = [&](const OptResult& a, const OptResult& b) {
    if (feasible(a) != feasible(b)) return feasible(a);
    const double sa = score(a), sb = score(b);
    if (std::fabs(sa - sb) > options.tol * std::max(1.0, std::fabs(sb))) return sa < sb;
    return a.converged && !b.converged;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < out.runs.size(); ++i)
    if (better(out.runs[i], out.runs[best])) best = i;
  out.best = out.runs[best];

  for (const auto& r : out.runs) {
    if (r.converged && out.best.objective > 0.0 && r.objective > 1.05 * out.best.objective) out.stable = false;
  }
  return out;
}

}  // namespace molcomm
