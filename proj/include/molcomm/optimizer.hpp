#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "molcomm/analysis.hpp"
#include "molcomm/channel.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/types.hpp"

namespace molcomm {

/// Modulation design problem: minimize the error bound over x1 subject to the two
/// K-L stopping-time constraints, ||x1||_2 <= P and x1 >= 0. ISI is maximal
/// (memory_depth past s1 symbols) and the channel is taken at tau = 0.
struct OptProblem {
  int samples = 20;
  int memory_depth = 5;
  ChannelParams channel;
  double alpha = 1e-3;
  double beta = 1e-3;
  int stop_time0 = 5;  // T0(eps)
  int stop_time1 = 5;  // T1(eps)
  double eps = 0.1;    // tail tolerance, reported only
  double power = 100.0;
  MuVariant mu_variant = MuVariant::printed;
  bool rate_constraints = true;

  WaldThresholds thresholds() const { return wald_thresholds(alpha, beta); }
  void validate() const;
};

struct P1Constraints {
  double c1 = 0.0;     // prop2_lhs(s1) - logB / T1
  double c0 = 0.0;     // prop2_lhs(s0) + logA / T0
  double power = 0.0;  // P - ||x1||_2

  bool feasible(double tol = 0.0) const { return c1 >= -tol && c0 >= -tol && power >= -tol; }
  double violation() const;
};

/// Cached bound inputs for repeated evaluation of one problem.
class P1Model {
 public:
  explicit P1Model(const OptProblem& problem);

  const OptProblem& problem() const { return problem_; }
  const BoundInputs& inputs() const { return inputs_; }

  double objective(const VectorXd& x1) const;
  double objective(const VectorXd& x1, double mu) const;
  P1Constraints constraints(const VectorXd& x1) const;

 private:
  OptProblem problem_;
  BoundInputs inputs_;
};

double p1_objective(const VectorXd& x1, const OptProblem& problem);
P1Constraints p1_constraints(const VectorXd& x1, const OptProblem& problem);

/// Euclidean projection onto {x >= 0, ||x||_2 <= power}.
VectorXd project_feasible(const VectorXd& x, double power);

/// Central differences with step 1e-5 * max(1, ||x||_inf).
template <typename F>
VectorXd numerical_gradient(const F& f, const VectorXd& x) {
  const double h = 1e-5 * std::max(1.0, x.cwiseAbs().maxCoeff());
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 10000;  // inner steps per outer stage
  int max_outer = 60;
  int restarts = 4;      // random starts in addition to the uniform one
  std::uint64_t seed = 20190501;
  int workers = 1;
  std::vector<VectorXd> warm_starts;  // appended after the default starts
};

struct OptResult {
  VectorXd x1_hat;
  double objective = 0.0;
  double slack0 = 0.0;
  double slack1 = 0.0;
  double norm = 0.0;
  double mu = 1.0;
  int iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
  double stationarity = 0.0;
  int restart = 0;
  TailResult tail0;
  TailResult tail1;
  DenominatorCheck denominators;
  std::string message;
};

OptResult solve_p1(const OptProblem& problem, const VectorXd& init, const SolverOptions& options = {});

struct MultiStartResult {
  OptResult best;
  std::vector<OptResult> runs;
  bool stable = true;  // converged objectives within 5% of the best
};

/// Uniform start (P / sqrt(N)) 1, options.restarts seeded random starts, then the
/// warm starts projected onto the feasible set.
std::vector<VectorXd> default_starts(const OptProblem& problem, const SolverOptions& options);

/// Lowest objective among runs that meet every constraint, ties to the lowest
/// restart index; least violation when none does.
MultiStartResult solve_p1_multistart(const OptProblem& problem, const SolverOptions& options = {});

}  // namespace molcomm
