#pragma once

#include "molcomm/channel.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/types.hpp"

namespace molcomm {

/// Which first-sample interval defines mu.
enum class MuVariant {
  printed,     // shift 2*pi1*x_{1|1}, log ratio over bare x_{1|1}
  derivation,  // shift g_1 = pi1*x_{1|1}, log ratio over pi1*x_{1|1}
};

/// Everything the error and stopping-time bounds need besides x1. The maximal-ISI
/// means are linear in x1, so they are held as two N x N operators:
///   lambda_{.|1} = (current + isi) x1 + n0,   lambda_{.|0} = isi x1 + n0.
class BoundInputs {
 public:
  BoundInputs(const ChannelParams& channel, int samples, int memory_depth, const WaldThresholds& thresholds,
              MuVariant variant = MuVariant::printed);

  int samples() const { return samples_; }
  int memory_depth() const { return memory_depth_; }
  double noise() const { return noise_; }
  const TapVector& taps() const { return taps_; }
  const WaldThresholds& thresholds() const { return thresholds_; }
  MuVariant mu_variant() const { return variant_; }
  const ChannelParams& channel() const { return channel_; }

  const MatrixXd& current_operator() const { return current_; }
  const MatrixXd& isi_operator() const { return isi_; }

  /// Horizon used for the stopping-time tail sums when none is given: N (B_mem + 2).
  int default_tail_horizon() const { return samples_ * (memory_depth_ + 2); }

 private:
  ChannelParams channel_;
  int samples_;
  int memory_depth_;
  WaldThresholds thresholds_;
  MuVariant variant_;
  double noise_;
  TapVector taps_;
  MatrixXd current_;
  MatrixXd isi_;
};

/// K-L divergence D(Poi(la) || Poi(lb)).
double kl_poisson(double la, double lb);

/// lambda_bar_{k|j}(x1) by explicit convolution: B_mem copies of x1, then x1(1:k)
/// (j = 1) or zeros (j = 0). Samples past N continue with zero releases.
double maximal_isi_mean(const VectorXd& x1, int k, const BoundInputs& inputs, Symbol j);

/// All N maximal-ISI means for both hypotheses via the precomputed operators.
HypothesisMeans maximal_isi_means(const VectorXd& x1, const BoundInputs& inputs);

struct MuResult {
  double value = 1.0;
  double lower = 0.0;  // open interval on y1
  double upper = 0.0;
  bool degenerate = false;  // x_{1|1} = 0: no first-sample information, mu := 1
};

/// mu = P[lower < y1 < upper] with y1 ~ Poi(lambda_bar_{1|0}).
MuResult mu_factor(const VectorXd& x1, const BoundInputs& inputs);

/// Linear weights of the bound for a fixed mu: bound = weights . x1.
VectorXd bound_weights(double mu, const BoundInputs& inputs);

double prop1_bound(const VectorXd& x1, const BoundInputs& inputs);
double prop1_bound(const VectorXd& x1, const BoundInputs& inputs, double mu);

/// Per-sample quantities of the error-probability derivation.
struct BoundTerms {
  VectorXd log_ratio;  // alpha_k
  VectorXd drift;      // g_k
  VectorXd lower;      // c_k^A
  VectorXd upper;      // c_k^B
};

BoundTerms bound_terms(const VectorXd& x1, const BoundInputs& inputs);

/// Whether the denominators logB + g_1 and g_k - g_{k-1} are all >= 1, the
/// assumption behind the final simplification of the bound.
struct DenominatorCheck {
  bool holds = false;
  double smallest = 0.0;
};

DenominatorCheck denominator_assumption(const VectorXd& x1, const BoundInputs& inputs);

/// sum_{k=1}^{T} (1/k) D(p_{k|j} || p_{k|1-j}).
double prop2_lhs(Symbol j, const VectorXd& x1, int stop_time, const BoundInputs& inputs);

struct TailResult {
  double value = 0.0;
  double last_term = 0.0;
  int horizon = 0;
  bool satisfied = false;
};

/// sum_{k=T+1}^{horizon} (1/k) D(p_{k|j} || p_{k|1-j}) tested against eps.
/// horizon <= 0 selects inputs.default_tail_horizon().
TailResult prop2_tail(Symbol j, const VectorXd& x1, int stop_time, double eps, const BoundInputs& inputs,
                      int horizon = 0);

}  // namespace molcomm
