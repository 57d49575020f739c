#include "molcomm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "molcomm/special.hpp"

namespace molcomm {

BoundInputs::BoundInputs(const ChannelParams& channel, int samples, int memory_depth,
                         const WaldThresholds& thresholds, MuVariant variant)
    : channel_(channel), samples_(samples), memory_depth_(memory_depth), thresholds_(thresholds), variant_(variant) {
  channel_.validate();
  if (samples < 1) throw std::invalid_argument("BoundInputs: N must be >= 1");
  if (memory_depth < 0) throw std::invalid_argument("BoundInputs: negative memory depth");
  noise_ = channel_.noise_mean();
  // Long enough for the operators and for tail sums out to the default horizon.
  taps_ = tap_vector(samples * (memory_depth + 1) + default_tail_horizon(), channel_);

  const int n = samples;
  current_ = MatrixXd::Zero(n, n);
  isi_ = MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    for (int slot = 1; slot <= n; ++slot) {
      if (slot <= k) current_(k - 1, slot - 1) = taps_[k - slot + 1];
      double sum = 0.0;
      for (int b = 1; b <= memory_depth; ++b) sum += taps_[b * n + k - slot + 1];
      isi_(k - 1, slot - 1) = sum;
    }
  }
}

double kl_poisson(double la, double lb) {
  if (!(la > 0.0) || !(lb > 0.0)) throw std::invalid_argument("kl_poisson: means must be positive");
  return la * std::log(la / lb) + lb - la;
}

double maximal_isi_mean(const VectorXd& x1, int k, const BoundInputs& inputs, Symbol j) {
  const int n = inputs.samples();
  if (x1.size() != n) throw std::invalid_argument("maximal_isi_mean: x1 length must equal N");
  if (k < 1) throw std::invalid_argument("maximal_isi_mean: sample index must be >= 1");
  const int copies = inputs.memory_depth();
  VectorXd history = VectorXd::Zero(copies * n + k);
  for (int b = 0; b < copies; ++b) history.segment(b * n, n) = x1;
  if (j == Symbol::s1) {
    const int own = std::min(k, n);
    history.segment(copies * n, own) = x1.head(own);
  }
  if (inputs.taps().size() >= history.size()) return mean_rate_at(history, inputs.taps(), inputs.channel());
  return mean_rate_at(history, tap_vector(static_cast<int>(history.size()), inputs.channel()), inputs.channel());
}

HypothesisMeans maximal_isi_means(const VectorXd& x1, const BoundInputs& inputs) {
  if (x1.size() != inputs.samples()) throw std::invalid_argument("maximal_isi_means: x1 length must equal N");
  HypothesisMeans m;
  m.s0 = (inputs.isi_operator() * x1).array() + inputs.noise();
  m.s1 = m.s0 + inputs.current_operator() * x1;
  return m;
}

namespace {

struct MeanPair {
  double s1;
  double s0;
};

MeanPair means_at(const VectorXd& x1, int k, const BoundInputs& inputs, const HypothesisMeans& within) {
  if (k <= inputs.samples()) return {within.s1(k - 1), within.s0(k - 1)};
  return {maximal_isi_mean(x1, k, inputs, Symbol::s1), maximal_isi_mean(x1, k, inputs, Symbol::s0)};
}

double directed_kl(Symbol j, const MeanPair& m) {
  return j == Symbol::s1 ? kl_poisson(m.s1, m.s0) : kl_poisson(m.s0, m.s1);
}

}  // namespace

MuResult mu_factor(const VectorXd& x1, const BoundInputs& inputs) {
  if (x1.size() != inputs.samples()) throw std::invalid_argument("mu_factor: x1 length must equal N");
  MuResult out;
  const double first = x1(0);
  if (!(first > 0.0)) {
    out.degenerate = true;
    out.value = 1.0;
    return out;
  }
  const double pi1 = inputs.taps()[1];
  const double isi1 = inputs.isi_operator().row(0).dot(x1);
  const double base = inputs.noise() + isi1;
  const bool printed = inputs.mu_variant() == MuVariant::printed;
  const double numerator = printed ? first : pi1 * first;
  const double shift = printed ? 2.0 * pi1 * first : pi1 * first;

  if (!(base > 0.0)) {
    // Infinite log ratio: the interval collapses to (0, 0).
    out.value = 0.0;
    return out;
  }
  const double denominator = std::log1p(numerator / base);
  out.lower = (inputs.thresholds().logA + shift) / denominator;
  out.upper = (inputs.thresholds().logB + shift) / denominator;

  constexpr double cap = 1e12;
  const auto lowest = static_cast<Count>(std::max(std::floor(std::min(out.lower, cap)) + 1.0, 0.0));
  const auto highest = static_cast<Count>(std::ceil(std::min(out.upper, cap)) - 1.0);
  if (highest < lowest) {
    out.value = 0.0;
    return out;
  }
  const double mass = poisson_cdf(highest, base) - poisson_cdf(lowest - 1, base);
  out.value = std::clamp(mass, 0.0, 1.0);
  return out;
}

VectorXd bound_weights(double mu, const BoundInputs& inputs) {
  const int n = inputs.samples();
  const VectorXd& taps = inputs.taps().taps;
  VectorXd partial(n);
  double running = 0.0;
  for (int i = 0; i < n; ++i) partial(i) = (running += taps(i));
  VectorXd w(n);
  w(0) = taps(0) + mu * (partial(n - 1) - taps(0));
  for (int k = 1; k < n; ++k) w(k) = mu * partial(n - k - 1);
  return w;
}

double prop1_bound(const VectorXd& x1, const BoundInputs& inputs, double mu) {
  if (x1.size() != inputs.samples()) throw std::invalid_argument("prop1_bound: x1 length must equal N");
  return bound_weights(mu, inputs).dot(x1);
}

double prop1_bound(const VectorXd& x1, const BoundInputs& inputs) {
  if ((x1.array() < 0.0).any()) throw std::invalid_argument("prop1_bound: x1 must be non-negative");
  return prop1_bound(x1, inputs, mu_factor(x1, inputs).value);
}

BoundTerms bound_terms(const VectorXd& x1, const BoundInputs& inputs) {
  const int n = inputs.samples();
  const HypothesisMeans m = maximal_isi_means(x1, inputs);
  BoundTerms t;
  t.log_ratio = (m.s1.array() / m.s0.array()).log();
  VectorXd partial(n);
  double running = 0.0;
  for (int i = 0; i < n; ++i) partial(i) = (running += inputs.taps()[i + 1]);
  t.drift.resize(n);
  for (int k = 1; k <= n; ++k) {
    double g = 0.0;
    for (int slot = 1; slot <= k; ++slot) g += x1(slot - 1) * partial(k - slot);
    t.drift(k - 1) = g;
  }
  t.lower = t.drift.array() + inputs.thresholds().logA;
  t.upper = t.drift.array() + inputs.thresholds().logB;
  return t;
}

DenominatorCheck denominator_assumption(const VectorXd& x1, const BoundInputs& inputs) {
  const BoundTerms t = bound_terms(x1, inputs);
  double smallest = inputs.thresholds().logB + t.drift(0);
  for (Eigen::Index k = 1; k < t.drift.size(); ++k) smallest = std::min(smallest, t.drift(k) - t.drift(k - 1));
  return {smallest >= 1.0, smallest};
}

double prop2_lhs(Symbol j, const VectorXd& x1, int stop_time, const BoundInputs& inputs) {
  if (stop_time < 1) throw std::invalid_argument("prop2_lhs: stopping time must be >= 1");
  const HypothesisMeans within = maximal_isi_means(x1, inputs);
  double sum = 0.0;
  for (int k = 1; k <= stop_time; ++k) sum += directed_kl(j, means_at(x1, k, inputs, within)) / k;
  return sum;
}

TailResult prop2_tail(Symbol j, const VectorXd& x1, int stop_time, double eps, const BoundInputs& inputs,
                      int horizon) {
  if (horizon <= 0) horizon = inputs.default_tail_horizon();
  if (horizon <= stop_time) throw std::invalid_argument("prop2_tail: horizon must exceed the stopping time");
  const HypothesisMeans within = maximal_isi_means(x1, inputs);
  TailResult out;
  out.horizon = horizon;
  for (int k = stop_time + 1; k <= horizon; ++k) {
    const double term = directed_kl(j, means_at(x1, k, inputs, within)) / k;
    out.value += term;
    out.last_term = term;
  }
  out.satisfied = out.value <= eps;
  return out;
}

}  // namespace molcomm
