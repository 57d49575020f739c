#include "molcomm/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace molcomm {

WaldThresholds wald_thresholds(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("wald_thresholds: alpha and beta must lie in (0, 1)");
  WaldThresholds t;
  t.A = beta / (1.0 - alpha);
  t.B = (1.0 - beta) / alpha;
  t.logA = std::log(beta) - std::log1p(-alpha);
  t.logB = std::log1p(-beta) - std::log(alpha);
  return t;
}

double llr_increment(Count y, double lambda1, double lambda0) {
  if (!(lambda1 > 0.0) || !(lambda0 > 0.0))
    throw std::invalid_argument("llr_increment: means must be positive (is the noise floor missing?)");
  if (y < 0) throw std::invalid_argument("llr_increment: negative count");
  return static_cast<double>(y) * std::log(lambda1 / lambda0) - (lambda1 - lambda0);
}

DecisionMemory::DecisionMemory(int depth) : ring_(static_cast<std::size_t>(std::max(depth, 0))), depth_(depth) {
  if (depth < 0) throw std::invalid_argument("DecisionMemory: negative depth");
}

Symbol DecisionMemory::operator[](int b) const {
  if (b < 0 || b >= size_) throw std::out_of_range("DecisionMemory: index beyond stored decisions");
  const int slot = (head_ - 1 - b + depth_) % depth_;
  return ring_[static_cast<std::size_t>(slot)];
}

void DecisionMemory::push(Symbol s) {
  if (depth_ == 0) return;
  ring_[static_cast<std::size_t>(head_)] = s;
  head_ = (head_ + 1) % depth_;
  size_ = std::min(size_ + 1, depth_);
}

void DecisionMemory::clear() {
  head_ = 0;
  size_ = 0;
}

double estimate_isi(int k, const DecisionMemory& memory, const Modulation& modulation, const TapVector& taps) {
  const int n = modulation.samples();
  if (k < 1 || k > n) throw std::invalid_argument("estimate_isi: sample index outside the symbol window");
  if (memory.empty()) return 0.0;
  // [x^(B); ...; x^(1); 0(1:k)], oldest first.
  const int remembered = memory.size();
  VectorXd history = VectorXd::Zero(remembered * n + k);
  for (int b = 0; b < remembered; ++b) {
    if (memory[b] == Symbol::s1) history.segment((remembered - 1 - b) * n, n) = modulation.x1;
  }
  ChannelParams noiseless;
  noiseless.lambda0 = 0.0;
  return mean_rate_at(history, taps, noiseless);
}

ReceiverModel::ReceiverModel(const Modulation& modulation, const ChannelParams& channel, int memory_depth)
    : modulation_(modulation), memory_depth_(memory_depth) {
  modulation_.validate();
  if (memory_depth < 0) throw std::invalid_argument("ReceiverModel: negative memory depth");
  const ChannelParams rx = channel.receiver_view();
  rx.validate();
  taps_ = tap_vector((memory_depth + 1) * modulation_.samples(), rx);
  response_ = symbol_response(modulation_.x1, taps_, memory_depth + 1);
  noise_ = rx.noise_mean();
}

VectorXd ReceiverModel::isi(const DecisionMemory& memory) const {
  VectorXd out = VectorXd::Zero(samples());
  const int used = std::min(memory.size(), memory_depth_);
  for (int b = 0; b < used; ++b) {
    if (memory[b] == Symbol::s1) out += response_.col(b + 1);
  }
  return out;
}

HypothesisMeans ReceiverModel::means(const DecisionMemory& memory) const {
  HypothesisMeans m;
  m.s0 = (isi(memory).array() + noise_).max(kMeanFloor);
  m.s1 = (m.s0.array() + current().array()).max(kMeanFloor);
  return m;
}

DetectorOutcome sequential_test(std::span<const Count> samples, const VectorXd& lambda1, const VectorXd& lambda0,
                                const WaldThresholds& thresholds, TruncationMode mode) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 1 || lambda1.size() != n || lambda0.size() != n)
    throw std::invalid_argument("sequential_test: window and mean lengths disagree");
  DetectorOutcome out;
  double llr = 0.0;
  for (Eigen::Index m = 0; m < n; ++m) {
    llr += llr_increment(samples[static_cast<std::size_t>(m)], lambda1(m), lambda0(m));
    out.stop_time = static_cast<int>(m + 1);
    if (llr >= thresholds.logB) {
      out.decision = Symbol::s1;
      out.final_llr = llr;
      return out;
    }
    if (llr <= thresholds.logA) {
      out.decision = Symbol::s0;
      out.final_llr = llr;
      return out;
    }
  }
  out.truncated = true;
  out.final_llr = llr;
  bool closer_to_a = false;
  if (mode == TruncationMode::log_domain) {
    closer_to_a = std::fabs(llr - thresholds.logA) < std::fabs(llr - thresholds.logB);
  } else {
    const double ratio = std::exp(llr);
    closer_to_a = std::fabs(ratio - thresholds.A) < std::fabs(ratio - thresholds.B);
  }
  out.decision = closer_to_a ? Symbol::s0 : Symbol::s1;
  return out;
}

DetectorOutcome masprt_detect(std::span<const Count> samples, const DecisionMemory& memory,
                              const ReceiverModel& model, const WaldThresholds& thresholds, TruncationMode mode) {
  if (static_cast<int>(samples.size()) != model.samples())
    throw std::invalid_argument("masprt_detect: window length must equal N");
  const HypothesisMeans m = model.means(memory);
  return sequential_test(samples, m.s1, m.s0, thresholds, mode);
}

double mlda_threshold(double x0, double x1, double pi1, double isi_hat, double n0) {
  if (x1 == x0) throw std::invalid_argument("mlda_threshold: x1 == x0, hypotheses are indistinguishable");
  if (!(x1 > x0) || x0 < 0.0) throw std::invalid_argument("mlda_threshold: requires x1 > x0 >= 0");
  const double ratio = (pi1 * x1 + isi_hat + n0) / (pi1 * x0 + isi_hat + n0);
  if (!(ratio > 1.0)) throw std::invalid_argument("mlda_threshold: log ratio must be positive");
  if (std::isinf(ratio)) return 0.0;
  return pi1 * (x1 - x0) / std::log(ratio);
}

DetectorOutcome mlda_detect(std::span<const Count> samples, const DecisionMemory& memory, const ReceiverModel& model) {
  const int n = model.samples();
  if (static_cast<int>(samples.size()) != n) throw std::invalid_argument("mlda_detect: window length must equal N");
  DetectorOutcome out;
  out.stop_time = n;
  if (n == 1) {
    const double isi = model.isi(memory)(0);
    const double gamma = mlda_threshold(0.0, model.modulation().x1(0), model.taps()[1], isi, model.noise());
    out.final_llr = llr_increment(samples[0], std::max(model.taps()[1] * model.modulation().x1(0) + isi + model.noise(),
                                                       kMeanFloor),
                                  std::max(isi + model.noise(), kMeanFloor));
    out.decision = static_cast<double>(samples[0]) >= gamma ? Symbol::s1 : Symbol::s0;
    return out;
  }
  const HypothesisMeans m = model.means(memory);
  double llr = 0.0;
  for (int k = 0; k < n; ++k) llr += llr_increment(samples[static_cast<std::size_t>(k)], m.s1(k), m.s0(k));
  out.final_llr = llr;
  out.decision = llr >= 0.0 ? Symbol::s1 : Symbol::s0;
  return out;
}

DetectorOutcome addf_detect(std::span<const Count> samples, const DecisionMemory& memory, const ReceiverModel& model,
                            double eta) {
  const int n = model.samples();
  if (static_cast<int>(samples.size()) != n) throw std::invalid_argument("addf_detect: window length must equal N");
  const VectorXd isi = model.isi(memory);
  double y_max = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) y_max = std::max(y_max, static_cast<double>(samples[static_cast<std::size_t>(k)]) - isi(k));
  DetectorOutcome out;
  out.stop_time = n;
  out.final_llr = y_max;
  out.decision = y_max >= eta ? Symbol::s1 : Symbol::s0;
  return out;
}

}  // namespace molcomm
