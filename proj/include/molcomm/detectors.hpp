#pragma once

#include <span>
#include <vector>

#include "molcomm/channel.hpp"
#include "molcomm/modulation.hpp"
#include "molcomm/types.hpp"

namespace molcomm {

/// Wald's sequential thresholds on the likelihood ratio.
struct WaldThresholds {
  double A = 0.0;
  double B = 0.0;
  double logA = 0.0;
  double logB = 0.0;
};

WaldThresholds wald_thresholds(double alpha, double beta);

/// Per-sample Poisson log-likelihood ratio y log(l1/l0) - (l1 - l0).
double llr_increment(Count y, double lambda1, double lambda0);

/// Fixed-depth store of past decisions, most recent first.
class DecisionMemory {
 public:
  explicit DecisionMemory(int depth);

  int depth() const { return depth_; }
  int size() const { return size_; }
  bool empty() const { return size_ == 0; }

  /// b = 0 is the previous symbol.
  Symbol operator[](int b) const;
  void push(Symbol s);
  void clear();

 private:
  std::vector<Symbol> ring_;
  int depth_;
  int head_ = 0;
  int size_ = 0;
};

struct DetectorOutcome {
  Symbol decision = Symbol::s0;
  int stop_time = 0;
  bool truncated = false;
  double final_llr = 0.0;  // ADDF stores its corrected maximum here
};

enum class TruncationMode {
  log_domain,     // compare |l - logA| with |l - logB|
  linear_domain,  // compare |L - A| with |L - B|
};

/// Means below this are floored before taking logs.
inline constexpr double kMeanFloor = 1e-12;

/// Mean ISI at sample k (1-based) of the current interval from the remembered
/// decisions, computed by direct convolution over the reconstructed history.
double estimate_isi(int k, const DecisionMemory& memory, const Modulation& modulation, const TapVector& taps);

struct HypothesisMeans {
  VectorXd s1;
  VectorXd s0;
};

/// Receiver-side likelihood model on the tau = 0 grid, with the per-lag symbol
/// response precomputed for memory depths up to `memory_depth`.
class ReceiverModel {
 public:
  ReceiverModel(const Modulation& modulation, const ChannelParams& channel, int memory_depth);

  const Modulation& modulation() const { return modulation_; }
  const TapVector& taps() const { return taps_; }
  int samples() const { return modulation_.samples(); }
  int memory_depth() const { return memory_depth_; }
  double noise() const { return noise_; }

  /// Current-symbol contribution under s1 at each sample.
  auto current() const { return response_.col(0); }
  /// Past-symbol ISI at each sample of the current interval.
  VectorXd isi(const DecisionMemory& memory) const;
  /// Noise-inclusive means under each hypothesis, floored at kMeanFloor.
  HypothesisMeans means(const DecisionMemory& memory) const;

 private:
  Modulation modulation_;
  TapVector taps_;
  MatrixXd response_;
  double noise_;
  int memory_depth_;
};

/// Truncated SPRT on explicit per-sample means. Stops at the first m with
/// llr >= logB (s1) or llr <= logA (s0); otherwise applies the truncation rule at
/// the end of the window.
DetectorOutcome sequential_test(std::span<const Count> samples, const VectorXd& lambda1, const VectorXd& lambda0,
                                const WaldThresholds& thresholds, TruncationMode mode = TruncationMode::log_domain);

DetectorOutcome masprt_detect(std::span<const Count> samples, const DecisionMemory& memory,
                              const ReceiverModel& model, const WaldThresholds& thresholds,
                              TruncationMode mode = TruncationMode::log_domain);

/// ML threshold for a single-sample decision between releases x0 and x1.
double mlda_threshold(double x0, double x1, double pi1, double isi_hat, double n0);

/// N = 1: the gamma threshold rule. N > 1: joint ML over the whole window.
DetectorOutcome mlda_detect(std::span<const Count> samples, const DecisionMemory& memory, const ReceiverModel& model);

/// Maximum ISI-corrected sample against eta.
DetectorOutcome addf_detect(std::span<const Count> samples, const DecisionMemory& memory, const ReceiverModel& model,
                            double eta);

}  // namespace molcomm
