#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "molcomm/modulation.hpp"
#include "molcomm/types.hpp"

namespace molcomm {

/// 1-D diffusion link seen on the receiver's sampling grid.
struct ChannelParams {
  double rho = 0.5477225575051661;  // d / sqrt(2D), s^1/2
  double ts = 0.1;                  // slot duration, s
  double lambda0 = 4.0;             // noise rate, molecules/s
  double tau = 0.0;                 // transmitter-to-receiver clock offset, s

  double noise_mean() const { return lambda0 * ts; }

  /// Copy with tau = 0; the receiver always computes likelihoods on this grid.
  ChannelParams receiver_view() const {
    ChannelParams c = *this;
    c.tau = 0.0;
    return c;
  }

  void validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("channel: rho must be positive");
    if (!(ts > 0.0)) throw std::invalid_argument("channel: ts must be positive");
    if (!(lambda0 >= 0.0)) throw std::invalid_argument("channel: lambda0 must be non-negative");
    if (!(tau >= 0.0)) throw std::invalid_argument("channel: tau must be non-negative");
  }
};

/// Channel impulse response on the sampling grid. taps(i - 1) holds pi_i(tau).
struct TapVector {
  VectorXd taps;
  double tau = 0.0;

  int size() const { return static_cast<int>(taps.size()); }
  double operator[](int i) const { return taps(i - 1); }  // 1-based, as pi_i
};

/// pi_i(tau): probability that a molecule released at a slot boundary is first
/// detected in receiver window i.
double hitting_prob(int i, const ChannelParams& params);

TapVector tap_vector(int len, const ChannelParams& params);

/// Mass arriving after the last tap of a length-`len` response.
double tail_mass(int len, const ChannelParams& params);

/// Mean count at the last index of a release history:
/// sum_i pi_i * history[K - i] + n0, K = history.size().
template <typename Derived>
double mean_rate_at(const Eigen::MatrixBase<Derived>& history, const TapVector& taps,
                    const ChannelParams& params) {
  const Eigen::Index k = history.size();
  if (k < 1) throw std::invalid_argument("mean_rate_at: empty release history");
  if (taps.taps.size() < k) throw std::invalid_argument("mean_rate_at: tap vector shorter than history");
  if ((history.array() < 0.0).any()) throw std::invalid_argument("mean_rate_at: negative release rate");
  return taps.taps.head(k).dot(history.reverse()) + params.noise_mean();
}

/// Per-lag response of one s1 symbol. Entry (k, b) is the mean contribution of an
/// x1 released b intervals earlier to sample k + 1 of the current interval.
/// Requires taps.size() >= lags * N.
MatrixXd symbol_response(const VectorXd& x1, const TapVector& taps, int lags);

struct SampleMatrix {
  CountMatrix counts;           // symbols x N
  std::vector<Symbol> bits;
  std::uint64_t seed = 0;
  double neglected_tail = 0.0;  // impulse mass beyond the simulated ISI horizon

  int symbols() const { return static_cast<int>(counts.rows()); }
  int samples_per_symbol() const { return static_cast<int>(counts.cols()); }
};

/// Noise-inclusive generation means for a packet (symbols x N) with the true tau.
/// horizon_symbols counts the current symbol, so 1 means no ISI.
MatrixXd packet_means(std::span<const Symbol> bits, const Modulation& modulation,
                      const ChannelParams& params, int horizon_symbols);

/// Draws Poisson counts around packet_means. Symbol i uses the stream keyed by
/// seed ^ i, so output is independent of how packets are sharded.
SampleMatrix simulate_packet(std::span<const Symbol> bits, const Modulation& modulation,
                             const ChannelParams& params, std::uint64_t seed, int horizon_symbols);

}  // namespace molcomm
