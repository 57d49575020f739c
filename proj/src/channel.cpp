#include "molcomm/channel.hpp"

#include <cmath>

#include "molcomm/random.hpp"
#include "molcomm/special.hpp"

namespace molcomm {

double hitting_prob(int i, const ChannelParams& params) {
  if (i < 1) throw std::invalid_argument("hitting_prob: slot index must be >= 1");
  params.validate();
  const double upper = cumulative_hit(params.rho, i * params.ts + params.tau);
  const double lower = cumulative_hit(params.rho, (i - 1) * params.ts + params.tau);
  return upper - lower;
}

TapVector tap_vector(int len, const ChannelParams& params) {
  if (len < 1) throw std::invalid_argument("tap_vector: length must be >= 1");
  params.validate();
  TapVector out;
  out.tau = params.tau;
  out.taps.resize(len);
  double previous = cumulative_hit(params.rho, params.tau);
  for (int i = 1; i <= len; ++i) {
    const double current = cumulative_hit(params.rho, i * params.ts + params.tau);
    out.taps(i - 1) = current - previous;
    previous = current;
  }
  return out;
}

double tail_mass(int len, const ChannelParams& params) {
  return 1.0 - cumulative_hit(params.rho, len * params.ts + params.tau);
}

MatrixXd symbol_response(const VectorXd& x1, const TapVector& taps, int lags) {
  const auto n = static_cast<int>(x1.size());
  if (lags < 1) throw std::invalid_argument("symbol_response: need at least one lag");
  if (taps.size() < lags * n) throw std::invalid_argument("symbol_response: tap vector too short");
  MatrixXd response = MatrixXd::Zero(n, lags);
  for (int b = 0; b < lags; ++b) {
    for (int k = 1; k <= n; ++k) {
      double sum = 0.0;
      for (int slot = 1; slot <= n; ++slot) {
        const int lag = b * n + k - slot + 1;
        if (lag >= 1) sum += taps[lag] * x1(slot - 1);
      }
      response(k - 1, b) = sum;
    }
  }
  return response;
}

MatrixXd packet_means(std::span<const Symbol> bits, const Modulation& modulation,
                      const ChannelParams& params, int horizon_symbols) {
  modulation.validate();
  params.validate();
  if (horizon_symbols < 1) throw std::invalid_argument("packet_means: horizon must cover the current symbol");
  const int n = modulation.samples();
  const MatrixXd response = symbol_response(modulation.x1, tap_vector(horizon_symbols * n, params), horizon_symbols);
  const auto count = static_cast<Eigen::Index>(bits.size());
  MatrixXd means = MatrixXd::Constant(count, n, params.noise_mean());
  for (Eigen::Index i = 0; i < count; ++i) {
    if (bits[i] != Symbol::s1) continue;
    for (int b = 0; b < horizon_symbols && i + b < count; ++b) means.row(i + b) += response.col(b).transpose();
  }
  return means;
}

SampleMatrix simulate_packet(std::span<const Symbol> bits, const Modulation& modulation,
                             const ChannelParams& params, std::uint64_t seed, int horizon_symbols) {
  const MatrixXd means = packet_means(bits, modulation, params, horizon_symbols);
  SampleMatrix out;
  out.counts.resize(means.rows(), means.cols());
  out.bits.assign(bits.begin(), bits.end());
  out.seed = seed;
  out.neglected_tail = tail_mass(horizon_symbols * modulation.samples(), params);
  for (Eigen::Index i = 0; i < means.rows(); ++i) {
    CounterRng rng(seed ^ static_cast<std::uint64_t>(i));
    for (Eigen::Index k = 0; k < means.cols(); ++k) out.counts(i, k) = sample_poisson(means(i, k), rng);
  }
  return out;
}

}  // namespace molcomm
