#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "molcomm/channel.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/modulation.hpp"

namespace molcomm {

enum class Scheme { masprt = 0, mlda = 1, addf = 2 };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct ExperimentSpec {
  Scheme scheme = Scheme::masprt;
  Modulation modulation;
  ChannelParams channel;  // tau here is the true offset
  int bits = 10000;
  int trials = 1;
  int memory_depth = 10;
  std::uint64_t master_seed = 1;
  double alpha = 1e-3;
  double beta = 1e-3;
  TruncationMode truncation = TruncationMode::log_domain;
  std::optional<double> eta;  // ADDF threshold
  int horizon_symbols = 0;    // simulated ISI span incl. current symbol; 0 selects memory_depth + 2
  bool oracle_memory = false; // feed true past bits to the receiver (testing only)
  int workers = 1;

  int samples() const { return modulation.samples(); }
  double rate() const { return 1.0 / (channel.ts * samples()); }
  int horizon() const { return horizon_symbols > 0 ? horizon_symbols : memory_depth + 2; }
  void validate() const;
};

/// Additive counters for one or more packets; merge is exact.
struct TrialResult {
  std::int64_t bits = 0;
  std::int64_t errors = 0;
  std::array<std::int64_t, 2> symbols{};
  std::array<std::int64_t, 2> stop_sum{};
  std::int64_t truncations = 0;
  std::uint64_t seed = 0;
  double neglected_tail = 0.0;

  double ber() const { return bits ? double(errors) / double(bits) : 0.0; }
  double mean_stop(Symbol s) const;
  double truncation_rate() const { return bits ? double(truncations) / double(bits) : 0.0; }
  TrialResult& merge(const TrialResult& other);
};

std::uint64_t trial_seed(std::uint64_t master, int trial, Scheme scheme);

/// Equiprobable bits for one packet, drawn from the trial's stream.
std::vector<Symbol> draw_bits(int count, std::uint64_t seed);

/// Runs the experiment's detector over an already simulated packet with decision feedback.
TrialResult detect_packet(const SampleMatrix& packet, const ExperimentSpec& spec);

/// One packet: draw bits, simulate with the true tau, detect symbol by symbol.
TrialResult run_ber_trial(const ExperimentSpec& spec, int trial = 0);

/// All spec.trials packets merged in trial order.
TrialResult run_experiment(const ExperimentSpec& spec);

/// 200 points on [0, peak + 5 sqrt(peak + n0)] by default, where peak is the
/// largest noise-free current-symbol sample mean.
std::vector<double> default_eta_grid(const Modulation& modulation, const ChannelParams& channel, int points = 200);

struct CalibrationResult {
  double eta = std::numeric_limits<double>::infinity();
  double ber = 0.0;
  std::vector<double> grid;
  std::vector<double> bers;
};

inline constexpr std::uint64_t kCalibrationSeed = 0xadd0f5eedULL;

/// ADDF threshold with the lowest BER at tau = 0 on a fixed calibration stream.
/// Ties go to the smallest eta.
CalibrationResult calibrate_addf(const ExperimentSpec& spec, std::span<const double> grid, int bits = 20000);

struct ResultRow {
  std::string scheme;
  int mem_depth = 0;
  double rate = 0.0;
  double tau = 0.0;
  double tau_norm = 0.0;
  std::int64_t bits = 0;
  std::int64_t errors = 0;
  double ber = 0.0;
  double mean_stop_0 = 0.0;
  double mean_stop_1 = 0.0;
  double truncation_rate = 0.0;
  std::uint64_t seed = 0;
};

using ResultTable = std::vector<ResultRow>;

ResultRow make_row(const ExperimentSpec& spec, const TrialResult& result);

struct SchemeConfig {
  Scheme scheme = Scheme::masprt;
  int memory_depth = 10;
};

/// Optimized x1 for a slot duration, or nullopt when none is available.
using SequenceLookup = std::function<std::optional<Modulation>(double ts)>;

/// One row per (scheme, memory depth, R). ts = 1 / (R N) for each rate.
ResultTable sweep_rate(const ExperimentSpec& base, std::span<const double> rates,
                       std::span<const SchemeConfig> schemes, const SequenceLookup& lookup);

/// One row per (scheme, memory depth, tau) at base.channel.ts with base.modulation.
ResultTable sweep_sync(const ExperimentSpec& base, std::span<const double> taus,
                       std::span<const SchemeConfig> schemes);

/// Same as run_experiment, calibrating eta first when the scheme is ADDF and none is set.
TrialResult run_scheme(ExperimentSpec spec);

}  // namespace molcomm
