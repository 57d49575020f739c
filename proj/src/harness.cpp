#include "molcomm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>

#include "molcomm/random.hpp"
#include "molcomm/sequence_io.hpp"

namespace molcomm {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::masprt: return "masprt";
    case Scheme::mlda: return "mlda";
    case Scheme::addf: return "addf";
  }
  throw std::invalid_argument("unknown scheme");
}

Scheme parse_scheme(const std::string& name) {
  if (name == "masprt") return Scheme::masprt;
  if (name == "mlda") return Scheme::mlda;
  if (name == "addf") return Scheme::addf;
  throw std::invalid_argument("unknown scheme '" + name + "' (expected masprt, mlda or addf)");
}

void ExperimentSpec::validate() const {
  modulation.validate();
  channel.validate();
  if (bits < 1) throw std::invalid_argument("experiment: bits must be >= 1");
  if (trials < 1) throw std::invalid_argument("experiment: trials must be >= 1");
  if (memory_depth < 0) throw std::invalid_argument("experiment: negative memory depth");
  if (horizon_symbols < 0) throw std::invalid_argument("experiment: negative ISI horizon");
  (void)wald_thresholds(alpha, beta);
  if (scheme == Scheme::addf && !eta) throw std::invalid_argument("experiment: ADDF needs a threshold eta");
}

double TrialResult::mean_stop(Symbol s) const {
  const auto n = symbols[static_cast<std::size_t>(index_of(s))];
  return n ? double(stop_sum[static_cast<std::size_t>(index_of(s))]) / double(n) : std::nan("");
}

TrialResult& TrialResult::merge(const TrialResult& other) {
  bits += other.bits;
  errors += other.errors;
  for (std::size_t j = 0; j < 2; ++j) {
    symbols[j] += other.symbols[j];
    stop_sum[j] += other.stop_sum[j];
  }
  truncations += other.truncations;
  neglected_tail = std::max(neglected_tail, other.neglected_tail);
  return *this;
}

std::uint64_t trial_seed(std::uint64_t master, int trial, Scheme scheme) {
  return derive_seed(master, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(scheme));
}

std::vector<Symbol> draw_bits(int count, std::uint64_t seed) {
  CounterRng rng(derive_seed(seed, 0xb175ULL));
  std::vector<Symbol> bits(static_cast<std::size_t>(count));
  for (auto& b : bits) b = (rng() >> 63) ? Symbol::s1 : Symbol::s0;
  return bits;
}

TrialResult detect_packet(const SampleMatrix& packet, const ExperimentSpec& spec) {
  spec.validate();
  if (packet.samples_per_symbol() != spec.samples())
    throw std::invalid_argument("detect_packet: packet window length differs from modulation length");
  const ReceiverModel model(spec.modulation, spec.channel, spec.memory_depth);
  const WaldThresholds thresholds = wald_thresholds(spec.alpha, spec.beta);
  DecisionMemory memory(spec.memory_depth);

  TrialResult out;
  out.seed = packet.seed;
  out.neglected_tail = packet.neglected_tail;
  const auto n = static_cast<std::size_t>(spec.samples());
  for (int i = 0; i < packet.symbols(); ++i) {
    const std::span<const Count> window(packet.counts.row(i).data(), n);
    DetectorOutcome outcome;
    switch (spec.scheme) {
      case Scheme::masprt: outcome = masprt_detect(window, memory, model, thresholds, spec.truncation); break;
      case Scheme::mlda: outcome = mlda_detect(window, memory, model); break;
      case Scheme::addf: outcome = addf_detect(window, memory, model, *spec.eta); break;
    }
    const Symbol truth = packet.bits[static_cast<std::size_t>(i)];
    const auto j = static_cast<std::size_t>(index_of(truth));
    ++out.bits;
    ++out.symbols[j];
    out.stop_sum[j] += outcome.stop_time;
    if (outcome.truncated) ++out.truncations;
    if (outcome.decision != truth) ++out.errors;
    memory.push(spec.oracle_memory ? truth : outcome.decision);
  }
  return out;
}

TrialResult run_ber_trial(const ExperimentSpec& spec, int trial) {
  spec.validate();
  const std::uint64_t seed = trial_seed(spec.master_seed, trial, spec.scheme);
  const std::vector<Symbol> bits = draw_bits(spec.bits, seed);
  const SampleMatrix packet = simulate_packet(bits, spec.modulation, spec.channel, seed, spec.horizon());
  return detect_packet(packet, spec);
}

TrialResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<TrialResult> parts(static_cast<std::size_t>(spec.trials));
  const int workers = std::max(1, spec.workers);
  for (int begin = 0; begin < spec.trials; begin += workers) {
    std::vector<std::future<TrialResult>> batch;
    for (int t = begin; t < std::min(spec.trials, begin + workers); ++t)
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                 [&spec, t] { return run_ber_trial(spec, t); }));
    for (std::size_t i = 0; i < batch.size(); ++i) parts[static_cast<std::size_t>(begin) + i] = batch[i].get();
  }
  TrialResult total;
  total.seed = spec.master_seed;
  for (const auto& p : parts) total.merge(p);
  return total;
}

std::vector<double> default_eta_grid(const Modulation& modulation, const ChannelParams& channel, int points) {
  if (points < 1) throw std::invalid_argument("default_eta_grid: need at least one point");
  // Peak of the noise-free current-symbol response; the first sample alone
  // underestimates it whenever the taps peak later than ts.
  const ChannelParams rx = channel.receiver_view();
  const int n = modulation.samples();
  const double peak = symbol_response(modulation.x1, tap_vector(n, rx), 1).col(0).maxCoeff();
  const double top = peak + 5.0 * std::sqrt(peak + rx.noise_mean());
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = points == 1 ? 0.0 : top * i / (points - 1);
  return grid;
}

CalibrationResult calibrate_addf(const ExperimentSpec& spec, std::span<const double> grid, int bits) {
  if (grid.empty()) throw std::invalid_argument("calibrate_addf: empty threshold grid");
  ExperimentSpec cal = spec;
  cal.scheme = Scheme::addf;
  cal.channel.tau = 0.0;
  cal.bits = std::max(bits, 20000);
  cal.eta = 0.0;
  cal.validate();
  const std::uint64_t seed = trial_seed(kCalibrationSeed, 0, Scheme::addf);
  const std::vector<Symbol> symbols = draw_bits(cal.bits, seed);
  const SampleMatrix packet = simulate_packet(symbols, cal.modulation, cal.channel, seed, cal.horizon());

  CalibrationResult out;
  out.grid.assign(grid.begin(), grid.end());
  out.bers.reserve(grid.size());
  for (const double eta : grid) {
    cal.eta = eta;
    out.bers.push_back(detect_packet(packet, cal).ber());
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (out.bers[i] < out.bers[best] || (out.bers[i] == out.bers[best] && grid[i] < grid[best])) best = i;
  }
  out.eta = grid[best];
  out.ber = out.bers[best];
  return out;
}

ResultRow make_row(const ExperimentSpec& spec, const TrialResult& result) {
  ResultRow row;
  row.scheme = to_string(spec.scheme);
  row.mem_depth = spec.memory_depth;
  row.rate = spec.rate();
  row.tau = spec.channel.tau;
  row.tau_norm = spec.channel.tau * row.rate;
  row.bits = result.bits;
  row.errors = result.errors;
  row.ber = result.ber();
  row.mean_stop_0 = result.mean_stop(Symbol::s0);
  row.mean_stop_1 = result.mean_stop(Symbol::s1);
  row.truncation_rate = result.truncation_rate();
  row.seed = spec.master_seed;
  return row;
}

TrialResult run_scheme(ExperimentSpec spec) {
  if (spec.scheme == Scheme::addf && !spec.eta) {
    const std::vector<double> grid = default_eta_grid(spec.modulation, spec.channel);
    spec.eta = calibrate_addf(spec, grid).eta;
  }
  return run_experiment(spec);
}

namespace {

int sweep_horizon(const ExperimentSpec& base, std::span<const SchemeConfig> schemes) {
  if (base.horizon_symbols > 0) return base.horizon_symbols;
  int deepest = 0;
  for (const auto& s : schemes) deepest = std::max(deepest, s.memory_depth);
  return deepest + 2;
}

}  // namespace

ResultTable sweep_rate(const ExperimentSpec& base, std::span<const double> rates,
                       std::span<const SchemeConfig> schemes, const SequenceLookup& lookup) {
  const int n = base.samples();
  if (n < 1) throw std::invalid_argument("sweep_rate: base modulation defines N");
  std::vector<Modulation> sequences;
  for (const double r : rates) {
    if (!(r > 0.0)) throw std::invalid_argument("sweep_rate: rates must be positive");
    const double ts = 1.0 / (r * n);
    std::optional<Modulation> m = lookup(ts);
    if (!m) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "sweep_rate: no optimized sequence for R=%g bps (ts=%g s); expected %s", r, ts,
                    sequence_filename(ts).c_str());
      throw std::runtime_error(buf);
    }
    if (m->samples() != n) throw std::runtime_error("sweep_rate: sequence for ts=" + std::to_string(ts) + " has wrong N");
    sequences.push_back(std::move(*m));
  }
  ResultTable table;
  const int horizon = sweep_horizon(base, schemes);
  for (const auto& cfg : schemes) {
    for (std::size_t i = 0; i < rates.size(); ++i) {
      ExperimentSpec spec = base;
      spec.scheme = cfg.scheme;
      spec.memory_depth = cfg.memory_depth;
      spec.modulation = sequences[i];
      spec.channel.ts = 1.0 / (rates[i] * n);
      spec.horizon_symbols = horizon;
      spec.eta.reset();
      table.push_back(make_row(spec, run_scheme(spec)));
    }
  }
  return table;
}

ResultTable sweep_sync(const ExperimentSpec& base, std::span<const double> taus,
                       std::span<const SchemeConfig> schemes) {
  ResultTable table;
  const int horizon = sweep_horizon(base, schemes);
  for (const auto& cfg : schemes) {
    ExperimentSpec spec = base;
    spec.scheme = cfg.scheme;
    spec.memory_depth = cfg.memory_depth;
    spec.horizon_symbols = horizon;
    spec.eta.reset();
    if (cfg.scheme == Scheme::addf) {
      const std::vector<double> grid = default_eta_grid(spec.modulation, spec.channel);
      spec.eta = calibrate_addf(spec, grid).eta;
    }
    for (const double tau : taus) {
      spec.channel.tau = tau;
      table.push_back(make_row(spec, run_experiment(spec)));
    }
  }
  return table;
}

}  // namespace molcomm
