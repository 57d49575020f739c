// molcomm: optimize release sequences, simulate detectors, run BER sweeps.
//
// Every subcommand accepts --config file.json whose keys use the long flag
// names (e.g. {"ts": 0.05, "schemes": ["masprt:10", "mlda:10"]}); flags given on
// the command line win. Each run writes run.json with the resolved settings.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "molcomm/harness.hpp"
#include "molcomm/optimizer.hpp"
#include "molcomm/report.hpp"
#include "molcomm/sequence_io.hpp"

using namespace molcomm;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Settings {
  // channel and problem
  double ts = 0.1;
  int samples = 20;
  double power = 100.0;
  double alpha = 1e-3;
  double beta = 1e-3;
  int stop_time0 = 5;
  int stop_time1 = 5;
  double lambda0 = 4.0;
  double rho = std::sqrt(0.3);
  int opt_mem = 5;
  std::string mu_variant = "printed";
  // experiments
  std::string scheme = "masprt";
  std::string seq;
  std::string seq_dir = ".";
  bool solve_missing = false;
  double tau = 0.0;
  int bits = 10000;
  int trials = 1;
  std::uint64_t seed = 1;
  int mem = 10;
  double eta = std::nan("");
  std::vector<double> rates{0.5, 1.0, 1.5, 2.0};
  std::vector<double> taus{0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  double rate = 0.5;
  std::vector<std::string> schemes{"masprt:10", "masprt:5", "mlda:10", "addf:10"};
  int grid_points = 200;
  // output and execution
  std::string out;
  std::string out_dir = ".";
  int workers = 1;
};

ordered_json to_json(const Settings& s) {
  ordered_json j;
  j["ts"] = s.ts;
  j["N"] = s.samples;
  j["P"] = s.power;
  j["alpha"] = s.alpha;
  j["beta"] = s.beta;
  j["T0"] = s.stop_time0;
  j["T1"] = s.stop_time1;
  j["lambda0"] = s.lambda0;
  j["rho"] = s.rho;
  j["opt-mem"] = s.opt_mem;
  j["mu-variant"] = s.mu_variant;
  j["scheme"] = s.scheme;
  j["seq"] = s.seq;
  j["seq-dir"] = s.seq_dir;
  j["solve-missing"] = s.solve_missing;
  j["tau"] = s.tau;
  j["bits"] = s.bits;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["mem"] = s.mem;
  j["eta"] = std::isnan(s.eta) ? ordered_json(nullptr) : ordered_json(s.eta);
  j["rates"] = s.rates;
  j["taus"] = s.taus;
  j["rate"] = s.rate;
  j["schemes"] = s.schemes;
  j["grid-points"] = s.grid_points;
  j["out"] = s.out;
  j["out-dir"] = s.out_dir;
  j["workers"] = s.workers;
  return j;
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

void load_config(const fs::path& path, Settings& s) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  const auto j = nlohmann::json::parse(in);
  const ordered_json known = to_json(Settings{});
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw std::runtime_error("config: unknown key '" + key + "'");
  take(j, "ts", s.ts);
  take(j, "N", s.samples);
  take(j, "P", s.power);
  take(j, "alpha", s.alpha);
  take(j, "beta", s.beta);
  take(j, "T0", s.stop_time0);
  take(j, "T1", s.stop_time1);
  take(j, "lambda0", s.lambda0);
  take(j, "rho", s.rho);
  take(j, "opt-mem", s.opt_mem);
  take(j, "mu-variant", s.mu_variant);
  take(j, "scheme", s.scheme);
  take(j, "seq", s.seq);
  take(j, "seq-dir", s.seq_dir);
  take(j, "solve-missing", s.solve_missing);
  take(j, "tau", s.tau);
  take(j, "bits", s.bits);
  take(j, "trials", s.trials);
  take(j, "seed", s.seed);
  take(j, "mem", s.mem);
  take(j, "eta", s.eta);
  take(j, "rates", s.rates);
  take(j, "taus", s.taus);
  take(j, "rate", s.rate);
  take(j, "schemes", s.schemes);
  take(j, "grid-points", s.grid_points);
  take(j, "out", s.out);
  take(j, "out-dir", s.out_dir);
  take(j, "workers", s.workers);
}

// The config file must be read before flags are parsed so flags can override it.
std::optional<fs::path> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return fs::path(a.substr(9));
  }
  return std::nullopt;
}

OptProblem make_problem(const Settings& s, double ts) {
  OptProblem p;
  p.channel.rho = s.rho;
  p.channel.ts = ts;
  p.channel.lambda0 = s.lambda0;
  p.samples = s.samples;
  p.power = s.power;
  p.alpha = s.alpha;
  p.beta = s.beta;
  p.stop_time0 = s.stop_time0;
  p.stop_time1 = s.stop_time1;
  p.memory_depth = s.opt_mem;
  if (s.mu_variant == "printed") p.mu_variant = MuVariant::printed;
  else if (s.mu_variant == "derivation") p.mu_variant = MuVariant::derivation;
  else throw std::invalid_argument("mu-variant must be 'printed' or 'derivation'");
  return p;
}

SchemeConfig parse_scheme_config(const std::string& text, int default_mem) {
  const auto colon = text.find(':');
  SchemeConfig c;
  c.scheme = parse_scheme(text.substr(0, colon));
  c.memory_depth = colon == std::string::npos ? default_mem : std::stoi(text.substr(colon + 1));
  return c;
}

std::vector<SchemeConfig> scheme_list(const Settings& s) {
  std::vector<SchemeConfig> out;
  for (const auto& t : s.schemes) out.push_back(parse_scheme_config(t, s.mem));
  if (out.empty()) throw std::invalid_argument("no schemes given");
  return out;
}

ExperimentSpec make_spec(const Settings& s, const Modulation& modulation, double ts) {
  ExperimentSpec e;
  e.scheme = parse_scheme(s.scheme);
  e.modulation = modulation;
  e.channel.rho = s.rho;
  e.channel.ts = ts;
  e.channel.lambda0 = s.lambda0;
  e.channel.tau = s.tau;
  e.bits = s.bits;
  e.trials = s.trials;
  e.memory_depth = s.mem;
  e.master_seed = s.seed;
  e.alpha = s.alpha;
  e.beta = s.beta;
  e.workers = s.workers;
  if (!std::isnan(s.eta)) e.eta = s.eta;
  return e;
}

SequenceRecord load_sequence(const Settings& s) {
  if (s.seq.empty()) throw std::invalid_argument("--seq is required");
  return read_sequence(s.seq);
}

void write_run_json(const Settings& s, const std::string& command, const ordered_json& result) {
  fs::create_directories(s.out_dir);
  ordered_json j;
  j["command"] = command;
  j["settings"] = to_json(s);
  j["result"] = result;
  std::ofstream out(fs::path(s.out_dir) / "run.json", std::ios::binary);
  out << j.dump(2) << "\n";
}

ordered_json trial_json(const TrialResult& r) {
  ordered_json j;
  j["bits"] = r.bits;
  j["errors"] = r.errors;
  j["ber"] = r.ber();
  j["mean_stop_0"] = r.mean_stop(Symbol::s0);
  j["mean_stop_1"] = r.mean_stop(Symbol::s1);
  j["truncation_rate"] = r.truncation_rate();
  j["binomial_sigma"] = r.bits ? std::sqrt(r.ber() * (1.0 - r.ber()) / double(r.bits)) : 0.0;
  return j;
}

int cmd_optimize(const Settings& s) {
  const OptProblem p = make_problem(s, s.ts);
  const MultiStartResult ms = solve_p1_multistart(p);
  const OptResult& r = ms.best;
  const SequenceRecord rec = make_record(p, r);
  const fs::path out = s.out.empty() ? fs::path(s.out_dir) / sequence_filename(s.ts) : fs::path(s.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_sequence(out, rec);

  ordered_json j;
  j["sequence"] = out.string();
  j["norm"] = r.norm;
  j["objective"] = r.objective;
  j["mu"] = r.mu;
  j["slack0"] = r.slack0;
  j["slack1"] = r.slack1;
  j["converged"] = r.converged;
  j["stable"] = ms.stable;
  j["message"] = r.message;
  write_run_json(s, "optimize", j);
  std::printf("wrote %s: norm %.4f objective %.6g mu %.4g slack0 %.3g slack1 %.3g%s\n", out.string().c_str(), r.norm,
              r.objective, r.mu, r.slack0, r.slack1, r.converged ? "" : " (not converged)");
  if (!ms.stable) std::printf("note: multistart runs disagree by more than 5%%\n");
  return r.converged ? 0 : 3;
}

int cmd_simulate(const Settings& s) {
  const SequenceRecord rec = load_sequence(s);
  ExperimentSpec e = make_spec(s, rec.modulation(), rec.ts);
  if (e.scheme == Scheme::addf && !e.eta) {
    const auto grid = default_eta_grid(e.modulation, e.channel, s.grid_points);
    e.eta = calibrate_addf(e, grid).eta;
  }
  const TrialResult r = run_experiment(e);
  const ResultTable table{make_row(e, r)};
  fs::create_directories(s.out_dir);
  std::ofstream(fs::path(s.out_dir) / "simulate.csv", std::ios::binary) << to_csv(table);
  ordered_json j = trial_json(r);
  if (e.eta) j["eta"] = *e.eta;
  write_run_json(s, "simulate", j);
  std::printf("%s B=%d R=%g tau=%g: BER %.6g (%lld/%lld), T0 %.3f, T1 %.3f, truncation %.4f\n", s.scheme.c_str(), s.mem,
              e.rate(), s.tau, r.ber(), (long long)r.errors, (long long)r.bits, r.mean_stop(Symbol::s0),
              r.mean_stop(Symbol::s1), r.truncation_rate());
  return 0;
}

int cmd_sweep_rate(const Settings& s) {
  const auto schemes = scheme_list(s);
  const SequenceLookup lookup = [&s](double ts) -> std::optional<Modulation> {
    const fs::path path = fs::path(s.seq_dir) / sequence_filename(ts);
    if (fs::exists(path)) return read_sequence(path).modulation();
    if (!s.solve_missing) return std::nullopt;
    const OptProblem p = make_problem(s, ts);
    const OptResult r = solve_p1_multistart(p).best;
    fs::create_directories(s.seq_dir);
    write_sequence(path, make_record(p, r));
    std::printf("solved %s: norm %.4f\n", path.string().c_str(), r.norm);
    return Modulation{r.x1_hat, p.power};
  };
  // The base modulation is replaced per rate; it only fixes N here.
  const ExperimentSpec base = make_spec(s, Modulation{VectorXd::Zero(s.samples), s.power}, s.ts);
  const ResultTable table = sweep_rate(base, s.rates, schemes, lookup);
  fs::create_directories(s.out_dir);
  emit_outputs(table, fs::path(s.out_dir) / "sweep_rate.csv", fs::path(s.out_dir) / "sweep_rate.svg", PlotAxis::rate);
  write_run_json(s, "sweep-rate", ordered_json{{"rows", table.size()}, {"csv", "sweep_rate.csv"}});
  std::cout << to_csv(table);
  return 0;
}

int cmd_sweep_sync(const Settings& s) {
  const auto schemes = scheme_list(s);
  const double ts = 1.0 / (s.rate * s.samples);
  Modulation modulation;
  if (!s.seq.empty()) {
    const SequenceRecord rec = load_sequence(s);
    if (std::fabs(rec.ts - ts) > 1e-12 * ts)
      throw std::invalid_argument("sequence " + s.seq + " was optimized for ts=" + std::to_string(rec.ts) +
                                  ", but rate " + std::to_string(s.rate) + " needs ts=" + std::to_string(ts));
    modulation = rec.modulation();
  } else {
    const fs::path path = fs::path(s.seq_dir) / sequence_filename(ts);
    if (!fs::exists(path)) throw std::runtime_error("missing optimized sequence " + path.string());
    modulation = read_sequence(path).modulation();
  }
  const ExperimentSpec base = make_spec(s, modulation, ts);
  const ResultTable table = sweep_sync(base, s.taus, schemes);
  fs::create_directories(s.out_dir);
  emit_outputs(table, fs::path(s.out_dir) / "sweep_sync.csv", fs::path(s.out_dir) / "sweep_sync.svg",
               PlotAxis::sync_error);
  write_run_json(s, "sweep-sync", ordered_json{{"rows", table.size()}, {"csv", "sweep_sync.csv"}});
  std::cout << to_csv(table);
  return 0;
}

int cmd_calibrate(const Settings& s) {
  const SequenceRecord rec = load_sequence(s);
  Settings addf = s;
  addf.scheme = "addf";
  const ExperimentSpec e = make_spec(addf, rec.modulation(), rec.ts);
  const auto grid = default_eta_grid(e.modulation, e.channel, s.grid_points);
  const CalibrationResult c = calibrate_addf(e, grid);
  fs::create_directories(s.out_dir);
  std::ofstream table(fs::path(s.out_dir) / "calibration.csv", std::ios::binary);
  table << "eta,ber\n";
  char buf[64];
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", c.grid[i], c.bers[i]);
    table << buf;
  }
  write_run_json(s, "calibrate-addf", ordered_json{{"eta", c.eta}, {"ber", c.ber}, {"grid_points", c.grid.size()}});
  std::printf("eta %.6g (BER %.6g at tau=0 over %zu grid points)\n", c.eta, c.ber, c.grid.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  try {
    if (const auto path = find_config(argc, argv)) load_config(*path, s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  CLI::App app{"Molecular communication link simulator and sequence optimizer"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  app.add_option("--config", config, "JSON settings file; flags override its values");
  app.add_option("--out-dir", s.out_dir, "Directory for CSV, SVG and run.json");
  app.add_option("--workers", s.workers, "Concurrent trials")->check(CLI::PositiveNumber);

  auto channel_flags = [&s](CLI::App* c) {
    c->add_option("--lambda0", s.lambda0, "Noise rate (molecules/s)");
    c->add_option("--rho", s.rho, "d / sqrt(2D) in s^1/2");
    c->add_option("--N", s.samples, "Samples per symbol");
    c->add_option("--alpha", s.alpha, "Target false-alarm probability");
    c->add_option("--beta", s.beta, "Target miss probability");
  };
  auto problem_flags = [&s](CLI::App* c) {
    c->add_option("--P", s.power, "Power budget on ||x1||_2");
    c->add_option("--T0", s.stop_time0, "Target stopping time under s0");
    c->add_option("--T1", s.stop_time1, "Target stopping time under s1");
    c->add_option("--opt-mem", s.opt_mem, "Memory depth used by the bound");
    c->add_option("--mu-variant", s.mu_variant, "printed or derivation");
  };
  auto experiment_flags = [&s](CLI::App* c) {
    c->add_option("--bits", s.bits, "Bits per packet")->check(CLI::PositiveNumber);
    c->add_option("--trials", s.trials, "Packets per point")->check(CLI::PositiveNumber);
    c->add_option("--seed", s.seed, "Master seed");
    c->add_option("--mem", s.mem, "Default decision memory depth");
    c->add_option("--grid-points", s.grid_points, "ADDF eta grid size")->check(CLI::PositiveNumber);
  };

  auto* optimize = app.add_subcommand("optimize", "Solve for the release sequence at one slot duration");
  optimize->add_option("--ts", s.ts, "Slot duration (s)");
  optimize->add_option("--out", s.out, "Sequence file (default <out-dir>/seq_ts<ts>.json)");
  channel_flags(optimize);
  problem_flags(optimize);

  auto* simulate = app.add_subcommand("simulate", "BER and stopping times for one scheme");
  simulate->add_option("--scheme", s.scheme, "masprt, mlda or addf");
  simulate->add_option("--seq", s.seq, "Sequence file");
  simulate->add_option("--tau", s.tau, "True synchronisation offset (s)");
  simulate->add_option("--eta", s.eta, "ADDF threshold (calibrated when omitted)");
  channel_flags(simulate);
  experiment_flags(simulate);

  auto* sweep_rate_cmd = app.add_subcommand("sweep-rate", "BER against transmission rate");
  sweep_rate_cmd->add_option("--rates", s.rates, "Rates in bps");
  sweep_rate_cmd->add_option("--tau", s.tau, "True synchronisation offset (s)");
  sweep_rate_cmd->add_option("--schemes", s.schemes, "scheme[:mem] entries, e.g. masprt:10 mlda:10 addf");
  sweep_rate_cmd->add_option("--seq-dir", s.seq_dir, "Directory holding seq_ts<ts>.json files");
  sweep_rate_cmd->add_flag("--solve-missing", s.solve_missing, "Optimize and store sequences that are missing");
  channel_flags(sweep_rate_cmd);
  problem_flags(sweep_rate_cmd);
  experiment_flags(sweep_rate_cmd);

  auto* sweep_sync_cmd = app.add_subcommand("sweep-sync", "BER against synchronisation offset");
  sweep_sync_cmd->add_option("--taus", s.taus, "Offsets in s");
  sweep_sync_cmd->add_option("--rate", s.rate, "Transmission rate in bps");
  sweep_sync_cmd->add_option("--schemes", s.schemes, "scheme[:mem] entries");
  sweep_sync_cmd->add_option("--seq", s.seq, "Sequence file (default <seq-dir>/seq_ts<ts>.json)");
  sweep_sync_cmd->add_option("--seq-dir", s.seq_dir, "Directory holding seq_ts<ts>.json files");
  channel_flags(sweep_sync_cmd);
  experiment_flags(sweep_sync_cmd);

  auto* calibrate = app.add_subcommand("calibrate-addf", "Pick the ADDF threshold at tau = 0");
  calibrate->add_option("--seq", s.seq, "Sequence file");
  calibrate->add_option("--grid-points", s.grid_points, "Grid size")->check(CLI::PositiveNumber);
  calibrate->add_option("--mem", s.mem, "Decision memory depth");
  channel_flags(calibrate);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize) return cmd_optimize(s);
    if (*simulate) return cmd_simulate(s);
    if (*sweep_rate_cmd) return cmd_sweep_rate(s);
    if (*sweep_sync_cmd) return cmd_sweep_sync(s);
    if (*calibrate) return cmd_calibrate(s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
