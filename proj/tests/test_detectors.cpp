#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "molcomm/channel.hpp"
#include "molcomm/detectors.hpp"
#include "molcomm/harness.hpp"
#include "molcomm/random.hpp"
#include "oracle.hpp"

using namespace molcomm;

namespace {

const double kRho = std::sqrt(0.3);

ChannelParams params(double ts = 0.1, double tau = 0.0) {
  ChannelParams p;
  p.ts = ts;
  p.tau = tau;
  return p;
}

Modulation sequence(std::initializer_list<double> values, double power = 1e6) {
  Modulation m;
  m.x1.resize(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m.x1(i++) = v;
  m.power = power;
  return m;
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_SUITE("thresholds and increments") {
  TEST_CASE("wald thresholds") {
    const WaldThresholds t = wald_thresholds(1e-3, 1e-3);
    CHECK(t.A == doctest::Approx(1.001001e-3).epsilon(1e-6));
    CHECK(t.B == doctest::Approx(999.0).epsilon(1e-12));
    CHECK(t.A * t.B == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.logA == doctest::Approx(-t.logB).epsilon(1e-12));
    CHECK(t.logB == doctest::Approx(std::log(999.0)).epsilon(1e-12));

    const WaldThresholds half = wald_thresholds(0.5, 0.5);
    CHECK(half.A == doctest::Approx(1.0));
    CHECK(half.B == doctest::Approx(1.0));

    const WaldThresholds skew = wald_thresholds(0.01, 0.2);
    CHECK(skew.A == doctest::Approx(0.2 / 0.99));
    CHECK(skew.B == doctest::Approx(0.8 / 0.01));

    CHECK_THROWS_AS(wald_thresholds(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(wald_thresholds(0.1, 1.0), std::invalid_argument);
  }

  TEST_CASE("llr increments") {
    for (Count y : {0, 1, 7, 40}) CHECK(llr_increment(y, 3.3, 3.3) == 0.0);
    CHECK(llr_increment(0, 2.0, 1.0) == doctest::Approx(-1.0));
    CHECK(llr_increment(3, 2.0, 1.0) == doctest::Approx(3.0 * std::log(2.0) - 1.0));
    CHECK(llr_increment(3, 2.0, 1.0) == doctest::Approx(1.0794).epsilon(1e-4));
    CHECK(llr_increment(5, 4.2, 1.3) ==
          doctest::Approx(std::log(oracle::pmf(5, 4.2) / oracle::pmf(5, 1.3))).epsilon(1e-12));
    CHECK_THROWS_AS(llr_increment(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(llr_increment(-1, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_SUITE("decision memory") {
  TEST_CASE("ring order and capacity") {
    DecisionMemory m(3);
    CHECK(m.empty());
    m.push(Symbol::s1);
    m.push(Symbol::s0);
    CHECK(m.size() == 2);
    CHECK(m[0] == Symbol::s0);
    CHECK(m[1] == Symbol::s1);
    m.push(Symbol::s1);
    m.push(Symbol::s1);
    CHECK(m.size() == 3);
    CHECK(m[0] == Symbol::s1);
    CHECK(m[1] == Symbol::s1);
    CHECK(m[2] == Symbol::s0);
    CHECK_THROWS_AS(m[3], std::out_of_range);
    m.clear();
    CHECK(m.empty());
    DecisionMemory none(0);
    none.push(Symbol::s1);
    CHECK(none.size() == 0);
  }
}

TEST_SUITE("isi estimate") {
  TEST_CASE("one remembered release") {
    const TapVector t = tap_vector(10, params());
    DecisionMemory m(1);
    m.push(Symbol::s1);
    const Modulation mod = sequence({100.0}, 100.0);
    CHECK(estimate_isi(1, m, mod, t) == doctest::Approx(100.0 * oracle::pi(2, kRho, 0.1, 0.0)).epsilon(1e-13));
    CHECK(estimate_isi(1, m, mod, t) == doctest::Approx(13.73).epsilon(0.001));
  }

  TEST_CASE("s0 memory and empty memory") {
    const TapVector t = tap_vector(40, params());
    const Modulation mod = sequence({5.0, 4.0, 3.0});
    DecisionMemory m(4);
    CHECK(estimate_isi(2, m, mod, t) == 0.0);
    for (int i = 0; i < 4; ++i) m.push(Symbol::s0);
    CHECK(estimate_isi(2, m, mod, t) == 0.0);
  }

  TEST_CASE("linear in remembered symbols") {
    const TapVector t = tap_vector(40, params());
    const Modulation mod = sequence({5.0, 4.0, 3.0});
    DecisionMemory both(2), last(2), first(2);
    both.push(Symbol::s1);
    both.push(Symbol::s1);
    last.push(Symbol::s0);
    last.push(Symbol::s1);
    first.push(Symbol::s1);
    first.push(Symbol::s0);
    for (int k = 1; k <= 3; ++k)
      CHECK(estimate_isi(k, both, mod, t) ==
            doctest::Approx(estimate_isi(k, last, mod, t) + estimate_isi(k, first, mod, t)).epsilon(1e-13));
  }

  TEST_CASE("receiver model agrees with direct convolution") {
    const Modulation mod = sequence({9.0, 0.0, 3.5, 1.0, 2.0});
    const ReceiverModel model(mod, params(0.1, 0.4), 4);
    DecisionMemory m(4);
    for (Symbol s : {Symbol::s1, Symbol::s0, Symbol::s1, Symbol::s1}) m.push(s);
    const VectorXd isi = model.isi(m);
    for (int k = 1; k <= 5; ++k) CHECK(isi(k - 1) == doctest::Approx(estimate_isi(k, m, mod, model.taps())).epsilon(1e-12));
    // The receiver ignores the true offset.
    CHECK(model.taps()[1] == doctest::Approx(oracle::pi(1, kRho, 0.1, 0.0)).epsilon(1e-14));
  }
}

TEST_SUITE("masprt") {
  TEST_CASE("immediate crossing") {
    const Modulation mod = sequence({5e5, 0.0, 0.0}, 1e6);
    const ReceiverModel model(mod, params(), 0);
    const DecisionMemory m(0);
    const std::vector<Count> y{4000, 0, 0};
    const DetectorOutcome out = masprt_detect(y, m, model, wald_thresholds(1e-3, 1e-3));
    CHECK(out.decision == Symbol::s1);
    CHECK(out.stop_time == 1);
    CHECK_FALSE(out.truncated);
  }

  TEST_CASE("sequential rule equals the brute-force replay on toy channels") {
    struct Toy {
      std::vector<double> l1, l0;
      double alpha, beta;
    };
    const std::vector<Toy> toys{
        {{2.0, 3.0}, {1.0, 0.8}, 1e-3, 1e-3},
        {{0.5, 4.5}, {0.3, 1.2}, 0.05, 0.1},
        {{1.5, 1.5, 5.0}, {1.2, 0.4, 2.0}, 0.1, 0.1},
    };
    for (const auto& toy : toys) {
      const WaldThresholds t = wald_thresholds(toy.alpha, toy.beta);
      const VectorXd l1 = Eigen::Map<const VectorXd>(toy.l1.data(), static_cast<Eigen::Index>(toy.l1.size()));
      const VectorXd l0 = Eigen::Map<const VectorXd>(toy.l0.data(), static_cast<Eigen::Index>(toy.l0.size()));
      const int n = static_cast<int>(toy.l1.size());
      const int cap = n == 3 ? 21 : 31;
      int checked = 0;
      std::vector<Count> y(static_cast<std::size_t>(n), 0);
      for (long code = 0; code < static_cast<long>(std::pow(cap, n)); ++code) {
        long c = code;
        for (int i = 0; i < n; ++i) {
          y[static_cast<std::size_t>(i)] = c % cap;
          c /= cap;
        }
        const DetectorOutcome got = sequential_test(y, l1, l0, t, TruncationMode::linear_domain);
        const oracle::Replay want = oracle::sprt_replay(y, toy.l1, toy.l0, t.A, t.B);
        CHECK(index_of(got.decision) == want.decision);
        CHECK(got.stop_time == want.stop);
        CHECK(got.stop_time >= 1);
        CHECK(got.stop_time <= n);
        if (got.truncated) CHECK(got.stop_time == n);
        ++checked;
      }
      CHECK(checked == static_cast<int>(std::pow(cap, n)));
    }
  }

  TEST_CASE("masprt_detect matches the replay with model means") {
    const Modulation mod = sequence({12.0, 20.0});
    const ReceiverModel model(mod, params(0.1), 2);
    DecisionMemory m(2);
    m.push(Symbol::s1);
    const HypothesisMeans means = model.means(m);
    const WaldThresholds t = wald_thresholds(0.02, 0.02);
    for (Count a = 0; a <= 30; ++a) {
      for (Count b = 0; b <= 30; ++b) {
        const std::vector<Count> y{a, b};
        const DetectorOutcome got = masprt_detect(y, m, model, t, TruncationMode::linear_domain);
        const oracle::Replay want = oracle::sprt_replay(y, to_std(means.s1), to_std(means.s0), t.A, t.B);
        CHECK(index_of(got.decision) == want.decision);
        CHECK(got.stop_time == want.stop);
      }
    }
  }

  TEST_CASE("log-domain truncation is the sign of the llr when alpha = beta") {
    const WaldThresholds t = wald_thresholds(1e-6, 1e-6);
    const VectorXd l1 = VectorXd::Constant(2, 1.2);
    const VectorXd l0 = VectorXd::Constant(2, 1.0);
    for (Count a = 0; a <= 6; ++a) {
      for (Count b = 0; b <= 6; ++b) {
        const std::vector<Count> y{a, b};
        const DetectorOutcome out = sequential_test(y, l1, l0, t);
        REQUIRE(out.truncated);
        if (out.final_llr > 0.0) CHECK(out.decision == Symbol::s1);
        if (out.final_llr < 0.0) CHECK(out.decision == Symbol::s0);
      }
    }
  }

  TEST_CASE("unreachable thresholds always truncate") {
    WaldThresholds t;
    t.A = 0.0;
    t.B = std::numeric_limits<double>::infinity();
    t.logA = -std::numeric_limits<double>::infinity();
    t.logB = std::numeric_limits<double>::infinity();
    const Modulation mod = sequence({30.0, 10.0, 5.0, 1.0});
    const ReceiverModel model(mod, params(), 1);
    const DecisionMemory m(1);
    CounterRng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<Count> y(4);
      for (auto& v : y) v = sample_poisson(4.0, rng);
      const DetectorOutcome out = masprt_detect(y, m, model, t);
      CHECK(out.truncated);
      CHECK(out.stop_time == 4);
    }
  }

  TEST_CASE("oracle memory reproduces the generation means") {
    const Modulation mod = sequence({20.0, 15.0, 10.0, 30.0, 5.0, 1.0}, 100.0);
    const int depth = 3;
    const ChannelParams p = params(0.05);
    std::vector<Symbol> bits;
    CounterRng rng(17);
    for (int i = 0; i < 60; ++i) bits.push_back((rng() >> 63) ? Symbol::s1 : Symbol::s0);
    const MatrixXd truth = packet_means(bits, mod, p, depth + 1);
    const ReceiverModel model(mod, p, depth);
    DecisionMemory memory(depth);
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const HypothesisMeans m = model.means(memory);
      const VectorXd& used = bits[i] == Symbol::s1 ? m.s1 : m.s0;
      for (int k = 0; k < mod.samples(); ++k)
        CHECK(std::fabs(used(k) - truth(static_cast<Eigen::Index>(i), k)) < 1e-12);
      memory.push(bits[i]);
    }
  }
}

TEST_SUITE("mlda") {
  TEST_CASE("gamma threshold") {
    const double pi1 = oracle::pi(1, kRho, 0.1, 0.0);
    const double gamma = mlda_threshold(0.0, 100.0, pi1, 0.0, 0.4);
    CHECK(gamma == doctest::Approx(pi1 * 100.0 / std::log((pi1 * 100.0 + 0.4) / 0.4)).epsilon(1e-13));
    CHECK(gamma == doctest::Approx(2.70).epsilon(0.005));
    CHECK(mlda_threshold(0.0, 100.0, pi1, 1e3, 0.4) > gamma);
    CHECK(mlda_threshold(0.0, 100.0, pi1, 1e9, 0.4) > 1e8);
    CHECK_THROWS_AS(mlda_threshold(5.0, 5.0, pi1, 0.0, 0.4), std::invalid_argument);
  }

  TEST_CASE("single-sample rule") {
    const Modulation mod = sequence({100.0}, 100.0);
    const ReceiverModel model(mod, params(), 2);
    const DecisionMemory m(2);
    const double gamma = mlda_threshold(0.0, 100.0, model.taps()[1], 0.0, 0.4);
    const std::vector<Count> hi{static_cast<Count>(std::ceil(gamma))};
    const std::vector<Count> lo{static_cast<Count>(std::floor(gamma)) - 1};
    CHECK(mlda_detect(hi, m, model).decision == Symbol::s1);
    CHECK(mlda_detect(lo, m, model).decision == Symbol::s0);
    CHECK(mlda_detect(hi, m, model).stop_time == 1);
  }

  TEST_CASE("single-sample rule equals joint ML") {
    const Modulation mod = sequence({37.0}, 100.0);
    const ReceiverModel model(mod, params(), 2);
    DecisionMemory m(2);
    m.push(Symbol::s1);
    const HypothesisMeans means = model.means(m);
    for (Count y = 0; y <= 60; ++y) {
      const std::vector<Count> w{y};
      const bool ml = oracle::pmf(y, means.s1(0)) >= oracle::pmf(y, means.s0(0));
      CHECK((mlda_detect(w, m, model).decision == Symbol::s1) == ml);
    }
  }

  TEST_CASE("joint ML on a two-sample toy channel") {
    const Modulation mod = sequence({6.0, 14.0});
    const ReceiverModel model(mod, params(), 1);
    DecisionMemory m(1);
    m.push(Symbol::s1);
    const HypothesisMeans means = model.means(m);
    for (Count a = 0; a <= 30; ++a) {
      for (Count b = 0; b <= 30; ++b) {
        const std::vector<Count> y{a, b};
        const double p1 = oracle::pmf(a, means.s1(0)) * oracle::pmf(b, means.s1(1));
        const double p0 = oracle::pmf(a, means.s0(0)) * oracle::pmf(b, means.s0(1));
        if (std::fabs(std::log(p1 / p0)) < 1e-9) continue;
        const DetectorOutcome out = mlda_detect(y, m, model);
        CHECK((out.decision == Symbol::s1) == (p1 >= p0));
        CHECK(out.stop_time == 2);
      }
    }
  }

  TEST_CASE("zero counts favour s0") {
    const Modulation mod = sequence({6.0, 14.0, 3.0});
    const ReceiverModel model(mod, params(), 1);
    const DecisionMemory m(1);
    const std::vector<Count> y{0, 0, 0};
    CHECK(mlda_detect(y, m, model).decision == Symbol::s0);
  }
}

TEST_SUITE("addf") {
  TEST_CASE("corrected maximum against eta") {
    // N = 3 release with memory [s1] whose ISI is 0.5 at every sample.
    const Modulation mod = sequence({1.0, 1.0, 1.0});
    const ReceiverModel model(mod, params(), 1);
    DecisionMemory m(1);
    m.push(Symbol::s1);
    const VectorXd isi = model.isi(m);
    const std::vector<Count> y{1, 5, 2};
    double expected = -1e300;
    for (int k = 0; k < 3; ++k) expected = std::max(expected, double(y[static_cast<std::size_t>(k)]) - isi(k));
    const DetectorOutcome out = addf_detect(y, m, model, 3.0);
    CHECK(out.final_llr == doctest::Approx(expected));
    CHECK(out.decision == (expected >= 3.0 ? Symbol::s1 : Symbol::s0));
    CHECK(out.stop_time == 3);
  }

  TEST_CASE("unreachable eta and ties") {
    const Modulation mod = sequence({10.0, 10.0, 10.0});
    const ReceiverModel model(mod, params(), 0);
    const DecisionMemory m(0);
    const std::vector<Count> big{500, 900, 700};
    CHECK(addf_detect(big, m, model, std::numeric_limits<double>::infinity()).decision == Symbol::s0);
    const std::vector<Count> flat{4, 4, 4};
    CHECK(addf_detect(flat, m, model, 4.0).decision == Symbol::s1);
    CHECK(addf_detect(flat, m, model, 4.0).final_llr == 4.0);
    CHECK(addf_detect(flat, m, model, 4.5).decision == Symbol::s0);
  }
}

TEST_SUITE("stopping under s0") {
  TEST_CASE("all-zero packets stop identically at every offset") {
    Modulation mod;
    mod.x1 = VectorXd::Constant(20, 100.0 / std::sqrt(20.0));
    ExperimentSpec spec;
    spec.modulation = mod;
    spec.bits = 4000;
    spec.memory_depth = 5;
    const std::vector<Symbol> zeros(4000, Symbol::s0);
    std::vector<TrialResult> results;
    for (double tau : {0.0, 0.5}) {
      spec.channel.tau = tau;
      const SampleMatrix packet = simulate_packet(zeros, mod, spec.channel, 77, spec.horizon());
      results.push_back(detect_packet(packet, spec));
    }
    // With no s1 sent the means do not depend on tau, so the packets coincide.
    CHECK(results[0].stop_sum[0] == results[1].stop_sum[0]);
    CHECK(results[0].mean_stop(Symbol::s0) >= 1.0);
    CHECK(results[0].mean_stop(Symbol::s0) <= 20.0);
  }
}
