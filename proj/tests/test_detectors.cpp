#include <cmath>
#include <limits>

#include "doctest.h"
#include "sefdm/channel.hpp"
#include "sefdm/detectors.hpp"

using namespace sefdm;

namespace {

struct Trial {
  Bits bits;
  IqFrame rx;
};

Trial make_trial(const WaveformConfig& cfg, double es_n0_db, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Trial t;
  t.bits.resize(2 * static_cast<std::size_t>(cfg.n_subcarriers()));
  for (auto& b : t.bits) b = static_cast<std::uint8_t>(rng() & 1u);
  t.rx = awgn(modulate(qpsk_map(t.bits), cfg), NoiseSpec{es_n0_db}, seed ^ 0x9e3779b97f4a7c15ULL);
  return t;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t full_tree(int dim) {
  std::uint64_t total = 0;
  for (int n = 1; n <= dim; ++n) total += std::uint64_t{1} << n;
  return total;
}

// One-sided sign test on paired counts: "first tends to exceed second".
bool sign_test_greater(const std::vector<std::uint64_t>& first, const std::vector<std::uint64_t>& second) {
  int plus = 0, minus = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] > second[i]) ++plus;
    if (first[i] < second[i]) ++minus;
  }
  if (plus + minus == 0) return false;
  return (plus - minus) / std::sqrt(static_cast<double>(plus + minus)) > 2.33;
}

}  // namespace

TEST_CASE("names") {
  CHECK(detector_from_string("SD") == DetectorId::SD);
  CHECK(detector_from_string("MultiSD") == DetectorId::MultiSD);
  CHECK(to_string(DetectorId::ML) == "ML");
  CHECK(radius_policy_from_string("unbounded") == RadiusPolicy::Unbounded);
  CHECK_THROWS_AS(detector_from_string("ZF"), InvalidInput);
}

TEST_CASE("matched filter") {
  SUBCASE("orthogonal, noiseless recovers the symbols") {
    for (int rho : {1, 8}) {
      const auto cfg = WaveformConfig::make(16, 1.0, rho);
      const auto t = make_trial(cfg, kInf, 1);
      const auto z = matched_filter_demod(t.rx, cfg);
      const auto s = qpsk_map(t.bits);
      for (std::size_t n = 0; n < s.size(); ++n) CHECK(std::abs(z[n] - s[n]) < 1e-10);
    }
  }
  SUBCASE("compressed, noiseless gives C s") {
    for (auto cfg : {WaveformConfig::make(12, 0.8), WaveformConfig::make(16, 0.7, 2),
                     WaveformConfig::make(16, 0.8, 8, BandPlan{2, 8, 1})}) {
      const auto t = make_trial(cfg, kInf, 2);
      const auto z = matched_filter_demod(t.rx, cfg);
      const auto s = qpsk_map(t.bits);
      const Eigen::VectorXcd cs =
          correlation_operator(cfg) * Eigen::Map<const Eigen::VectorXcd>(s.data(), static_cast<Eigen::Index>(s.size()));
      for (int n = 0; n < cfg.n_subcarriers(); ++n) CHECK(std::abs(z[static_cast<std::size_t>(n)] - cs(n)) < 1e-10);
    }
  }
  SUBCASE("zero input") {
    const auto cfg = WaveformConfig::make(8, 0.8);
    IqFrame zero;
    zero.samples.assign(static_cast<std::size_t>(cfg.frame_len()), cplx{});
    for (const auto& v : matched_filter_demod(zero, cfg)) CHECK(v == cplx{});
  }
  SUBCASE("length mismatch") {
    const auto cfg = WaveformConfig::make(8, 0.8);
    IqFrame bad;
    bad.samples.resize(10);
    CHECK_THROWS_AS(matched_filter_demod(bad, cfg), InvalidInput);
  }
  SUBCASE("hard decisions") {
    const auto cfg = WaveformConfig::make(8, 1.0);
    const auto t = make_trial(cfg, 30.0, 3);
    const auto r = mf_hard_detect(t.rx, cfg);
    CHECK(r.bits == t.bits);
    CHECK(r.visited_nodes == 0);
    CHECK(r.detector == DetectorId::MF);
  }
}

TEST_CASE("observation model") {
  const auto cfg = WaveformConfig::make(6, 0.75);
  const ObservationModel m(carrier_matrix(cfg));
  const auto& phi = m.carriers();
  const auto k = phi.rows();
  Eigen::MatrixXd h(2 * k, 2 * phi.cols());
  h << phi.real(), -phi.imag(), phi.imag(), phi.real();
  CHECK((m.q() * m.r() - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.q().transpose() * m.q() - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 12; ++i) {
    CHECK(m.r()(i, i) >= 0.0);
    for (int j = 0; j < i; ++j) CHECK(m.r()(i, j) == 0.0);
  }
  CHECK((phi.adjoint() * phi - cfg.alpha_effective() * correlation_operator(cfg)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sphere search finds the lattice minimum") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  const double level = 1.0 / std::sqrt(2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + trial % 8;
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      r(i, i) = std::abs(g(rng)) + 0.05;
      for (int j = i + 1; j < dim; ++j) r(i, j) = g(rng);
    }
    Eigen::VectorXd y(dim);
    for (auto& v : y) v = g(rng);

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    for (unsigned mask = 0; mask < (1u << dim); ++mask) {
      Eigen::VectorXd x(dim);
      for (int i = 0; i < dim; ++i) x(i) = (mask >> i) & 1u ? level : -level;
      const double d = (y - r * x).squaredNorm();
      if (d < best) best = d, best_x = x;
    }
    for (auto policy : {RadiusPolicy::Babai, RadiusPolicy::Unbounded}) {
      const auto found = sphere_search(r, y, level, policy);
      CHECK(found.metric == doctest::Approx(best).epsilon(1e-12));
      CHECK(found.x == best_x);
      CHECK(found.visited_nodes <= full_tree(dim));
    }
  }
}

TEST_CASE("ml") {
  SUBCASE("noiseless recovery") {
    for (double alpha : {1.0, 0.9, 0.8, 0.7, 0.6}) {
      const auto cfg = WaveformConfig::make(5, alpha);
      for (std::uint64_t s = 0; s < 20; ++s) {
        const auto t = make_trial(cfg, kInf, s);
        const auto r = ml_detect(t.rx, cfg);
        CHECK(r.bits == t.bits);
        CHECK(r.visited_nodes == 1024);
      }
    }
  }
  SUBCASE("orthogonal ML decouples into the matched filter") {
    const auto cfg = WaveformConfig::make(4, 1.0);
    for (std::uint64_t s = 0; s < 300; ++s) {
      const auto t = make_trial(cfg, 2.0, s);
      CHECK(ml_detect(t.rx, cfg).bits == mf_hard_detect(t.rx, cfg).bits);
    }
  }
  SUBCASE("capacity guard") {
    const auto cfg = WaveformConfig::make(kMaxMlSubcarriers + 1, 0.8);
    const auto t = make_trial(cfg, kInf, 1);
    CHECK_THROWS_AS(ml_detect(t.rx, cfg), CapacityError);
  }
}

TEST_CASE("sd agrees with ml") {
  for (int n = 1; n <= 4; ++n) {
    for (double alpha : {1.0, 0.9, 0.8}) {
      const auto cfg = WaveformConfig::make(n, alpha);
      for (double es_n0 : {0.0, 10.0, 20.0}) {
        int mismatches = 0;
        for (std::uint64_t s = 0; s < 1000; ++s) {
          const auto t = make_trial(cfg, es_n0, s * 7919 + static_cast<std::uint64_t>(n));
          const auto ml = ml_detect(t.rx, cfg);
          for (auto policy : {RadiusPolicy::Babai, RadiusPolicy::Unbounded}) {
            const auto sd = sphere_detect(t.rx, cfg, policy);
            mismatches += sd.bits != ml.bits;
            CHECK(sd.visited_nodes <= full_tree(2 * n));
          }
        }
        CHECK_MESSAGE(mismatches == 0, "N=" << n << " alpha=" << alpha << " EsN0=" << es_n0);
      }
    }
  }
}

TEST_CASE("sd node counts") {
  SUBCASE("orthogonal tree collapses to one path") {
    for (int n : {4, 12, 32}) {
      const auto cfg = WaveformConfig::make(n, 1.0);
      const auto r = sphere_detect(make_trial(cfg, kInf, 5).rx, cfg);
      CHECK(r.visited_nodes == static_cast<std::uint64_t>(2 * n));
      const auto t = make_trial(cfg, 10.0, 5);
      CHECK(sphere_detect(t.rx, cfg).bits == mf_hard_detect(t.rx, cfg).bits);
    }
  }
  SUBCASE("bound holds for compressed frames") {
    for (double alpha : {0.9, 0.8, 0.7, 0.6}) {
      const auto cfg = WaveformConfig::make(8, alpha);
      for (std::uint64_t s = 0; s < 50; ++s) {
        const auto t = make_trial(cfg, 5.0, s);
        CHECK(sphere_detect(t.rx, cfg, RadiusPolicy::Unbounded).visited_nodes <= full_tree(16));
        CHECK(sphere_detect(t.rx, cfg).visited_nodes <= full_tree(16));
      }
    }
  }
  SUBCASE("noiseless recovery") {
    for (double alpha : {0.9, 0.8, 0.7}) {
      const auto cfg = WaveformConfig::make(16, alpha);
      for (std::uint64_t s = 0; s < 10; ++s) {
        const auto t = make_trial(cfg, kInf, s);
        CHECK(sphere_detect(t.rx, cfg).bits == t.bits);
      }
    }
  }
  SUBCASE("capacity guard") {
    const auto cfg = WaveformConfig::make(kMaxSdSubcarriers + 1, 0.8);
    CHECK_THROWS_AS(Receiver(cfg, DetectorId::SD), CapacityError);
  }
}

TEST_CASE("sd hardness trends") {
  const int trials = 1000;
  auto visited = [&](double alpha, double es_n0) {
    const auto cfg = WaveformConfig::make(8, alpha);
    const Receiver rx(cfg, DetectorId::SD);
    std::vector<std::uint64_t> out;
    for (int s = 0; s < trials; ++s) {
      out.push_back(rx.detect(make_trial(cfg, es_n0, static_cast<std::uint64_t>(s)).rx).visited_nodes);
    }
    return out;
  };
  // Lower Es/N0 costs more nodes.
  const auto low = visited(0.7, 0.0), mid = visited(0.7, 10.0), high = visited(0.7, 20.0);
  CHECK(sign_test_greater(low, mid));
  CHECK(sign_test_greater(mid, high));
  // Stronger compression costs more nodes.
  const auto a9 = visited(0.9, 10.0), a8 = visited(0.8, 10.0), a7 = visited(0.7, 10.0);
  CHECK(sign_test_greater(a8, a9));
  CHECK(sign_test_greater(a7, a8));
}

TEST_CASE("multisd") {
  SUBCASE("one band is plain sd") {
    const auto plain = WaveformConfig::make(8, 0.8);
    const auto banded = WaveformConfig::make(8, 0.8, 8, BandPlan{1, 8, 0});
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto t = make_trial(plain, 5.0, s);
      const auto a = sphere_detect(t.rx, plain);
      const auto b = multisd_detect(t.rx, banded);
      CHECK(a.bits == b.bits);
      CHECK(a.visited_nodes == b.visited_nodes);
    }
  }
  SUBCASE("noiseless recovery at 256 carriers") {
    const auto cfg = WaveformConfig::make(256, 0.8, 8, BandPlan{32, 8, 1});
    const Receiver rx(cfg, DetectorId::MultiSD);
    for (std::uint64_t s = 0; s < 50; ++s) {
      const auto t = make_trial(cfg, kInf, s);
      CHECK(rx.detect(t.rx).bits == t.bits);
    }
  }
  SUBCASE("node bound") {
    const auto cfg = WaveformConfig::make(64, 0.8, 8, BandPlan{8, 8, 1});
    const std::uint64_t per_pass = 8 * full_tree(16);
    const Receiver single(cfg, DetectorId::MultiSD, RadiusPolicy::Babai, 0);
    const Receiver iterated(cfg, DetectorId::MultiSD);
    for (std::uint64_t s = 0; s < 30; ++s) {
      const auto t = make_trial(cfg, 5.0, s);
      CHECK(single.detect(t.rx).visited_nodes <= per_pass);
      CHECK(iterated.detect(t.rx).visited_nodes <= (1 + kMultiSdCancellationPasses) * per_pass);
    }
  }
  SUBCASE("cancellation does not hurt") {
    const auto cfg = WaveformConfig::make(64, 0.8, 8, BandPlan{8, 8, 1});
    const Receiver single(cfg, DetectorId::MultiSD, RadiusPolicy::Babai, 0);
    const Receiver iterated(cfg, DetectorId::MultiSD);
    int errors_single = 0, errors_iterated = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto t = make_trial(cfg, 25.0, s);
      const auto a = single.detect(t.rx).bits, b = iterated.detect(t.rx).bits;
      for (std::size_t i = 0; i < t.bits.size(); ++i) {
        errors_single += a[i] != t.bits[i];
        errors_iterated += b[i] != t.bits[i];
      }
    }
    MESSAGE("bit errors at 25 dB, single pass " << errors_single << ", with cancellation " << errors_iterated);
    CHECK(errors_iterated <= errors_single);
  }
  SUBCASE("guards") {
    CHECK_THROWS_AS(Receiver(WaveformConfig::make(8, 0.8), DetectorId::MultiSD), InvalidInput);
    CHECK_THROWS_AS(Receiver(WaveformConfig::make(64, 0.8, 8, BandPlan{2, 32, 1}), DetectorId::MultiSD), CapacityError);
  }
}

TEST_CASE("genie channel knowledge") {
  auto profile = ChannelProfile::reference();
  profile.max_doppler_hz = 0.0;
  for (auto [id, cfg] : {std::pair{DetectorId::SD, WaveformConfig::make(12, 0.8)},
                         std::pair{DetectorId::MF, WaveformConfig::make(16, 1.0)},
                         std::pair{DetectorId::MultiSD, WaveformConfig::make(64, 0.8, 8, BandPlan{8, 8, 1})}}) {
    const Receiver rx(cfg, id);
    int errors = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto t = make_trial(cfg, 30.0, s);
      const auto [faded, trace] = rician_multipath(t.rx, profile, s);
      CVector gains;
      for (double p : cfg.subcarrier_positions()) gains.push_back(trace.response(p / cfg.frame_len()));
      const auto got = rx.detect(faded, gains).bits;
      for (std::size_t i = 0; i < got.size(); ++i) errors += got[i] != t.bits[i];
    }
    CHECK_MESSAGE(errors == 0, to_string(id));
  }
  const auto cfg = WaveformConfig::make(8, 0.8);
  const Receiver rx(cfg, DetectorId::SD);
  CHECK_THROWS_AS(rx.detect(make_trial(cfg, kInf, 1).rx, CVector(3, 1.0)), InvalidInput);
}
