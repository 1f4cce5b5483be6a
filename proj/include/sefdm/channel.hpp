#pragma once

#include <random>

#include "json.hpp"
#include "sefdm/types.hpp"

namespace sefdm {

/// Multipath, fading and oscillator impairments. Defaults: 200 kHz sampling,
/// 900 MHz carrier.
struct ChannelProfile {
  std::vector<double> path_delays_s{0.0, 9e-6, 1.7e-5};
  std::vector<double> path_powers_db{0.0, -2.0, -10.0};
  double k_factor = 4.0;  // tap 0 line-of-sight to scattered power; infinity = pure LOS
  double max_doppler_hz = 4.0;
  double cfo_ppm = 2.0;
  double rf_center_hz = 900e6;
  double sample_rate_hz = 200e3;
  double antenna_gain_dbi = 2.0;  // recorded for completeness, not applied
  int n_sinusoids = 32;           // sum-of-sinusoids Doppler model order

  static ChannelProfile reference() { return {}; }

  void validate() const;
  /// Delays rounded half-up to whole samples at sample_rate_hz.
  std::vector<int> delays_in_samples() const;
  /// Linear tap powers scaled to sum to one.
  std::vector<double> normalized_tap_powers() const;
  double cfo_hz() const { return cfo_ppm * 1e-6 * rf_center_hz; }
};

nlohmann::json profile_to_json(const ChannelProfile& profile);
ChannelProfile profile_from_json(const nlohmann::json& j);
ChannelProfile load_profile(const std::string& path);

struct NoiseSpec {
  double es_n0_db = 0.0;  // +infinity means noiseless
};

/// Adds circular complex Gaussian noise. Per-sample variance is
/// Es / 10^(EsN0/10) with Es = oversampling * mean sample energy of the
/// frame, i.e. the average energy per transmitted constellation symbol.
IqFrame awgn(const IqFrame& frame, const NoiseSpec& spec, std::uint64_t rng_seed);

/// Sum-of-sinusoids Rayleigh process with Jakes spectrum:
///   g(t) = M^{-1/2} sum_m exp(j (2 pi f_d cos(theta_m) t + phi_m)),
/// theta_m, phi_m uniform. E[g(t) g*(t + tau)] = J0(2 pi f_d tau), E|g|^2 = 1.
class JakesProcess {
 public:
  JakesProcess(double max_doppler_hz, int n_sinusoids, std::mt19937_64& rng);
  cplx at(double t_seconds) const;

 private:
  std::vector<double> doppler_;  // 2 pi f_d cos(theta_m)
  std::vector<double> phase_;
  double scale_;
};

/// Realized per-sample tap gains of one fading draw.
struct TapTrace {
  std::vector<int> delays_samples;
  std::vector<cplx> los;             // fixed line-of-sight part of each tap
  std::vector<CVector> gains;        // gains[tap][sample]

  /// Tap gains averaged over the frame (the quasi-static channel).
  CVector mean_gains() const;
  /// Frequency response of the mean taps at f cycles/sample.
  cplx response(double cycles_per_sample) const;
};

/// Tapped-delay-line channel with tap 0 Rician and the rest Rayleigh, Doppler
/// from independent Jakes processes. Each call is an independent draw.
std::pair<IqFrame, TapTrace> rician_multipath(const IqFrame& frame, const ChannelProfile& profile,
                                              std::uint64_t rng_seed);

/// Rotates sample k by exp(j 2 pi f_off k / fs), f_off = ppm * 1e-6 * f_rf.
IqFrame apply_cfo(const IqFrame& frame, const ChannelProfile& profile);

}  // namespace sefdm
