#include "sefdm/channel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "sefdm/rng.hpp"

namespace sefdm {

void ChannelProfile::validate() const {
  if (path_delays_s.empty()) throw InvalidInput("channel profile needs at least one path");
  if (path_delays_s.size() != path_powers_db.size()) {
    throw InvalidInput("path delay and power lists differ in length");
  }
  if (path_delays_s.front() != 0.0) throw InvalidInput("first path delay must be 0");
  for (std::size_t i = 1; i < path_delays_s.size(); ++i) {
    if (path_delays_s[i] < path_delays_s[i - 1]) throw InvalidInput("path delays must be nondecreasing");
  }
  if (path_powers_db.front() != 0.0) throw InvalidInput("first path power must be 0 dB");
  if (!(k_factor >= 0.0)) throw InvalidInput("k_factor must be nonnegative");
  if (!(max_doppler_hz >= 0.0)) throw InvalidInput("max_doppler_hz must be nonnegative");
  if (!(rf_center_hz > 0.0) || !(sample_rate_hz > 0.0)) throw InvalidInput("frequencies must be positive");
  if (n_sinusoids < 1) throw InvalidInput("n_sinusoids must be positive");
}

std::vector<int> ChannelProfile::delays_in_samples() const {
  std::vector<int> out;
  out.reserve(path_delays_s.size());
  for (double d : path_delays_s) out.push_back(static_cast<int>(std::floor(d * sample_rate_hz + 0.5)));
  return out;
}

std::vector<double> ChannelProfile::normalized_tap_powers() const {
  std::vector<double> p;
  double total = 0.0;
  for (double db : path_powers_db) {
    p.push_back(std::pow(10.0, db / 10.0));
    total += p.back();
  }
  for (auto& v : p) v /= total;
  return p;
}

nlohmann::json profile_to_json(const ChannelProfile& p) {
  nlohmann::json j;
  j["sampling_frequency_khz"] = p.sample_rate_hz / 1e3;
  j["rf_center_frequency_mhz"] = p.rf_center_hz / 1e6;
  j["path_delay_s"] = p.path_delays_s;
  j["path_relative_power_db"] = p.path_powers_db;
  j["maximum_doppler_frequency_hz"] = p.max_doppler_hz;
  if (std::isinf(p.k_factor)) {
    j["k_factor"] = "inf";
  } else {
    j["k_factor"] = p.k_factor;
  }
  j["frequency_offset_ppm"] = p.cfo_ppm;
  j["antenna_gain_dbi"] = p.antenna_gain_dbi;
  j["doppler_sinusoids"] = p.n_sinusoids;
  return j;
}

ChannelProfile profile_from_json(const nlohmann::json& j) {
  ChannelProfile p;
  p.sample_rate_hz = j.value("sampling_frequency_khz", p.sample_rate_hz / 1e3) * 1e3;
  p.rf_center_hz = j.value("rf_center_frequency_mhz", p.rf_center_hz / 1e6) * 1e6;
  p.path_delays_s = j.value("path_delay_s", p.path_delays_s);
  p.path_powers_db = j.value("path_relative_power_db", p.path_powers_db);
  p.max_doppler_hz = j.value("maximum_doppler_frequency_hz", p.max_doppler_hz);
  if (j.contains("k_factor")) {
    const auto& k = j.at("k_factor");
    p.k_factor = k.is_string() ? std::numeric_limits<double>::infinity() : k.get<double>();
  }
  p.cfo_ppm = j.value("frequency_offset_ppm", p.cfo_ppm);
  p.antenna_gain_dbi = j.value("antenna_gain_dbi", p.antenna_gain_dbi);
  p.n_sinusoids = j.value("doppler_sinusoids", p.n_sinusoids);
  p.validate();
  return p;
}

ChannelProfile load_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open channel profile " + path);
  return profile_from_json(nlohmann::json::parse(in));
}

IqFrame awgn(const IqFrame& frame, const NoiseSpec& spec, std::uint64_t rng_seed) {
  IqFrame out = frame;
  out.meta.es_n0_db = spec.es_n0_db;
  if (std::isinf(spec.es_n0_db) && spec.es_n0_db > 0.0) return out;
  if (frame.samples.empty()) return out;

  double energy = 0.0;
  for (const auto& x : frame.samples) energy += std::norm(x);
  const double mean_energy = energy / static_cast<double>(frame.samples.size());
  const double es = mean_energy * frame.meta.oversampling;
  const double variance = es / std::pow(10.0, spec.es_n0_db / 10.0);
  const double sigma = std::sqrt(variance / 2.0);

  auto rng = derive_rng(rng_seed, {0x6177676eULL});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : out.samples) {
    const double re = normal(rng);
    const double im = normal(rng);
    x += cplx(sigma * re, sigma * im);
  }
  return out;
}

JakesProcess::JakesProcess(double max_doppler_hz, int n_sinusoids, std::mt19937_64& rng)
    : scale_(1.0 / std::sqrt(static_cast<double>(n_sinusoids))) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  doppler_.reserve(static_cast<std::size_t>(n_sinusoids));
  phase_.reserve(static_cast<std::size_t>(n_sinusoids));
  for (int m = 0; m < n_sinusoids; ++m) {
    const double theta = angle(rng);
    doppler_.push_back(2.0 * std::numbers::pi * max_doppler_hz * std::cos(theta));
    phase_.push_back(angle(rng));
  }
}

cplx JakesProcess::at(double t_seconds) const {
  cplx acc{};
  for (std::size_t m = 0; m < doppler_.size(); ++m) acc += std::polar(1.0, doppler_[m] * t_seconds + phase_[m]);
  return acc * scale_;
}

CVector TapTrace::mean_gains() const {
  CVector out;
  out.reserve(gains.size());
  for (const auto& g : gains) {
    cplx acc{};
    for (const auto& v : g) acc += v;
    out.push_back(g.empty() ? cplx{} : acc / static_cast<double>(g.size()));
  }
  return out;
}

cplx TapTrace::response(double cycles_per_sample) const {
  const CVector mean = mean_gains();
  cplx h{};
  for (std::size_t l = 0; l < mean.size(); ++l) {
    h += mean[l] * std::polar(1.0, -2.0 * std::numbers::pi * cycles_per_sample * delays_samples[l]);
  }
  return h;
}

std::pair<IqFrame, TapTrace> rician_multipath(const IqFrame& frame, const ChannelProfile& profile,
                                              std::uint64_t rng_seed) {
  profile.validate();
  const auto n = frame.samples.size();
  TapTrace trace;
  trace.delays_samples = profile.delays_in_samples();
  for (int d : trace.delays_samples) {
    if (static_cast<std::size_t>(d) >= n) throw InvalidInput("path delay exceeds frame length");
  }

  const auto powers = profile.normalized_tap_powers();
  auto rng = derive_rng(rng_seed, {0x72696369ULL});
  const double k = profile.k_factor;
  for (std::size_t l = 0; l < powers.size(); ++l) {
    double los_amp = 0.0;
    double scatter_amp = 1.0;
    if (l == 0) {
      los_amp = std::isinf(k) ? 1.0 : std::sqrt(k / (k + 1.0));
      scatter_amp = std::isinf(k) ? 0.0 : std::sqrt(1.0 / (k + 1.0));
    }
    const double amp = std::sqrt(powers[l]);
    JakesProcess scatter(profile.max_doppler_hz, profile.n_sinusoids, rng);
    trace.los.emplace_back(amp * los_amp, 0.0);
    CVector g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / profile.sample_rate_hz;
      g[i] = trace.los.back() + (scatter_amp == 0.0 ? cplx{} : amp * scatter_amp * scatter.at(t));
    }
    trace.gains.push_back(std::move(g));
  }

  IqFrame out = frame;
  for (std::size_t i = 0; i < n; ++i) {
    cplx acc{};
    for (std::size_t l = 0; l < trace.gains.size(); ++l) {
      const auto d = static_cast<std::size_t>(trace.delays_samples[l]);
      if (i >= d) acc += trace.gains[l][i] * frame.samples[i - d];
    }
    out.samples[i] = acc;
  }
  return {std::move(out), std::move(trace)};
}

IqFrame apply_cfo(const IqFrame& frame, const ChannelProfile& profile) {
  IqFrame out = frame;
  const double cycles_per_sample = profile.cfo_hz() / profile.sample_rate_hz;
  if (cycles_per_sample == 0.0) return out;
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    const double turns = std::fmod(cycles_per_sample * static_cast<double>(k), 1.0);
    out.samples[k] *= std::polar(1.0, 2.0 * std::numbers::pi * turns);
  }
  return out;
}

}  // namespace sefdm
