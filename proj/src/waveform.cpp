#include "sefdm/waveform.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "sefdm/fft.hpp"

namespace sefdm {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Largest common grid for which multiband generation goes through one FFT.
constexpr long kMaxCommonGrid = 1L << 16;

long positive_mod(long value, long modulus) {
  long r = value % modulus;
  return r < 0 ? r + modulus : r;
}

CVector twiddles(long n) {
  CVector table(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    table[static_cast<std::size_t>(i)] = std::polar(1.0, phase);
  }
  return table;
}

void check_length(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  if (static_cast<int>(symbols.size()) != cfg.n_subcarriers()) {
    throw InvalidInput("symbol count " + std::to_string(symbols.size()) +
                       " does not match n_subcarriers " + std::to_string(cfg.n_subcarriers()));
  }
}

IqFrame make_frame(CVector samples, const WaveformConfig& cfg) {
  return IqFrame{std::move(samples), cfg.frame_meta()};
}

// Frequency difference between two slots as num / (ifft_len * frame_len) cycles/sample.
long slot_difference(const CarrierSlot& a, const CarrierSlot& b, long ifft_len, long frame_len) {
  return (a.compressed - b.compressed) * frame_len + (a.orthogonal - b.orthogonal) * ifft_len;
}

}  // namespace

WaveformConfig WaveformConfig::make(int n_subcarriers, double alpha, int oversampling,
                                    std::optional<BandPlan> band_plan) {
  if (n_subcarriers <= 0) throw InvalidInput("n_subcarriers must be positive");
  if (oversampling <= 0) throw InvalidInput("oversampling must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must lie in (0, 1]");
  if (band_plan) {
    if (band_plan->n_bands <= 0 || band_plan->band_size <= 0 || band_plan->guard_subcarriers < 0) {
      throw InvalidInput("band plan fields must be positive (guard nonnegative)");
    }
    if (band_plan->n_bands * band_plan->band_size != n_subcarriers) {
      throw InvalidInput("band plan n_bands * band_size must equal n_subcarriers");
    }
  }
  WaveformConfig cfg;
  cfg.n_subcarriers_ = n_subcarriers;
  cfg.alpha_target_ = alpha;
  cfg.oversampling_ = oversampling;
  const double exact = static_cast<double>(n_subcarriers) * oversampling / alpha;
  cfg.ifft_len_ = static_cast<int>(std::lround(exact));
  cfg.band_plan_ = band_plan;
  return cfg;
}

WaveformConfig WaveformConfig::with_alpha(double alpha) const {
  return make(n_subcarriers_, alpha, oversampling_, band_plan_);
}

WaveformConfig WaveformConfig::without_band_plan() const {
  return make(n_subcarriers_, alpha_target_, oversampling_, std::nullopt);
}

std::vector<CarrierSlot> WaveformConfig::carrier_slots() const {
  std::vector<CarrierSlot> slots(static_cast<std::size_t>(n_subcarriers_));
  for (int n = 0; n < n_subcarriers_; ++n) {
    long orthogonal = 0;
    if (band_plan_) orthogonal = static_cast<long>(n / band_plan_->band_size) * band_plan_->guard_subcarriers;
    slots[static_cast<std::size_t>(n)] = CarrierSlot{n, orthogonal};
  }
  return slots;
}

std::vector<double> WaveformConfig::subcarrier_positions() const {
  std::vector<double> positions;
  positions.reserve(static_cast<std::size_t>(n_subcarriers_));
  for (const auto& slot : carrier_slots()) {
    positions.push_back(static_cast<double>(slot.compressed) * alpha_effective() +
                        static_cast<double>(slot.orthogonal));
  }
  return positions;
}

FrameMeta WaveformConfig::frame_meta() const {
  FrameMeta meta;
  meta.alpha_effective = alpha_effective();
  meta.n_subcarriers = n_subcarriers_;
  meta.oversampling = oversampling_;
  return meta;
}

SymbolVector qpsk_map(std::span<const std::uint8_t> bits) {
  if (bits.size() % 2 != 0) throw InvalidInput("qpsk_map needs an even number of bits");
  SymbolVector symbols;
  symbols.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    const double re = 1.0 - 2.0 * (bits[i] & 1u);
    const double im = 1.0 - 2.0 * (bits[i + 1] & 1u);
    symbols.emplace_back(re * kInvSqrt2, im * kInvSqrt2);
  }
  return symbols;
}

Bits qpsk_demap_hard(std::span<const cplx> symbols) {
  Bits bits;
  bits.reserve(symbols.size() * 2);
  for (const auto& s : symbols) {
    bits.push_back(s.real() < 0.0 ? 1 : 0);
    bits.push_back(s.imag() < 0.0 ? 1 : 0);
  }
  return bits;
}

SymbolVector qpsk_slice(std::span<const cplx> symbols) {
  SymbolVector out;
  out.reserve(symbols.size());
  for (const auto& s : symbols) {
    out.emplace_back(s.real() < 0.0 ? -kInvSqrt2 : kInvSqrt2, s.imag() < 0.0 ? -kInvSqrt2 : kInvSqrt2);
  }
  return out;
}

IqFrame sefdm_modulate(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  check_length(symbols, cfg);
  CVector padded(static_cast<std::size_t>(cfg.ifft_len()), cplx{});
  std::copy(symbols.begin(), symbols.end(), padded.begin());
  CVector time = fft_inverse(padded);
  time.resize(static_cast<std::size_t>(cfg.frame_len()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.ifft_len()));
  for (auto& x : time) x *= scale;
  return make_frame(std::move(time), cfg);
}

CVector modulate_direct(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  check_length(symbols, cfg);
  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const CVector tw_compressed = twiddles(ifft_len);
  const CVector tw_orthogonal = twiddles(frame_len);
  const auto slots = cfg.carrier_slots();
  const double scale = 1.0 / std::sqrt(static_cast<double>(ifft_len));

  CVector out(static_cast<std::size_t>(frame_len), cplx{});
  for (long k = 0; k < frame_len; ++k) {
    cplx acc{};
    for (std::size_t n = 0; n < slots.size(); ++n) {
      const auto& slot = slots[n];
      cplx phasor = tw_compressed[static_cast<std::size_t>(positive_mod(slot.compressed * k, ifft_len))];
      if (slot.orthogonal != 0) {
        phasor *= tw_orthogonal[static_cast<std::size_t>(positive_mod(slot.orthogonal * k, frame_len))];
      }
      acc += symbols[n] * phasor;
    }
    out[static_cast<std::size_t>(k)] = acc * scale;
  }
  return out;
}

IqFrame multiband_modulate(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  if (!cfg.band_plan()) throw InvalidInput("multiband_modulate requires a band plan");
  check_length(symbols, cfg);

  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const long grid = std::lcm(ifft_len, frame_len);
  if (grid > kMaxCommonGrid) return make_frame(modulate_direct(symbols, cfg), cfg);

  CVector spectrum(static_cast<std::size_t>(grid), cplx{});
  const auto slots = cfg.carrier_slots();
  for (std::size_t n = 0; n < slots.size(); ++n) {
    const long bin = slots[n].compressed * (grid / ifft_len) + slots[n].orthogonal * (grid / frame_len);
    spectrum[static_cast<std::size_t>(positive_mod(bin, grid))] += symbols[n];
  }
  CVector time = fft_inverse(spectrum);
  time.resize(static_cast<std::size_t>(frame_len));
  const double scale = 1.0 / std::sqrt(static_cast<double>(ifft_len));
  for (auto& x : time) x *= scale;
  return make_frame(std::move(time), cfg);
}

IqFrame modulate(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  return cfg.band_plan() ? multiband_modulate(symbols, cfg) : sefdm_modulate(symbols, cfg);
}

IciTerms ici_power_decompose(std::span<const cplx> symbols, const WaveformConfig& cfg, int k) {
  check_length(symbols, cfg);
  if (k < 0 || k >= cfg.frame_len()) throw InvalidInput("sample index out of range");

  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const long den = ifft_len * frame_len;
  const auto slots = cfg.carrier_slots();
  const auto n_sub = static_cast<double>(cfg.n_subcarriers());

  IciTerms terms;
  for (const auto& s : symbols) terms.signal_power += std::norm(s);
  terms.signal_power /= n_sub;

  for (std::size_t n = 0; n < slots.size(); ++n) {
    for (std::size_t m = 0; m < slots.size(); ++m) {
      if (m == n) continue;
      const long num = positive_mod(slot_difference(slots[n], slots[m], ifft_len, frame_len) * k, den);
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(num) / static_cast<double>(den);
      terms.interference += symbols[n] * std::conj(symbols[m]) * std::polar(1.0, phase);
    }
  }
  terms.interference /= n_sub;
  return terms;
}

IciTerms ici_symbol_power(std::span<const cplx> symbols, const WaveformConfig& cfg) {
  check_length(symbols, cfg);
  const Eigen::MatrixXcd corr = correlation_operator(cfg);
  const auto n_sub = static_cast<double>(cfg.n_subcarriers());

  IciTerms terms;
  for (const auto& s : symbols) terms.signal_power += std::norm(s);
  terms.signal_power /= n_sub;
  for (Eigen::Index n = 0; n < corr.cols(); ++n) {
    for (Eigen::Index m = 0; m < corr.rows(); ++m) {
      if (m == n) continue;
      terms.interference += symbols[static_cast<std::size_t>(n)] *
                            std::conj(symbols[static_cast<std::size_t>(m)]) * corr(m, n);
    }
  }
  terms.interference /= n_sub;
  return terms;
}

Eigen::MatrixXcd correlation_operator(const WaveformConfig& cfg) {
  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const long den = ifft_len * frame_len;
  const auto slots = cfg.carrier_slots();
  const auto n = static_cast<Eigen::Index>(slots.size());
  const double pi = std::numbers::pi;

  // Geometric series: (1/K) sum_{k<K} e^{j theta k}
  //   = e^{j theta (K-1)/2} sin(K theta / 2) / (K sin(theta / 2)),
  // theta = 2 pi num / den. K theta / 2 = pi num / ifft_len, reduced exactly.
  Eigen::MatrixXcd corr(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    corr(m, m) = 1.0;
    for (Eigen::Index c = m + 1; c < n; ++c) {
      const long num = slot_difference(slots[static_cast<std::size_t>(c)], slots[static_cast<std::size_t>(m)],
                                       ifft_len, frame_len);
      cplx value;
      if (positive_mod(num, den) == 0) {
        value = 1.0;
      } else if (positive_mod(num, ifft_len) == 0) {
        value = 0.0;
      } else {
        const double half_k_theta = pi * static_cast<double>(positive_mod(num, 2 * ifft_len)) /
                                    static_cast<double>(ifft_len);
        const double half_theta = pi * static_cast<double>(positive_mod(num, 2 * den)) / static_cast<double>(den);
        const double centre = pi * static_cast<double>(positive_mod(num * (frame_len - 1), 2 * den)) /
                              static_cast<double>(den);
        value = std::polar(std::sin(half_k_theta) / (static_cast<double>(frame_len) * std::sin(half_theta)), centre);
      }
      corr(m, c) = value;
      corr(c, m) = std::conj(value);
    }
  }
  return corr;
}

Eigen::MatrixXcd correlation_operator_direct(const WaveformConfig& cfg) {
  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const long den = ifft_len * frame_len;
  const auto slots = cfg.carrier_slots();
  const auto n = static_cast<Eigen::Index>(slots.size());

  Eigen::MatrixXcd corr(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const long num = slot_difference(slots[static_cast<std::size_t>(c)], slots[static_cast<std::size_t>(m)],
                                       ifft_len, frame_len);
      cplx acc{};
      for (long k = 0; k < frame_len; ++k) {
        const long r = positive_mod(num * k, den);
        acc += std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(den));
      }
      corr(m, c) = acc / static_cast<double>(frame_len);
    }
  }
  return corr;
}

Eigen::MatrixXcd carrier_matrix(const WaveformConfig& cfg) {
  const long ifft_len = cfg.ifft_len();
  const long frame_len = cfg.frame_len();
  const CVector tw_compressed = twiddles(ifft_len);
  const CVector tw_orthogonal = twiddles(frame_len);
  const auto slots = cfg.carrier_slots();
  const double scale = 1.0 / std::sqrt(static_cast<double>(ifft_len));

  Eigen::MatrixXcd phi(frame_len, static_cast<Eigen::Index>(slots.size()));
  for (std::size_t n = 0; n < slots.size(); ++n) {
    for (long k = 0; k < frame_len; ++k) {
      cplx phasor = tw_compressed[static_cast<std::size_t>(positive_mod(slots[n].compressed * k, ifft_len))];
      if (slots[n].orthogonal != 0) {
        phasor *= tw_orthogonal[static_cast<std::size_t>(positive_mod(slots[n].orthogonal * k, frame_len))];
      }
      phi(k, static_cast<Eigen::Index>(n)) = phasor * scale;
    }
  }
  return phi;
}

}  // namespace sefdm
