#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>

#include "sefdm/types.hpp"

namespace sefdm {

/// Split of the N data subcarriers into equal bands separated by guard slots
/// of orthogonal spacing. Each band is detected on its own by MultiSD.
struct BandPlan {
  int n_bands = 1;
  int band_size = 1;
  int guard_subcarriers = 0;

  bool operator==(const BandPlan&) const = default;
};

/// Location of one subcarrier. Its frequency, in cycles per sample, is
/// compressed / ifft_len + orthogonal / frame_len. Keeping both parts as
/// integers lets every generator evaluate phases exactly by modular reduction.
struct CarrierSlot {
  long compressed = 0;
  long orthogonal = 0;
};

/// Identity of a signal class: subcarrier count, compression, oversampling.
///
/// The generation transform length is ifft_len = round(N * rho / alpha), so
/// the compression actually realized is alpha_effective = N * rho / ifft_len.
/// Every frame keeps N * rho samples whatever alpha is.
class WaveformConfig {
 public:
  static WaveformConfig make(int n_subcarriers, double alpha, int oversampling = 8,
                             std::optional<BandPlan> band_plan = std::nullopt);

  int n_subcarriers() const { return n_subcarriers_; }
  double alpha_target() const { return alpha_target_; }
  int oversampling() const { return oversampling_; }
  int ifft_len() const { return ifft_len_; }
  int frame_len() const { return n_subcarriers_ * oversampling_; }
  double alpha_effective() const {
    return static_cast<double>(frame_len()) / static_cast<double>(ifft_len_);
  }
  const std::optional<BandPlan>& band_plan() const { return band_plan_; }

  /// Same layout and size, different compression (used for mismatched receivers).
  WaveformConfig with_alpha(double alpha) const;
  WaveformConfig without_band_plan() const;

  /// Subcarrier slots in index order; band layout applied when a plan is set.
  std::vector<CarrierSlot> carrier_slots() const;
  /// Subcarrier positions in units of the orthogonal spacing 1/(N rho) cycles/sample.
  std::vector<double> subcarrier_positions() const;

  FrameMeta frame_meta() const;

 private:
  WaveformConfig() = default;

  int n_subcarriers_ = 1;
  double alpha_target_ = 1.0;
  int oversampling_ = 1;
  int ifft_len_ = 1;
  std::optional<BandPlan> band_plan_;
};

/// Gray QPSK: bit pair (b1, b0) maps to ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
SymbolVector qpsk_map(std::span<const std::uint8_t> bits);
/// Sign slicer, inverse of qpsk_map. A zero component slices to bit 0.
Bits qpsk_demap_hard(std::span<const cplx> symbols);
/// Nearest QPSK constellation point per symbol.
SymbolVector qpsk_slice(std::span<const cplx> symbols);

/// Single-band SEFDM symbol: zero-pad to ifft_len, inverse DFT scaled by
/// 1/sqrt(ifft_len), keep the first N * rho samples. Ignores any band plan.
IqFrame sefdm_modulate(std::span<const cplx> symbols, const WaveformConfig& cfg);

/// Band-plan layout. Generated on the common grid lcm(ifft_len, N rho) when
/// that grid is small enough, otherwise by direct per-subcarrier summation.
IqFrame multiband_modulate(std::span<const cplx> symbols, const WaveformConfig& cfg);

/// Dispatches on the presence of a band plan.
IqFrame modulate(std::span<const cplx> symbols, const WaveformConfig& cfg);

/// Direct summation over subcarrier slots, scaled by 1/sqrt(ifft_len).
/// O(N * N rho); twiddles are indexed exactly, no accumulated phase error.
CVector modulate_direct(std::span<const cplx> symbols, const WaveformConfig& cfg);

struct IciTerms {
  double signal_power = 0.0;  // (1/N) sum |s_n|^2
  cplx interference{};        // (1/N) sum_{m != n} s_n conj(s_m) e^{j 2 pi (f_n - f_m) k}
};

/// Per-sample split of the sample power into self and cross terms.
/// signal_power + interference = |X_k|^2 * ifft_len / N.
IciTerms ici_power_decompose(std::span<const cplx> symbols, const WaveformConfig& cfg, int k);

/// The same split averaged over the N rho retained samples. The cross term is
/// s^H (C - I) s / N, which vanishes identically when alpha_effective = 1.
IciTerms ici_symbol_power(std::span<const cplx> symbols, const WaveformConfig& cfg);

/// C[m][n] = (1 / (N rho)) sum_k exp(j 2 pi (f_n - f_m) k), k over retained
/// samples. Hermitian with unit diagonal; the identity when alpha = 1.
Eigen::MatrixXcd correlation_operator(const WaveformConfig& cfg);

/// Same entries by explicit summation, for cross-checking the closed form.
Eigen::MatrixXcd correlation_operator_direct(const WaveformConfig& cfg);

/// Carrier matrix: column n holds the retained samples of subcarrier n,
/// scaled by 1/sqrt(ifft_len). Phi^H Phi = alpha_effective * C.
Eigen::MatrixXcd carrier_matrix(const WaveformConfig& cfg);

}  // namespace sefdm
