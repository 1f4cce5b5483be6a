#pragma once

#include <iosfwd>
#include <span>

#include "sefdm/types.hpp"

namespace sefdm {

struct PsdBin {
  int frequency_bin = 0;  // -nfft/2 .. nfft/2 - 1, DC at 0
  double power_db = 0.0;  // relative to the strongest bin
};

/// Welch estimate: Hann-windowed segments of nfft samples with 50% overlap,
/// periodograms averaged over every segment of every frame, normalized so the
/// peak bin is 0 dB. Frames shorter than nfft contribute one zero-padded segment.
std::vector<PsdBin> psd_estimate(std::span<const IqFrame> frames, int nfft);

/// Width in bins from the lowest to the highest bin within threshold_db of the peak.
double occupied_bandwidth_bins(std::span<const PsdBin> psd, double threshold_db);

/// CSV with header "freq_norm,power_db", freq_norm = bin / nfft.
void write_spectrum_csv(std::ostream& out, std::span<const PsdBin> psd, int nfft);

}  // namespace sefdm
