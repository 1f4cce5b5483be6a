#include "sefdm/psd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "sefdm/fft.hpp"

namespace sefdm {

std::vector<PsdBin> psd_estimate(std::span<const IqFrame> frames, int nfft) {
  if (frames.empty()) throw InvalidInput("psd_estimate needs at least one frame");
  if (nfft <= 1) throw InvalidInput("nfft must be greater than one");

  const auto n = static_cast<std::size_t>(nfft);
  std::vector<double> window(n);
  for (std::size_t i = 0; i < n; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }

  std::vector<double> accum(n, 0.0);
  std::size_t segments = 0;
  CVector segment(n);
  const std::size_t hop = std::max<std::size_t>(1, n / 2);
  for (const auto& frame : frames) {
    const auto& x = frame.samples;
    std::size_t start = 0;
    do {
      for (std::size_t i = 0; i < n; ++i) {
        segment[i] = start + i < x.size() ? x[start + i] * window[i] : cplx{};
      }
      const CVector spectrum = fft_forward(segment);
      for (std::size_t i = 0; i < n; ++i) accum[i] += std::norm(spectrum[i]);
      ++segments;
      start += hop;
    } while (start + n <= x.size());
  }

  const double peak = *std::max_element(accum.begin(), accum.end());
  std::vector<PsdBin> out;
  out.reserve(n);
  const int half = nfft / 2;
  for (int b = -half; b < nfft - half; ++b) {
    const auto idx = static_cast<std::size_t>((b + nfft) % nfft);
    const double rel = peak > 0.0 ? accum[idx] / peak : 0.0;
    out.push_back(PsdBin{b, rel > 0.0 ? 10.0 * std::log10(rel) : -400.0});
  }
  return out;
}

double occupied_bandwidth_bins(std::span<const PsdBin> psd, double threshold_db) {
  if (psd.empty()) return 0.0;
  const auto peak = std::max_element(psd.begin(), psd.end(),
                                     [](const PsdBin& a, const PsdBin& b) { return a.power_db < b.power_db; });
  // Outermost bins above the threshold on either side of the peak.
  auto lo = psd.begin();
  while (lo != peak && lo->power_db < -std::abs(threshold_db)) ++lo;
  auto hi = psd.end() - 1;
  while (hi != peak && hi->power_db < -std::abs(threshold_db)) --hi;
  return static_cast<double>(hi->frequency_bin - lo->frequency_bin + 1);
}

void write_spectrum_csv(std::ostream& out, std::span<const PsdBin> psd, int nfft) {
  out << "freq_norm,power_db\n";
  char line[64];
  for (const auto& bin : psd) {
    std::snprintf(line, sizeof line, "%.8f,%.6f\n", static_cast<double>(bin.frequency_bin) / nfft, bin.power_db);
    out << line;
  }
}

}  // namespace sefdm
