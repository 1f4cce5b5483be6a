#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>

#include "sefdm/types.hpp"
#include "sefdm/waveform.hpp"

namespace sefdm {

enum class DetectorId { MF, ML, SD, MultiSD };

std::string_view to_string(DetectorId id);
DetectorId detector_from_string(std::string_view name);

/// Initial search radius. Both shrink to the best leaf found so far.
enum class RadiusPolicy {
  Babai,      // residual of the rounded zero-forcing point
  Unbounded,  // infinite; the first Schnorr-Euchner leaf sets the radius
};

RadiusPolicy radius_policy_from_string(std::string_view name);

// Size guards: ML enumerates 4^N candidates, SD is exponential in the worst case.
inline constexpr int kMaxMlSubcarriers = 10;
inline constexpr int kMaxSdSubcarriers = 32;
inline constexpr int kMaxMultiSdBandSize = 16;
// MultiSD re-detects each band after subtracting the other bands' decisions,
// at most this many times. 0 gives plain independent per-band detection.
inline constexpr int kMultiSdCancellationPasses = 3;

struct DetectionResult {
  Bits bits;
  SymbolVector symbols;
  std::uint64_t visited_nodes = 0;
  DetectorId detector = DetectorId::MF;
  double alpha_used = 1.0;
};

/// Real-valued form of y = Phi s + w for a block of carriers.
///
/// Phi (frame_len x n) is split as H = [Re Phi, -Im Phi; Im Phi, Re Phi] and
/// s as x = [Re s; Im s], then H = Q R with R upper triangular (2n x 2n) and a
/// nonnegative diagonal. ||y - H x||^2 = ||Q^T y - R x||^2 + const.
class ObservationModel {
 public:
  explicit ObservationModel(Eigen::MatrixXcd carriers);

  const Eigen::MatrixXcd& carriers() const { return carriers_; }
  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::MatrixXd& r() const { return r_; }
  int dimension() const { return static_cast<int>(carriers_.cols()); }

  /// Q^T [Re y; Im y].
  Eigen::VectorXd project(std::span<const cplx> samples) const;

 private:
  Eigen::MatrixXcd carriers_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd r_;
};

struct SearchResult {
  Eigen::VectorXd x;  // +-level per real dimension
  double metric = 0.0;
  std::uint64_t visited_nodes = 0;
};

/// Depth-first Schnorr-Euchner search over x in {-level, +level}^dim
/// minimizing ||y - R x||^2. visited_nodes counts tree nodes that passed the
/// radius test, leaves included; it never exceeds sum_{n=1}^{dim} 2^n.
SearchResult sphere_search(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, double level, RadiusPolicy policy);

/// Matched filter: z = (ifft_len / frame_len) Phi^H y, so z = C s when noiseless.
/// Single-band layouts go through one DFT of size ifft_len.
CVector matched_filter_demod(const IqFrame& frame, const WaveformConfig& cfg);

/// Stateless front ends; each builds a Receiver.
DetectionResult mf_hard_detect(const IqFrame& frame, const WaveformConfig& cfg);
DetectionResult ml_detect(const IqFrame& frame, const WaveformConfig& cfg);
DetectionResult sphere_detect(const IqFrame& frame, const WaveformConfig& cfg,
                              RadiusPolicy policy = RadiusPolicy::Babai);
DetectionResult multisd_detect(const IqFrame& frame, const WaveformConfig& cfg,
                               RadiusPolicy policy = RadiusPolicy::Babai,
                               int cancellation_passes = kMultiSdCancellationPasses);

/// A detector bound to one waveform assumption, caching the carrier matrix and
/// its factorizations. detect() is const and safe to call concurrently.
class Receiver {
 public:
  Receiver(const WaveformConfig& cfg, DetectorId id, RadiusPolicy policy = RadiusPolicy::Babai,
           int cancellation_passes = kMultiSdCancellationPasses);

  DetectionResult detect(const IqFrame& frame) const;

  /// Detection with known per-subcarrier channel gains (genie CSI). The model
  /// columns are scaled by the gains; the matched filter divides them out.
  DetectionResult detect(const IqFrame& frame, std::span<const cplx> carrier_gains) const;

  const WaveformConfig& config() const { return cfg_; }
  DetectorId id() const { return id_; }

 private:
  DetectionResult detect_with(const IqFrame& frame, const Eigen::MatrixXcd& carriers,
                              const std::vector<ObservationModel>& blocks,
                              std::span<const cplx> carrier_gains) const;
  std::vector<ObservationModel> build_blocks(const Eigen::MatrixXcd& carriers) const;
  SymbolVector search_block(const ObservationModel& block, std::span<const cplx> samples,
                            std::uint64_t& visited) const;
  SymbolVector detect_bands(const Eigen::MatrixXcd& carriers, const std::vector<ObservationModel>& blocks,
                            std::span<const cplx> samples, std::uint64_t& visited) const;

  WaveformConfig cfg_;
  DetectorId id_;
  RadiusPolicy policy_;
  int cancellation_passes_;
  Eigen::MatrixXcd carriers_;
  std::vector<ObservationModel> blocks_;  // one per band for MultiSD, one for SD
};

}  // namespace sefdm
