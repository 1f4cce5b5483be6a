#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "json.hpp"
#include "sefdm/channel.hpp"
#include "sefdm/complexity.hpp"
#include "sefdm/detectors.hpp"
#include "sefdm/iq_io.hpp"
#include "sefdm/waveform.hpp"

namespace sefdm {

enum class ChannelKind { Awgn, Fading };

std::string_view to_string(ChannelKind kind);
ChannelKind channel_from_string(std::string_view name);

struct ExperimentConfig {
  WaveformConfig signal = WaveformConfig::make(12, 0.8);
  DetectorId detector = DetectorId::MF;
  double detector_alpha = 0.8;  // compression assumed by the receiver
  RadiusPolicy radius_policy = RadiusPolicy::Babai;
  ChannelKind channel = ChannelKind::Awgn;
  ChannelProfile profile = ChannelProfile::reference();
  std::vector<double> es_n0_grid_db{0, 5, 10, 15, 20};
  std::uint64_t min_bit_errors = 100;
  std::uint64_t max_frames = 10000;
  std::uint64_t master_seed = 1;
  std::string label;

  WaveformConfig receiver_config() const { return signal.with_alpha(detector_alpha); }
  void validate() const;
};

struct BerPoint {
  double es_n0_db = 0.0;
  std::uint64_t bits_sent = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
  std::uint64_t frames = 0;
  double mean_visited_nodes = 0.0;
  bool low_confidence = false;  // stopped on max_frames before min_bit_errors
};

struct BerCurve {
  std::string label;
  std::vector<BerPoint> points;
};

/// Monte Carlo BER over the Es/N0 grid. Per point, frames are generated until
/// min_bit_errors errors or max_frames frames. Frame f of point p draws all of
/// its randomness from (master_seed, p, f), so every detector sees the same
/// transmitted frames and the same noise.
BerCurve run_ber(const ExperimentConfig& cfg);

/// Signal fixed at target_alpha; one MultiSD trace and one MF trace per
/// receiver alpha. Curves are ordered as detector_alphas, MultiSD before MF.
std::vector<BerCurve> run_tuning_defence(double target_alpha, std::span<const double> detector_alphas,
                                         const ExperimentConfig& base);

struct ScalingConfig {
  int n_small = 12;
  int n_large = 256;
  double alpha = 0.8;
  int oversampling = 8;
  BandPlan large_plan{32, 8, 1};
  std::vector<double> small_grid_db{0, 2, 4, 6, 8, 10, 12, 14, 20, 30};
  std::vector<double> large_grid_db{0, 5, 10, 15, 20, 30};
  std::uint64_t min_bit_errors = 100;
  std::uint64_t max_frames_small = 20000;
  std::uint64_t max_frames_large = 400;
  std::uint64_t master_seed = 1;
  double op_budget = 1e12;
};

struct ScalingReport {
  BerCurve small_reference;  // alpha = 1, matched filter
  BerCurve small_sd;
  BerCurve small_mf;
  BerCurve large_mf;
  BerCurve large_multisd;
  OpCount large_sd_ops;
  OpCount large_multisd_ops;
  bool large_sd_refused = false;
  std::string large_sd_refusal;
  bool large_sd_above_budget = false;
  double op_budget = 0.0;
};

/// Small signal: SD against MF. Large signal: SD is only accounted for
/// analytically (the receiver refuses it); MF and MultiSD are simulated.
ScalingReport run_scaling_defence(const ScalingConfig& cfg);

enum class TypeSet { TypeI, TypeII };

TypeSet type_set_from_string(std::string_view name);
std::vector<double> type_set_alphas(TypeSet set);

struct DatasetSpec {
  TypeSet type = TypeSet::TypeI;
  int frames_per_class = 2000;
  double es_n0_db = 20.0;
  ChannelKind channel = ChannelKind::Fading;
  ChannelProfile profile = ChannelProfile::reference();
  int n_subcarriers = 256;
  int oversampling = 8;
  std::optional<BandPlan> band_plan = BandPlan{32, 8, 1};
  std::uint64_t master_seed = 1;
};

/// Writes dataset.iq (cf32le, class-major frame order), dataset.json and
/// labels.csv ("frame_index,label,alpha") into out_dir.
IqManifest export_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir);

/// One row of the classifier's predicted-label file.
struct PredictedLabel {
  long frame_index = 0;
  double true_alpha = 1.0;
  double pred_alpha = 1.0;
};

/// Parses "frame_index,true_alpha,pred_alpha" CSV (header required).
std::vector<PredictedLabel> read_predicted_labels(std::istream& in);

struct ReplayResult {
  std::uint64_t frames = 0;
  std::uint64_t bits_sent = 0;
  std::uint64_t bit_errors = 0;
  double ber = 0.0;
};

/// For every row: transmit a frame at true_alpha, detect it with base.detector
/// configured for pred_alpha, at Es/N0 = es_n0_db.
ReplayResult replay_predicted_labels(const ExperimentConfig& base, std::span<const PredictedLabel> labels,
                                     double es_n0_db);

/// CSV, header "esn0_db,bits,errors,ber".
void write_ber_csv(std::ostream& out, const BerCurve& curve);
nlohmann::json curve_to_json(const BerCurve& curve);
nlohmann::json scaling_report_to_json(const ScalingReport& report);

/// Experiment config from JSON (see README for the keys).
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
WaveformConfig waveform_from_json(const nlohmann::json& j);
nlohmann::json waveform_to_json(const WaveformConfig& cfg);

/// Es/N0 (dB) at which a BER curve crosses target_ber, by log-linear
/// interpolation between the bracketing points; nullopt if never crossed.
std::optional<double> es_n0_at_ber(const BerCurve& curve, double target_ber);

}  // namespace sefdm
