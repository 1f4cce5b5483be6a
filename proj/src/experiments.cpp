#include "sefdm/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "sefdm/rng.hpp"

namespace sefdm {
namespace {

// Stream identifiers under (master_seed, point, frame).
constexpr std::uint64_t kBitsStream = 1;
constexpr std::uint64_t kFadingStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

Bits random_bits(std::size_t count, std::mt19937_64& rng) {
  Bits bits(count);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % 64 == 0) word = rng();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

struct SimulatedFrame {
  Bits bits;
  IqFrame received;
  std::optional<TapTrace> trace;
};

SimulatedFrame simulate_frame(const WaveformConfig& signal, ChannelKind channel, const ChannelProfile& profile,
                              bool with_cfo, double es_n0_db, std::uint64_t master, std::uint64_t outer,
                              std::uint64_t inner) {
  SimulatedFrame out;
  auto bit_rng = derive_rng(master, {outer, inner, kBitsStream});
  out.bits = random_bits(2 * static_cast<std::size_t>(signal.n_subcarriers()), bit_rng);
  IqFrame frame = modulate(qpsk_map(out.bits), signal);
  frame.meta.rng_seed = derive_seed(master, {outer, inner});
  if (channel == ChannelKind::Fading) {
    auto [faded, trace] = rician_multipath(frame, profile, derive_seed(master, {outer, inner, kFadingStream}));
    frame = std::move(faded);
    out.trace = std::move(trace);
    if (with_cfo) frame = apply_cfo(frame, profile);
  }
  out.received = awgn(frame, NoiseSpec{es_n0_db}, derive_seed(master, {outer, inner, kNoiseStream}));
  return out;
}

std::uint64_t count_errors(const Bits& sent, const Bits& detected) {
  std::uint64_t errors = 0;
  for (std::size_t i = 0; i < sent.size(); ++i) errors += sent[i] != detected[i] ? 1u : 0u;
  return errors;
}

CVector genie_gains(const TapTrace& trace, const WaveformConfig& receiver) {
  CVector gains;
  const auto positions = receiver.subcarrier_positions();
  gains.reserve(positions.size());
  for (double p : positions) gains.push_back(trace.response(p / receiver.frame_len()));
  return gains;
}

DetectionResult detect(const Receiver& rx, const SimulatedFrame& frame) {
  if (frame.trace) return rx.detect(frame.received, genie_gains(*frame.trace, rx.config()));
  return rx.detect(frame.received);
}

std::string default_label(const ExperimentConfig& cfg) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s rx_alpha=%.2f signal_alpha=%.2f N=%d", std::string(to_string(cfg.detector)).c_str(),
                cfg.detector_alpha, cfg.signal.alpha_target(), cfg.signal.n_subcarriers());
  return buf;
}

std::optional<BandPlan> band_plan_from_json(const nlohmann::json& j) {
  if (!j.contains("band_plan") || j.at("band_plan").is_null()) return std::nullopt;
  const auto& b = j.at("band_plan");
  return BandPlan{b.at("n_bands").get<int>(), b.at("band_size").get<int>(), b.value("guard_subcarriers", 0)};
}

}  // namespace

std::string_view to_string(ChannelKind kind) {
  return kind == ChannelKind::Awgn ? "awgn" : "fading";
}

ChannelKind channel_from_string(std::string_view name) {
  if (name == "awgn") return ChannelKind::Awgn;
  if (name == "fading") return ChannelKind::Fading;
  throw InvalidInput("unknown channel '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (es_n0_grid_db.empty()) throw InvalidInput("es_n0 grid is empty");
  if (max_frames == 0) throw InvalidInput("max_frames must be positive");
  if (channel == ChannelKind::Fading) profile.validate();
  // Constructing the receiver applies the detector capacity guards.
  (void)Receiver(receiver_config(), detector, radius_policy);
}

BerCurve run_ber(const ExperimentConfig& cfg) {
  cfg.validate();
  const Receiver rx(cfg.receiver_config(), cfg.detector, cfg.radius_policy);
  BerCurve curve;
  curve.label = cfg.label.empty() ? default_label(cfg) : cfg.label;

  for (std::size_t p = 0; p < cfg.es_n0_grid_db.size(); ++p) {
    BerPoint point;
    point.es_n0_db = cfg.es_n0_grid_db[p];
    double visited = 0.0;
    while (point.bit_errors < cfg.min_bit_errors && point.frames < cfg.max_frames) {
      const auto frame = simulate_frame(cfg.signal, cfg.channel, cfg.profile, false, point.es_n0_db,
                                        cfg.master_seed, p, point.frames);
      const auto result = detect(rx, frame);
      point.bit_errors += count_errors(frame.bits, result.bits);
      point.bits_sent += frame.bits.size();
      visited += static_cast<double>(result.visited_nodes);
      ++point.frames;
    }
    point.ber = static_cast<double>(point.bit_errors) / static_cast<double>(point.bits_sent);
    point.mean_visited_nodes = visited / static_cast<double>(point.frames);
    point.low_confidence = point.bit_errors < cfg.min_bit_errors;
    curve.points.push_back(point);
  }
  return curve;
}

std::vector<BerCurve> run_tuning_defence(double target_alpha, std::span<const double> detector_alphas,
                                         const ExperimentConfig& base) {
  std::vector<BerCurve> curves;
  ExperimentConfig cfg = base;
  cfg.signal = base.signal.with_alpha(target_alpha);
  for (double alpha : detector_alphas) {
    cfg.detector_alpha = alpha;
    for (DetectorId id : {DetectorId::MultiSD, DetectorId::MF}) {
      cfg.detector = id;
      cfg.label.clear();
      curves.push_back(run_ber(cfg));
    }
  }
  return curves;
}

ScalingReport run_scaling_defence(const ScalingConfig& cfg) {
  ScalingReport report;
  report.op_budget = cfg.op_budget;

  ExperimentConfig small;
  small.signal = WaveformConfig::make(cfg.n_small, cfg.alpha, cfg.oversampling);
  small.es_n0_grid_db = cfg.small_grid_db;
  small.min_bit_errors = cfg.min_bit_errors;
  small.max_frames = cfg.max_frames_small;
  small.master_seed = cfg.master_seed;

  ExperimentConfig reference = small;
  reference.signal = small.signal.with_alpha(1.0);
  reference.detector_alpha = 1.0;
  reference.detector = DetectorId::MF;
  report.small_reference = run_ber(reference);

  small.detector_alpha = cfg.alpha;
  small.detector = DetectorId::SD;
  report.small_sd = run_ber(small);
  small.detector = DetectorId::MF;
  report.small_mf = run_ber(small);

  ExperimentConfig large;
  large.signal = WaveformConfig::make(cfg.n_large, cfg.alpha, cfg.oversampling, cfg.large_plan);
  large.detector_alpha = cfg.alpha;
  large.es_n0_grid_db = cfg.large_grid_db;
  large.min_bit_errors = cfg.min_bit_errors;
  large.max_frames = cfg.max_frames_large;
  large.master_seed = cfg.master_seed;

  report.large_sd_ops = sd_upper_bound_ops(cfg.n_large);
  report.large_multisd_ops = multisd_upper_bound_ops(cfg.n_large, cfg.large_plan.band_size);
  report.large_sd_above_budget = log10_big(report.large_sd_ops.multiplications) > std::log10(cfg.op_budget);
  try {
    large.detector = DetectorId::SD;
    large.validate();
  } catch (const CapacityError& e) {
    report.large_sd_refused = true;
    report.large_sd_refusal = e.what();
  }

  large.detector = DetectorId::MF;
  report.large_mf = run_ber(large);
  large.detector = DetectorId::MultiSD;
  report.large_multisd = run_ber(large);
  return report;
}

TypeSet type_set_from_string(std::string_view name) {
  if (name == "TypeI" || name == "typeI" || name == "I" || name == "1") return TypeSet::TypeI;
  if (name == "TypeII" || name == "typeII" || name == "II" || name == "2") return TypeSet::TypeII;
  throw InvalidInput("unknown type set '" + std::string(name) + "'");
}

std::vector<double> type_set_alphas(TypeSet set) {
  if (set == TypeSet::TypeI) return {1.0, 0.9, 0.8, 0.7};
  return {1.0, 0.95, 0.9, 0.85, 0.8, 0.75, 0.7};
}

IqManifest export_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.frames_per_class <= 0) throw InvalidInput("frames_per_class must be positive");
  const auto alphas = type_set_alphas(spec.type);

  IqManifest manifest;
  manifest.iq_file = "dataset.iq";
  manifest.n_subcarriers = spec.n_subcarriers;
  manifest.oversampling = spec.oversampling;
  manifest.samples_per_frame = spec.n_subcarriers * spec.oversampling;
  manifest.frames = spec.frames_per_class * static_cast<int>(alphas.size());
  manifest.extra["type_set"] = spec.type == TypeSet::TypeI ? "TypeI" : "TypeII";
  manifest.extra["frames_per_class"] = spec.frames_per_class;
  manifest.extra["es_n0_db"] = spec.es_n0_db;
  manifest.extra["channel"] = to_string(spec.channel);
  manifest.extra["channel_profile"] = profile_to_json(spec.profile);
  manifest.extra["master_seed"] = spec.master_seed;
  manifest.extra["modulation"] = "QPSK";
  if (spec.band_plan) {
    manifest.extra["band_plan"] = {{"n_bands", spec.band_plan->n_bands},
                                   {"band_size", spec.band_plan->band_size},
                                   {"guard_subcarriers", spec.band_plan->guard_subcarriers}};
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream iq(out_dir / manifest.iq_file, std::ios::binary);
  std::ofstream labels(out_dir / "labels.csv");
  if (!iq || !labels) throw std::runtime_error("cannot create dataset files in " + out_dir.string());
  labels << "frame_index,label,alpha\n";

  long frame_index = 0;
  for (std::size_t c = 0; c < alphas.size(); ++c) {
    const auto signal = WaveformConfig::make(spec.n_subcarriers, alphas[c], spec.oversampling, spec.band_plan);
    manifest.alpha_target.push_back(alphas[c]);
    manifest.alpha_effective.push_back(signal.alpha_effective());
    for (int f = 0; f < spec.frames_per_class; ++f) {
      const auto frame = simulate_frame(signal, spec.channel, spec.profile, true, spec.es_n0_db, spec.master_seed,
                                        c, static_cast<std::uint64_t>(f));
      write_iq(iq, frame.received.samples);
      manifest.labels.push_back(static_cast<int>(c));
      char line[64];
      std::snprintf(line, sizeof line, "%ld,%zu,%.4f\n", frame_index++, c, alphas[c]);
      labels << line;
    }
  }
  if (!iq || !labels) throw std::runtime_error("write failed in " + out_dir.string());

  std::ofstream js(out_dir / "dataset.json");
  js << manifest_to_json(manifest).dump(2) << '\n';
  if (!js) throw std::runtime_error("cannot write dataset manifest");
  return manifest;
}

std::vector<PredictedLabel> read_predicted_labels(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("empty predicted-label file");
  if (line.rfind("frame_index,true_alpha,pred_alpha", 0) != 0) {
    throw InvalidInput("predicted-label header must be frame_index,true_alpha,pred_alpha");
  }
  std::vector<PredictedLabel> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream fields(line);
    PredictedLabel row;
    char c1 = 0, c2 = 0;
    if (!(fields >> row.frame_index >> c1 >> row.true_alpha >> c2 >> row.pred_alpha) || c1 != ',' || c2 != ',') {
      throw InvalidInput("malformed predicted-label row: " + line);
    }
    rows.push_back(row);
  }
  return rows;
}

ReplayResult replay_predicted_labels(const ExperimentConfig& base, std::span<const PredictedLabel> labels,
                                     double es_n0_db) {
  std::map<double, Receiver> receivers;
  std::map<double, WaveformConfig> signals;
  ReplayResult result;
  for (const auto& row : labels) {
    auto sig = signals.find(row.true_alpha);
    if (sig == signals.end()) sig = signals.emplace(row.true_alpha, base.signal.with_alpha(row.true_alpha)).first;
    auto rx = receivers.find(row.pred_alpha);
    if (rx == receivers.end()) {
      rx = receivers.emplace(row.pred_alpha, Receiver(base.signal.with_alpha(row.pred_alpha), base.detector,
                                                      base.radius_policy)).first;
    }
    const auto frame = simulate_frame(sig->second, base.channel, base.profile, false, es_n0_db, base.master_seed,
                                      0x7265706cULL, static_cast<std::uint64_t>(row.frame_index));
    const auto detected = detect(rx->second, frame);
    result.bit_errors += count_errors(frame.bits, detected.bits);
    result.bits_sent += frame.bits.size();
    ++result.frames;
  }
  result.ber = result.bits_sent ? static_cast<double>(result.bit_errors) / static_cast<double>(result.bits_sent) : 0.0;
  return result;
}

void write_ber_csv(std::ostream& out, const BerCurve& curve) {
  out << "esn0_db,bits,errors,ber\n";
  char line[128];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof line, "%.2f,%llu,%llu,%.6e\n", p.es_n0_db, static_cast<unsigned long long>(p.bits_sent),
                  static_cast<unsigned long long>(p.bit_errors), p.ber);
    out << line;
  }
}

nlohmann::json curve_to_json(const BerCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points) {
    points.push_back({{"es_n0_db", p.es_n0_db},
                      {"bits", p.bits_sent},
                      {"errors", p.bit_errors},
                      {"ber", p.ber},
                      {"frames", p.frames},
                      {"mean_visited_nodes", p.mean_visited_nodes},
                      {"low_confidence", p.low_confidence}});
  }
  return {{"label", curve.label}, {"points", points}};
}

nlohmann::json scaling_report_to_json(const ScalingReport& r) {
  nlohmann::json j;
  j["small"] = {{"reference_alpha1_mf", curve_to_json(r.small_reference)},
                {"sd", curve_to_json(r.small_sd)},
                {"mf", curve_to_json(r.small_mf)}};
  j["large"] = {{"mf", curve_to_json(r.large_mf)}, {"multisd", curve_to_json(r.large_multisd)}};
  j["large_sd"] = {{"refused", r.large_sd_refused},
                   {"refusal", r.large_sd_refusal},
                   {"upper_bound_mults", r.large_sd_ops.multiplications.str()},
                   {"upper_bound_adds", r.large_sd_ops.additions.str()},
                   {"upper_bound_mults_log2", log2_big(r.large_sd_ops.multiplications)},
                   {"op_budget", r.op_budget},
                   {"above_budget", r.large_sd_above_budget}};
  j["large_multisd_ops"] = {{"mults", r.large_multisd_ops.multiplications.str()},
                            {"adds", r.large_multisd_ops.additions.str()}};
  return j;
}

WaveformConfig waveform_from_json(const nlohmann::json& j) {
  return WaveformConfig::make(j.at("n_subcarriers").get<int>(), j.value("alpha", 1.0), j.value("oversampling", 8),
                              band_plan_from_json(j));
}

nlohmann::json waveform_to_json(const WaveformConfig& cfg) {
  nlohmann::json j = {{"n_subcarriers", cfg.n_subcarriers()},
                      {"alpha", cfg.alpha_target()},
                      {"alpha_effective", cfg.alpha_effective()},
                      {"oversampling", cfg.oversampling()},
                      {"ifft_len", cfg.ifft_len()}};
  if (cfg.band_plan()) {
    j["band_plan"] = {{"n_bands", cfg.band_plan()->n_bands},
                      {"band_size", cfg.band_plan()->band_size},
                      {"guard_subcarriers", cfg.band_plan()->guard_subcarriers}};
  } else {
    j["band_plan"] = nullptr;
  }
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("waveform")) cfg.signal = waveform_from_json(j.at("waveform"));
  cfg.detector = detector_from_string(j.value("detector", std::string("MF")));
  cfg.detector_alpha = j.value("detector_alpha", cfg.signal.alpha_target());
  cfg.radius_policy = radius_policy_from_string(j.value("radius_policy", std::string("babai")));
  cfg.channel = channel_from_string(j.value("channel", std::string("awgn")));
  if (j.contains("channel_profile")) {
    const auto& p = j.at("channel_profile");
    cfg.profile = p.is_string() ? load_profile(p.get<std::string>()) : profile_from_json(p);
  }
  cfg.es_n0_grid_db = j.value("es_n0_grid_db", cfg.es_n0_grid_db);
  cfg.min_bit_errors = j.value("min_bit_errors", cfg.min_bit_errors);
  cfg.max_frames = j.value("max_frames", cfg.max_frames);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.label = j.value("label", std::string());
  return cfg;
}

nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  return {{"waveform", waveform_to_json(cfg.signal)},
          {"detector", to_string(cfg.detector)},
          {"detector_alpha", cfg.detector_alpha},
          {"radius_policy", cfg.radius_policy == RadiusPolicy::Babai ? "babai" : "unbounded"},
          {"channel", to_string(cfg.channel)},
          {"channel_profile", profile_to_json(cfg.profile)},
          {"es_n0_grid_db", cfg.es_n0_grid_db},
          {"min_bit_errors", cfg.min_bit_errors},
          {"max_frames", cfg.max_frames},
          {"master_seed", cfg.master_seed},
          {"label", cfg.label}};
}

std::optional<double> es_n0_at_ber(const BerCurve& curve, double target_ber) {
  const auto& pts = curve.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[i + 1];
    if (a.ber >= target_ber && b.ber <= target_ber) {
      if (b.ber <= 0.0) return b.es_n0_db;
      if (a.ber == b.ber) return a.es_n0_db;
      const double t = (std::log10(a.ber) - std::log10(target_ber)) / (std::log10(a.ber) - std::log10(b.ber));
      return a.es_n0_db + t * (b.es_n0_db - a.es_n0_db);
    }
  }
  return std::nullopt;
}

}  // namespace sefdm
