#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sefdm/complexity.hpp"
#include "sefdm/experiments.hpp"
#include "sefdm/psd.hpp"
#include "sefdm/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file");
  cmd->add_option("--seed", c.seed, "master seed (overrides config)");
  cmd->add_option("--out", c.out, "output directory");
}

json load_config(const Common& c) {
  if (c.config.empty()) return json::object();
  std::ifstream in(c.config);
  if (!in) throw std::runtime_error("cannot open config " + c.config);
  return json::parse(in);
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_curve(const fs::path& dir, const std::string& stem, const sefdm::BerCurve& curve) {
  auto csv = open_out(dir / (stem + ".csv"));
  sefdm::write_ber_csv(csv, curve);
  write_json(dir / (stem + ".json"), sefdm::curve_to_json(curve));
}

std::string alpha_tag(double alpha) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(alpha * 100.0 + 0.5));
  return buf;
}

sefdm::ExperimentConfig experiment(const Common& c) {
  auto cfg = sefdm::experiment_from_json(load_config(c));
  if (c.seed) cfg.master_seed = *c.seed;
  return cfg;
}

int cmd_gen(const Common& c, int frames, double es_n0) {
  const json j = load_config(c);
  const auto wf = sefdm::waveform_from_json(j.value("waveform", json{{"n_subcarriers", 12}, {"alpha", 0.8}}));
  const std::uint64_t seed = c.seed.value_or(j.value("master_seed", std::uint64_t{1}));
  std::vector<sefdm::IqFrame> out;
  for (int f = 0; f < frames; ++f) {
    auto rng = sefdm::derive_rng(seed, {static_cast<std::uint64_t>(f)});
    sefdm::Bits bits(2 * static_cast<std::size_t>(wf.n_subcarriers()));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
    auto frame = sefdm::modulate(sefdm::qpsk_map(bits), wf);
    frame.meta.rng_seed = seed;
    out.push_back(sefdm::awgn(frame, sefdm::NoiseSpec{es_n0}, sefdm::derive_seed(seed, {static_cast<std::uint64_t>(f), 3})));
  }
  sefdm::IqManifest m;
  m.iq_file = "frames.iq";
  m.n_subcarriers = wf.n_subcarriers();
  m.oversampling = wf.oversampling();
  m.samples_per_frame = wf.frame_len();
  m.frames = frames;
  m.alpha_target = {wf.alpha_target()};
  m.alpha_effective = {wf.alpha_effective()};
  m.labels.assign(static_cast<std::size_t>(frames), 0);
  m.extra["waveform"] = sefdm::waveform_to_json(wf);
  m.extra["master_seed"] = seed;
  m.extra["es_n0_db"] = std::isinf(es_n0) ? json("inf") : json(es_n0);
  sefdm::write_iq_dataset(out_dir(c), "frames", m, out);
  return 0;
}

int cmd_psd(const Common& c, int frames, int nfft) {
  const json j = load_config(c);
  const std::uint64_t seed = c.seed.value_or(j.value("master_seed", std::uint64_t{1}));
  std::vector<double> alphas = j.value("alphas", std::vector<double>{1.0, 0.8});
  const json wj = j.value("waveform", json{{"n_subcarriers", 16}});
  const auto dir = out_dir(c);
  json summary = json::array();
  for (double alpha : alphas) {
    auto w = wj;
    w["alpha"] = alpha;
    const auto wf = sefdm::waveform_from_json(w);
    std::vector<sefdm::IqFrame> batch;
    for (int f = 0; f < frames; ++f) {
      auto rng = sefdm::derive_rng(seed, {static_cast<std::uint64_t>(f)});
      sefdm::Bits bits(2 * static_cast<std::size_t>(wf.n_subcarriers()));
      for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1u);
      batch.push_back(sefdm::modulate(sefdm::qpsk_map(bits), wf));
    }
    const auto psd = sefdm::psd_estimate(batch, nfft);
    auto csv = open_out(dir / ("spectrum_alpha" + alpha_tag(alpha) + ".csv"));
    sefdm::write_spectrum_csv(csv, psd, nfft);
    summary.push_back({{"alpha", alpha},
                       {"alpha_effective", wf.alpha_effective()},
                       {"occupied_bins_20db", sefdm::occupied_bandwidth_bins(psd, 20.0)}});
  }
  write_json(dir / "spectrum.json", {{"nfft", nfft}, {"traces", summary}});
  return 0;
}

int cmd_ber(const Common& c) {
  const auto cfg = experiment(c);
  const auto curve = sefdm::run_ber(cfg);
  const auto dir = out_dir(c);
  write_curve(dir, "ber", curve);
  write_json(dir / "config.json", sefdm::experiment_to_json(cfg));
  return 0;
}

int cmd_tune(const Common& c, double target, std::vector<double> alphas) {
  auto cfg = experiment(c);
  const json j = load_config(c);
  if (!j.contains("waveform")) cfg.signal = sefdm::WaveformConfig::make(256, target, 8, sefdm::BandPlan{32, 8, 1});
  if (!j.contains("es_n0_grid_db")) cfg.es_n0_grid_db = {0, 5, 10, 15, 20, 25, 30};
  if (alphas.empty()) alphas = {0.7, 0.75, 0.8, 0.85, 0.9};
  const auto curves = sefdm::run_tuning_defence(target, alphas, cfg);
  const auto dir = out_dir(c);
  json report = {{"signal_alpha", target}, {"curves", json::array()}};
  std::size_t i = 0;
  for (double a : alphas) {
    for (const char* det : {"multisd", "mf"}) {
      const std::string stem = std::string("tune_") + det + "_rx" + alpha_tag(a);
      write_curve(dir, stem, curves[i]);
      report["curves"].push_back({{"file", stem + ".csv"}, {"detector_alpha", a}, {"detector", det},
                                  {"curve", sefdm::curve_to_json(curves[i])}});
      ++i;
    }
  }
  write_json(dir / "tuning.json", report);
  return 0;
}

int cmd_scale(const Common& c) {
  const json j = load_config(c);
  sefdm::ScalingConfig cfg;
  cfg.n_small = j.value("n_small", cfg.n_small);
  cfg.n_large = j.value("n_large", cfg.n_large);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.oversampling = j.value("oversampling", cfg.oversampling);
  if (j.contains("large_band_size")) {
    cfg.large_plan.band_size = j.at("large_band_size").get<int>();
    cfg.large_plan.n_bands = cfg.n_large / cfg.large_plan.band_size;
  }
  cfg.small_grid_db = j.value("small_grid_db", cfg.small_grid_db);
  cfg.large_grid_db = j.value("large_grid_db", cfg.large_grid_db);
  cfg.min_bit_errors = j.value("min_bit_errors", cfg.min_bit_errors);
  cfg.max_frames_small = j.value("max_frames_small", cfg.max_frames_small);
  cfg.max_frames_large = j.value("max_frames_large", cfg.max_frames_large);
  cfg.op_budget = j.value("op_budget", cfg.op_budget);
  cfg.master_seed = c.seed.value_or(j.value("master_seed", cfg.master_seed));
  const auto report = sefdm::run_scaling_defence(cfg);
  const auto dir = out_dir(c);
  write_curve(dir, "scale_small_reference", report.small_reference);
  write_curve(dir, "scale_small_sd", report.small_sd);
  write_curve(dir, "scale_small_mf", report.small_mf);
  write_curve(dir, "scale_large_mf", report.large_mf);
  write_curve(dir, "scale_large_multisd", report.large_multisd);
  write_json(dir / "scaling.json", sefdm::scaling_report_to_json(report));
  return 0;
}

int cmd_complexity(const Common& c, std::vector<int> n_list, int block) {
  if (n_list.empty()) n_list = {8, 16, 24, 32, 48, 64, 96, 128, 192, 256};
  const auto rows = sefdm::complexity_sweep(n_list, block);
  auto csv = open_out(out_dir(c) / "complexity.csv");
  sefdm::write_complexity_csv(csv, rows);
  return 0;
}

int cmd_dataset(const Common& c, const std::string& type, std::optional<int> frames) {
  const json j = load_config(c);
  sefdm::DatasetSpec spec;
  spec.type = sefdm::type_set_from_string(j.value("type", type));
  spec.frames_per_class = frames.value_or(j.value("frames_per_class", spec.frames_per_class));
  spec.es_n0_db = j.value("es_n0_db", spec.es_n0_db);
  spec.channel = sefdm::channel_from_string(j.value("channel", std::string(sefdm::to_string(spec.channel))));
  if (j.contains("channel_profile")) {
    const auto& p = j.at("channel_profile");
    spec.profile = p.is_string() ? sefdm::load_profile(p.get<std::string>()) : sefdm::profile_from_json(p);
  }
  if (j.contains("waveform")) {
    const auto wf = sefdm::waveform_from_json(j.at("waveform"));
    spec.n_subcarriers = wf.n_subcarriers();
    spec.oversampling = wf.oversampling();
    spec.band_plan = wf.band_plan();
  }
  spec.master_seed = c.seed.value_or(j.value("master_seed", spec.master_seed));
  const auto m = sefdm::export_dataset(spec, out_dir(c));
  std::cout << json{{"frames", m.frames}, {"manifest", (fs::path(c.out) / "dataset.json").string()}}.dump() << '\n';
  return 0;
}

int cmd_replay(const Common& c, const std::string& labels_path, double es_n0) {
  const auto cfg = experiment(c);
  std::ifstream in(labels_path);
  if (!in) throw std::runtime_error("cannot open predicted labels " + labels_path);
  const auto rows = sefdm::read_predicted_labels(in);
  const auto r = sefdm::replay_predicted_labels(cfg, rows, es_n0);
  write_json(out_dir(c) / "replay.json", {{"es_n0_db", es_n0},
                                          {"frames", r.frames},
                                          {"bits", r.bits_sent},
                                          {"errors", r.bit_errors},
                                          {"ber", r.ber}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SEFDM waveform, channel and detector toolkit"};
  app.require_subcommand(1);

  Common c;
  int gen_frames = 1;
  double gen_es_n0 = std::numeric_limits<double>::infinity();
  auto* gen = app.add_subcommand("gen", "generate IQ frames (cf32le + manifest)");
  add_common(gen, c);
  gen->add_option("--frames", gen_frames)->check(CLI::PositiveNumber);
  gen->add_option("--esn0", gen_es_n0, "Es/N0 in dB (default: noiseless)");

  int psd_frames = 200;
  int psd_nfft = 256;
  auto* psd = app.add_subcommand("psd", "spectrum CSV per alpha");
  add_common(psd, c);
  psd->add_option("--frames", psd_frames)->check(CLI::PositiveNumber);
  psd->add_option("--nfft", psd_nfft)->check(CLI::PositiveNumber);

  auto* ber = app.add_subcommand("ber", "BER curve for one detector");
  add_common(ber, c);

  double target = 0.8;
  std::vector<double> tune_alphas;
  auto* tune = app.add_subcommand("tune", "detector-mismatch BER traces");
  add_common(tune, c);
  tune->add_option("--signal-alpha", target);
  tune->add_option("--detector-alphas", tune_alphas);

  auto* scale = app.add_subcommand("scale", "SD vs MF at small N, MF and MultiSD at large N");
  add_common(scale, c);

  std::vector<int> n_list;
  int block = 8;
  auto* complexity = app.add_subcommand("complexity", "operation-count sweep CSV");
  add_common(complexity, c);
  complexity->add_option("--n", n_list, "subcarrier counts");
  complexity->add_option("--block-size", block)->check(CLI::PositiveNumber);

  std::string type = "TypeI";
  std::optional<int> per_class;
  auto* dataset = app.add_subcommand("dataset", "labelled IQ dataset for the classifier");
  add_common(dataset, c);
  dataset->add_option("--type", type, "TypeI or TypeII");
  dataset->add_option("--frames-per-class", per_class);

  std::string labels;
  double replay_es_n0 = 20.0;
  auto* replay = app.add_subcommand("replay", "BER with receiver alpha taken from predicted labels");
  add_common(replay, c);
  replay->add_option("--labels", labels, "frame_index,true_alpha,pred_alpha CSV")->required();
  replay->add_option("--esn0", replay_es_n0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(c, gen_frames, gen_es_n0);
    if (psd->parsed()) return cmd_psd(c, psd_frames, psd_nfft);
    if (ber->parsed()) return cmd_ber(c);
    if (tune->parsed()) return cmd_tune(c, target, tune_alphas);
    if (scale->parsed()) return cmd_scale(c);
    if (complexity->parsed()) return cmd_complexity(c, n_list, block);
    if (dataset->parsed()) return cmd_dataset(c, type, per_class);
    if (replay->parsed()) return cmd_replay(c, labels, replay_es_n0);
  } catch (const sefdm::CapacityError& e) {
    std::cerr << json{{"error", "capacity"}, {"message", e.what()}}.dump() << '\n';
    return 3;
  } catch (const sefdm::InvalidInput& e) {
    std::cerr << json{{"error", "invalid_input"}, {"message", e.what()}}.dump() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 1;
}
