#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "sefdm/experiments.hpp"

using namespace sefdm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig quick(int n, double alpha, DetectorId id) {
  ExperimentConfig cfg;
  cfg.signal = WaveformConfig::make(n, alpha);
  cfg.detector_alpha = alpha;
  cfg.detector = id;
  cfg.es_n0_grid_db = {0.0, 6.0};
  cfg.min_bit_errors = 50;
  cfg.max_frames = 2000;
  return cfg;
}

std::string csv_of(const BerCurve& c) {
  std::ostringstream out;
  write_ber_csv(out, c);
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sefdm_exp_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("ber curve bookkeeping") {
  const auto curve = run_ber(quick(8, 0.8, DetectorId::SD));
  REQUIRE(curve.points.size() == 2);
  for (const auto& p : curve.points) {
    CHECK(p.bits_sent == 16 * p.frames);
    CHECK((p.bit_errors >= 50 || p.frames == 2000));
    CHECK(p.ber == doctest::Approx(double(p.bit_errors) / double(p.bits_sent)));
    CHECK(p.mean_visited_nodes > 0.0);
  }
  CHECK(curve.points[0].ber > curve.points[1].ber);
  const std::string csv = csv_of(curve);
  CHECK(csv.rfind("esn0_db,bits,errors,ber\n", 0) == 0);
}

TEST_CASE("ber is reproducible byte for byte") {
  const auto cfg = quick(8, 0.8, DetectorId::MF);
  CHECK(csv_of(run_ber(cfg)) == csv_of(run_ber(cfg)));
  auto other = cfg;
  other.master_seed = 2;
  CHECK(csv_of(run_ber(cfg)) != csv_of(run_ber(other)));
}

TEST_CASE("detectors see the same frames") {
  // Orthogonal carriers: MF and SD make identical decisions on identical input.
  const auto mf = run_ber(quick(8, 1.0, DetectorId::MF));
  const auto sd = run_ber(quick(8, 1.0, DetectorId::SD));
  CHECK(csv_of(mf) == csv_of(sd));
}

TEST_CASE("matched noiseless runs are error free") {
  const double inf = std::numeric_limits<double>::infinity();
  for (auto id : {DetectorId::MF, DetectorId::SD, DetectorId::ML}) {
    auto cfg = quick(8, id == DetectorId::MF ? 1.0 : 0.8, id);
    cfg.es_n0_grid_db = {inf};
    cfg.max_frames = 50;
    const auto c = run_ber(cfg);
    CHECK(c.points[0].bit_errors == 0);
    CHECK(c.points[0].low_confidence);
  }
  ExperimentConfig big;
  big.signal = WaveformConfig::make(256, 0.8, 8, BandPlan{32, 8, 1});
  big.detector = DetectorId::MultiSD;
  big.es_n0_grid_db = {inf};
  big.max_frames = 20;
  CHECK(run_ber(big).points[0].bit_errors == 0);
}

TEST_CASE("fading with known channel") {
  auto cfg = quick(12, 0.8, DetectorId::SD);
  cfg.channel = ChannelKind::Fading;
  cfg.es_n0_grid_db = {10.0, 30.0};
  const auto c = run_ber(cfg);
  CHECK(c.points[1].ber < c.points[0].ber);
  CHECK(c.points[1].ber < 1e-2);
}

TEST_CASE("capacity errors surface before simulation") {
  auto cfg = quick(12, 0.8, DetectorId::ML);
  CHECK_THROWS_AS(run_ber(cfg), CapacityError);
  cfg.es_n0_grid_db.clear();
  cfg.detector = DetectorId::MF;
  CHECK_THROWS_AS(run_ber(cfg), InvalidInput);
}

TEST_CASE("tuning traces") {
  ExperimentConfig base;
  base.signal = WaveformConfig::make(32, 0.8, 8, BandPlan{4, 8, 1});
  base.es_n0_grid_db = {20.0};
  base.max_frames = 30;
  const std::vector<double> alphas{0.7, 0.8};
  const auto curves = run_tuning_defence(0.8, alphas, base);
  REQUIRE(curves.size() == 4);
  CHECK(curves[0].label.find("MultiSD rx_alpha=0.70") == 0);
  CHECK(curves[1].label.find("MF rx_alpha=0.70") == 0);
  CHECK(curves[2].points[0].ber < curves[0].points[0].ber);
}

TEST_CASE("scaling report refuses SD at the large size") {
  ScalingConfig cfg;
  cfg.n_small = 4;
  cfg.small_grid_db = {10.0};
  cfg.large_grid_db = {10.0};
  cfg.max_frames_small = 20;
  cfg.max_frames_large = 2;
  const auto r = run_scaling_defence(cfg);
  CHECK(r.large_sd_refused);
  CHECK(r.large_sd_refusal.find("256") != std::string::npos);
  CHECK(r.large_sd_ops == sd_upper_bound_ops(256));
  CHECK(r.large_sd_above_budget);
  CHECK(r.large_multisd_ops == multisd_upper_bound_ops(256, 8));
  const auto j = scaling_report_to_json(r);
  CHECK(j.at("large_sd").at("upper_bound_mults").get<std::string>() == sd_upper_bound_ops(256).multiplications.str());
  CHECK(r.small_sd.points.size() == 1);
  CHECK(r.large_multisd.points.size() == 1);
}

TEST_CASE("crossing point interpolation") {
  BerCurve c;
  c.points = {{0, 0, 0, 1e-1}, {10, 0, 0, 1e-3}, {20, 0, 0, 1e-5}};
  CHECK(*es_n0_at_ber(c, 1e-2) == doctest::Approx(5.0));
  CHECK(*es_n0_at_ber(c, 1e-4) == doctest::Approx(15.0));
  CHECK_FALSE(es_n0_at_ber(c, 1e-7).has_value());
  c.points[2].ber = 0.0;
  CHECK(*es_n0_at_ber(c, 1e-4) == doctest::Approx(20.0));
}

TEST_CASE("config json") {
  const nlohmann::json j = {{"waveform", {{"n_subcarriers", 64}, {"alpha", 0.75}, {"oversampling", 4},
                                          {"band_plan", {{"n_bands", 8}, {"band_size", 8}, {"guard_subcarriers", 1}}}}},
                            {"detector", "MultiSD"},
                            {"radius_policy", "unbounded"},
                            {"channel", "fading"},
                            {"channel_profile", std::string(SEFDM_DATA_DIR) + "/channel_default.json"},
                            {"es_n0_grid_db", {1, 2}},
                            {"master_seed", 77}};
  const auto cfg = experiment_from_json(j);
  CHECK(cfg.signal.n_subcarriers() == 64);
  CHECK(cfg.signal.band_plan()->guard_subcarriers == 1);
  CHECK(cfg.detector_alpha == 0.75);
  CHECK(cfg.radius_policy == RadiusPolicy::Unbounded);
  CHECK(cfg.channel == ChannelKind::Fading);
  CHECK(cfg.master_seed == 77);
  const auto again = experiment_from_json(experiment_to_json(cfg));
  CHECK(experiment_to_json(again) == experiment_to_json(cfg));
  CHECK_THROWS_AS(experiment_from_json({{"channel", "rayleigh"}}), InvalidInput);
}

TEST_CASE("dataset export") {
  DatasetSpec spec;
  spec.type = TypeSet::TypeI;
  spec.frames_per_class = 3;
  spec.n_subcarriers = 16;
  spec.band_plan = BandPlan{2, 8, 1};
  const auto dir = scratch("dataset");
  const auto m = export_dataset(spec, dir);
  CHECK(m.frames == 12);
  CHECK(m.labels == std::vector<int>{0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3});
  CHECK(m.alpha_target == type_set_alphas(TypeSet::TypeI));
  CHECK(fs::file_size(dir / "dataset.iq") == 12u * 128u * 8u);

  const auto [back, frames] = read_iq_dataset(dir / "dataset.json");
  CHECK(back.labels == m.labels);
  CHECK(frames.size() == 12);
  CHECK(back.extra.at("es_n0_db") == 20.0);

  std::istringstream labels(slurp(dir / "labels.csv"));
  std::string line;
  std::getline(labels, line);
  CHECK(line == "frame_index,label,alpha");
  std::getline(labels, line);
  CHECK(line == "0,0,1.0000");
  int rows = 1;
  while (std::getline(labels, line)) ++rows;
  CHECK(rows == 12);

  const auto dir2 = scratch("dataset2");
  export_dataset(spec, dir2);
  for (const char* f : {"dataset.iq", "dataset.json", "labels.csv"}) CHECK(slurp(dir / f) == slurp(dir2 / f));
  fs::remove_all(dir);
  fs::remove_all(dir2);

  CHECK(type_set_alphas(TypeSet::TypeII).size() == 7);
  CHECK(type_set_from_string("TypeII") == TypeSet::TypeII);
}

TEST_CASE("predicted-label replay") {
  std::istringstream ok("frame_index,true_alpha,pred_alpha\n0,0.8,0.8\n1,0.8,0.7\r\n\n2,1.0,1.0\n");
  const auto rows = read_predicted_labels(ok);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].pred_alpha == 0.7);

  std::istringstream bad_header("idx,a,b\n");
  CHECK_THROWS_AS(read_predicted_labels(bad_header), InvalidInput);
  std::istringstream bad_row("frame_index,true_alpha,pred_alpha\n0;0.8;0.8\n");
  CHECK_THROWS_AS(read_predicted_labels(bad_row), InvalidInput);

  ExperimentConfig base;
  base.signal = WaveformConfig::make(32, 0.8, 8, BandPlan{4, 8, 1});
  base.detector = DetectorId::MultiSD;
  std::vector<PredictedLabel> right, wrong;
  for (long i = 0; i < 40; ++i) {
    right.push_back({i, 0.8, 0.8});
    wrong.push_back({i, 0.8, i % 2 ? 0.7 : 0.9});
  }
  const auto a = replay_predicted_labels(base, right, 20.0);
  const auto b = replay_predicted_labels(base, wrong, 20.0);
  CHECK(a.frames == 40);
  CHECK(a.bits_sent == 40u * 64u);
  CHECK(b.ber > 10.0 * a.ber);
  CHECK(b.ber > 0.1);
}
