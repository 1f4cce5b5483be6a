#include "sefdm/iq_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace sefdm {
namespace {

void put_f32le(std::ostream& out, double value) {
  const auto f = static_cast<float>(value);
  std::uint32_t word;
  std::memcpy(&word, &f, sizeof word);
  if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
  std::array<char, 4> bytes;
  std::memcpy(bytes.data(), &word, 4);
  out.write(bytes.data(), 4);
}

bool get_f32le(std::istream& in, float& value) {
  std::array<char, 4> bytes;
  if (!in.read(bytes.data(), 4)) return false;
  std::uint32_t word;
  std::memcpy(&word, bytes.data(), 4);
  if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
  std::memcpy(&value, &word, sizeof value);
  return true;
}

}  // namespace

nlohmann::json manifest_to_json(const IqManifest& m) {
  nlohmann::json j = m.extra;
  j["format"] = "cf32le";
  j["iq_file"] = m.iq_file;
  j["n_subcarriers"] = m.n_subcarriers;
  j["oversampling"] = m.oversampling;
  j["samples_per_frame"] = m.samples_per_frame;
  j["frames"] = m.frames;
  j["alpha_target"] = m.alpha_target;
  j["alpha_effective"] = m.alpha_effective;
  j["labels"] = m.labels;
  return j;
}

IqManifest manifest_from_json(const nlohmann::json& j) {
  IqManifest m;
  m.iq_file = j.at("iq_file").get<std::string>();
  m.n_subcarriers = j.at("n_subcarriers").get<int>();
  m.oversampling = j.at("oversampling").get<int>();
  m.samples_per_frame = j.at("samples_per_frame").get<int>();
  m.frames = j.at("frames").get<int>();
  m.alpha_target = j.value("alpha_target", std::vector<double>{});
  m.alpha_effective = j.at("alpha_effective").get<std::vector<double>>();
  m.labels = j.at("labels").get<std::vector<int>>();
  m.extra = j;
  for (const char* key : {"format", "iq_file", "n_subcarriers", "oversampling", "samples_per_frame", "frames",
                          "alpha_target", "alpha_effective", "labels"}) {
    m.extra.erase(key);
  }
  if (static_cast<int>(m.labels.size()) != m.frames) throw InvalidInput("manifest labels do not cover every frame");
  return m;
}

void write_iq(std::ostream& out, std::span<const cplx> samples) {
  for (const auto& s : samples) {
    put_f32le(out, s.real());
    put_f32le(out, s.imag());
  }
}

void write_iq_frames(std::ostream& out, std::span<const IqFrame> frames) {
  for (const auto& frame : frames) write_iq(out, frame.samples);
}

CVector read_iq(std::istream& in) {
  CVector samples;
  float re = 0.0f, im = 0.0f;
  while (get_f32le(in, re)) {
    if (!get_f32le(in, im)) throw InvalidInput("truncated IQ stream: odd number of floats");
    samples.emplace_back(re, im);
  }
  return samples;
}

void write_iq_dataset(const std::filesystem::path& dir, const std::string& stem, const IqManifest& manifest,
                      std::span<const IqFrame> frames) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream iq(dir / manifest.iq_file, std::ios::binary);
    if (!iq) throw std::runtime_error("cannot open " + (dir / manifest.iq_file).string());
    write_iq_frames(iq, frames);
    if (!iq) throw std::runtime_error("write failed for " + (dir / manifest.iq_file).string());
  }
  std::ofstream js(dir / (stem + ".json"));
  if (!js) throw std::runtime_error("cannot open " + (dir / (stem + ".json")).string());
  js << manifest_to_json(manifest).dump(2) << '\n';
}

std::pair<IqManifest, std::vector<CVector>> read_iq_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream js(manifest_path);
  if (!js) throw std::runtime_error("cannot open " + manifest_path.string());
  IqManifest manifest = manifest_from_json(nlohmann::json::parse(js));

  std::ifstream iq(manifest_path.parent_path() / manifest.iq_file, std::ios::binary);
  if (!iq) throw std::runtime_error("cannot open " + manifest.iq_file);
  const CVector all = read_iq(iq);
  const auto per_frame = static_cast<std::size_t>(manifest.samples_per_frame);
  if (all.size() != per_frame * static_cast<std::size_t>(manifest.frames)) {
    throw InvalidInput("IQ file size does not match manifest");
  }
  std::vector<CVector> frames;
  frames.reserve(static_cast<std::size_t>(manifest.frames));
  for (std::size_t f = 0; f < static_cast<std::size_t>(manifest.frames); ++f) {
    frames.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(f * per_frame),
                        all.begin() + static_cast<std::ptrdiff_t>((f + 1) * per_frame));
  }
  return {std::move(manifest), std::move(frames)};
}

}  // namespace sefdm
