#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "json.hpp"

#include "sefdm/types.hpp"

namespace sefdm {

/// Sidecar describing a contiguous little-endian cf32 IQ file.
/// alpha_effective / alpha_target are indexed by class label; labels has one
/// entry per frame.
struct IqManifest {
  std::string iq_file;
  int n_subcarriers = 0;
  int oversampling = 1;
  int samples_per_frame = 0;
  int frames = 0;
  std::vector<double> alpha_target;
  std::vector<double> alpha_effective;
  std::vector<int> labels;
  nlohmann::json extra = nlohmann::json::object();  // experiment provenance (seed, channel, ...)
};

nlohmann::json manifest_to_json(const IqManifest& manifest);
IqManifest manifest_from_json(const nlohmann::json& j);

/// Interleaved re, im, re, im ... as 32-bit IEEE floats, little-endian.
void write_iq(std::ostream& out, std::span<const cplx> samples);
void write_iq_frames(std::ostream& out, std::span<const IqFrame> frames);
CVector read_iq(std::istream& in);

/// Writes <dir>/<manifest.iq_file> and <dir>/<stem>.json.
void write_iq_dataset(const std::filesystem::path& dir, const std::string& stem, const IqManifest& manifest,
                      std::span<const IqFrame> frames);

/// Loads a manifest and its frames, checking sizes against the manifest.
std::pair<IqManifest, std::vector<CVector>> read_iq_dataset(const std::filesystem::path& manifest_path);

}  // namespace sefdm
