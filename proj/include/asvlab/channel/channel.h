// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Parametric loudspeaker-to-microphone replay simulation:
//   gain -> reflections FIR -> tanh soft clip -> zero-phase band-pass ->
//   additive noise at a target SNR -> amplitude clamp.
// A 3x3 grid of playback/record tiers plus an exact-passthrough identity
// profile (replay id 0) covers the over-the-air conditions.

#ifndef ASVLAB_CHANNEL_CHANNEL_H_
#define ASVLAB_CHANNEL_CHANNEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/core/waveform.h"
#include "asvlab/corpus/manifest.h"

namespace asvlab {

struct ChannelParams {
  float gain = 1.0f;
  std::vector<float> ir = {1.0f};  // index 0 = direct path
  float softclip_drive = 0.0f;     // 0 bypasses the nonlinearity exactly
  float band_low_hz = 0.0f;        // <= 0 disables the high-pass edge
  float band_high_hz = 0.0f;       // >= Nyquist or <= 0 disables the low-pass edge
  bool add_noise = false;
  float noise_snr_db = 30.0f;      // relative to the filtered signal RMS
  uint64_t noise_seed = 0;
};

void ValidateChannelParams(const ChannelParams& p, int sample_rate);

struct DeviceProfile {
  int replay_id = 0;        // 0 = identity (exact passthrough)
  std::string playback = "NA";
  std::string record = "NA";
  ChannelParams params;

  bool identity() const { return replay_id == 0; }
};

// Applies the profile; identity profiles return the input unchanged.
// noise_seed folds into the profile's own seed so callers can decorrelate
// noise across utterances while staying deterministic.
Waveform ApplyChannel(const Waveform& w, const DeviceProfile& profile,
                      uint64_t noise_seed = 0);

// Identity profile (id 0) followed by the 3x3 playback x record grid
// (ids 1..9). Reflection patterns and noise seeds derive from seed.
std::vector<DeviceProfile> MakeProfileGrid(uint64_t seed);

const DeviceProfile& ProfileById(const std::vector<DeviceProfile>& grid, int replay_id);

nlohmann::json ProfileToJson(const DeviceProfile& p);
DeviceProfile ProfileFromJson(const nlohmann::json& j);
void SaveProfileGrid(const std::vector<DeviceProfile>& grid, const std::string& path);
std::vector<DeviceProfile> LoadProfileGrid(const std::string& path);

// One (clean, replayed) pair per utterance per profile.
struct ParallelUtterance {
  std::string utt_id;
  int replay_id = 0;
  std::string clean_path;
  std::string replayed_path;
};

struct ParallelCorpus {
  std::vector<ParallelUtterance> items;
};

// Plays every manifest utterance through every profile in the list; audio
// lands in out_dir as float WAVs, one row per (utterance, profile).
ParallelCorpus GenerateParallelCorpus(const CorpusManifest& manifest,
                                      const std::vector<DeviceProfile>& profiles,
                                      const std::string& out_dir, uint64_t seed);

void SaveParallelCorpus(const ParallelCorpus& pc, const std::string& path);
ParallelCorpus LoadParallelCorpus(const std::string& path);

}  // namespace asvlab

#endif  // ASVLAB_CHANNEL_CHANNEL_H_
