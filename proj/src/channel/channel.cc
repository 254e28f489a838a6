// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/channel/channel.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"

namespace asvlab {

namespace {

constexpr int kBandTaps = 129;  // odd length keeps the filter zero-phase

// Unity-DC-gain Hamming-windowed low-pass sinc kernel.
std::vector<double> LowPassKernel(double fc_hz, int sample_rate) {
  const int c = kBandTaps / 2;
  std::vector<double> h(kBandTaps);
  const double fc = fc_hz / sample_rate;
  double sum = 0.0;
  for (int j = 0; j < kBandTaps; ++j) {
    const int m = j - c;
    const double v = m == 0 ? 2.0 * fc
                            : std::sin(2.0 * M_PI * fc * m) / (M_PI * m);
    const double win =
        0.54 - 0.46 * std::cos(2.0 * M_PI * j / double(kBandTaps - 1));
    h[static_cast<size_t>(j)] = v * win;
    sum += h[static_cast<size_t>(j)];
  }
  for (auto& v : h) v /= sum;
  return h;
}

// Band-pass as difference of two unity-gain low-passes; disabled edges fall
// back to pure low/high-pass or no filtering at all.
std::vector<double> BandKernel(const ChannelParams& p, int sample_rate) {
  const double nyq = sample_rate / 2.0;
  const bool lo_active = p.band_low_hz > 0.0f;
  const bool hi_active = p.band_high_hz > 0.0f && p.band_high_hz < nyq;
  if (!lo_active && !hi_active) return {};
  std::vector<double> h(kBandTaps, 0.0);
  if (hi_active) {
    h = LowPassKernel(p.band_high_hz, sample_rate);
  } else {
    h[kBandTaps / 2] = 1.0;  // identity
  }
  if (lo_active) {
    const auto lp = LowPassKernel(p.band_low_hz, sample_rate);
    for (int j = 0; j < kBandTaps; ++j) h[static_cast<size_t>(j)] -= lp[static_cast<size_t>(j)];
  }
  return h;
}

}  // namespace

void ValidateChannelParams(const ChannelParams& p, int sample_rate) {
  if (!(p.gain > 0.0f) || !std::isfinite(p.gain)) {
    throw Error(ErrorKind::kConfig, "channel: gain must be positive and finite");
  }
  if (p.ir.empty()) {
    throw Error(ErrorKind::kConfig, "channel: impulse response must be non-empty");
  }
  if (p.ir[0] == 0.0f) {
    throw Error(ErrorKind::kConfig, "channel: impulse response needs a direct path");
  }
  if (p.softclip_drive < 0.0f || !std::isfinite(p.softclip_drive)) {
    throw Error(ErrorKind::kConfig, "channel: softclip drive must be >= 0");
  }
  const double nyq = sample_rate / 2.0;
  const bool lo = p.band_low_hz > 0.0f;
  const bool hi = p.band_high_hz > 0.0f && p.band_high_hz < nyq;
  if (lo && p.band_low_hz >= nyq) {
    throw Error(ErrorKind::kConfig, "channel: band_low_hz beyond Nyquist");
  }
  if (lo && hi && p.band_low_hz >= p.band_high_hz) {
    throw Error(ErrorKind::kConfig, "channel: band_low_hz must sit below band_high_hz");
  }
  if (p.add_noise && !std::isfinite(p.noise_snr_db)) {
    throw Error(ErrorKind::kConfig, "channel: noise SNR must be finite");
  }
}

Waveform ApplyChannel(const Waveform& w, const DeviceProfile& profile,
                      uint64_t noise_seed) {
  ValidateWaveform(w);
  if (profile.identity()) return w;
  const ChannelParams& p = profile.params;
  ValidateChannelParams(p, w.sample_rate);

  const size_t n = w.samples.size();
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = double(p.gain) * double(w.samples[i]);

  // Causal reflections FIR.
  if (p.ir.size() > 1 || p.ir[0] != 1.0f) {
    std::vector<double> z(n, 0.0);
    for (size_t j = 0; j < p.ir.size(); ++j) {
      const double a = p.ir[j];
      if (a == 0.0) continue;
      for (size_t t = j; t < n; ++t) z[t] += a * y[t - j];
    }
    y.swap(z);
  }

  // Unity-small-signal tanh soft clip; drive 0 bypasses it exactly.
  if (p.softclip_drive > 0.0f) {
    const double d = p.softclip_drive;
    for (auto& v : y) v = std::tanh(d * v) / d;
  }

  // Zero-phase band-pass (odd symmetric FIR applied centered).
  const auto h = BandKernel(p, w.sample_rate);
  if (!h.empty()) {
    const int c = kBandTaps / 2;
    std::vector<double> z(n, 0.0);
    for (size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (int j = 0; j < kBandTaps; ++j) {
        const long src = static_cast<long>(t) + c - j;
        if (src < 0 || src >= static_cast<long>(n)) continue;
        acc += h[static_cast<size_t>(j)] * y[static_cast<size_t>(src)];
      }
      z[t] = acc;
    }
    y.swap(z);
  }

  if (p.add_noise) {
    double rms = 0.0;
    for (double v : y) rms += v * v;
    rms = std::sqrt(rms / double(n));
    if (rms > 0.0) {
      const double noise_rms = rms * std::pow(10.0, -double(p.noise_snr_db) / 20.0);
      Rng rng(DeriveSeed(p.noise_seed, "noise/" + std::to_string(noise_seed)));
      for (auto& v : y) v += noise_rms * rng.Gaussian();
    }
  }

  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.samples[i] = static_cast<float>(std::min(std::max(y[i], -1.0), 1.0));
  }
  return out;
}

std::vector<DeviceProfile> MakeProfileGrid(uint64_t seed) {
  const char* playback_names[3] = {"High", "Medium", "Low"};
  const char* record_names[3] = {"iOS", "AndroidHigh", "AndroidLow"};
  const float play_band_low[3] = {50.0f, 90.0f, 160.0f};
  const float play_drive[3] = {0.4f, 1.0f, 2.2f};
  const float play_band_cap[3] = {7800.0f, 6500.0f, 5000.0f};
  const float rec_band_high[3] = {7600.0f, 6800.0f, 5800.0f};
  const float rec_snr_db[3] = {34.0f, 29.0f, 24.0f};

  std::vector<DeviceProfile> grid;
  grid.push_back(DeviceProfile{});  // replay id 0: identity

  for (int pb = 0; pb < 3; ++pb) {
    for (int rc = 0; rc < 3; ++rc) {
      DeviceProfile d;
      d.replay_id = 1 + pb * 3 + rc;
      d.playback = playback_names[pb];
      d.record = record_names[rc];
      ChannelParams& p = d.params;
      p.gain = 0.9f;
      p.softclip_drive = play_drive[pb];
      p.band_low_hz = play_band_low[pb];
      p.band_high_hz = std::min(play_band_cap[pb], rec_band_high[rc]);
      p.add_noise = true;
      p.noise_snr_db = rec_snr_db[rc];
      p.noise_seed = DeriveSeed(seed, "channel/noise/" + std::to_string(d.replay_id));

      // Direct path plus 2..5 early reflections within 20 ms.
      Rng rng(DeriveSeed(seed, "channel/ir/" + std::to_string(d.replay_id)));
      const int max_delay = 320;  // 20 ms at 16 kHz
      p.ir.assign(max_delay + 1, 0.0f);
      p.ir[0] = 1.0f;
      const int n_refl = 2 + rng.Index(4);
      for (int r = 0; r < n_refl; ++r) {
        const int delay = 1 + rng.Index(max_delay);
        const float amp = static_cast<float>(rng.Uniform(0.1, 0.4));
        p.ir[static_cast<size_t>(delay)] += amp;
      }
      grid.push_back(std::move(d));
    }
  }
  return grid;
}

const DeviceProfile& ProfileById(const std::vector<DeviceProfile>& grid,
                                 int replay_id) {
  for (const auto& p : grid) {
    if (p.replay_id == replay_id) return p;
  }
  throw Error(ErrorKind::kLookup,
              "channel: no profile with replay id " + std::to_string(replay_id));
}

nlohmann::json ProfileToJson(const DeviceProfile& d) {
  return nlohmann::json{{"replay_id", d.replay_id},
                        {"playback", d.playback},
                        {"record", d.record},
                        {"gain", d.params.gain},
                        {"ir", d.params.ir},
                        {"softclip_drive", d.params.softclip_drive},
                        {"band_low_hz", d.params.band_low_hz},
                        {"band_high_hz", d.params.band_high_hz},
                        {"add_noise", d.params.add_noise},
                        {"noise_snr_db", d.params.noise_snr_db},
                        {"noise_seed", d.params.noise_seed}};
}

DeviceProfile ProfileFromJson(const nlohmann::json& j) {
  DeviceProfile d;
  try {
    d.replay_id = j.at("replay_id").get<int>();
    d.playback = j.at("playback").get<std::string>();
    d.record = j.at("record").get<std::string>();
    d.params.gain = j.at("gain").get<float>();
    d.params.ir = j.at("ir").get<std::vector<float>>();
    d.params.softclip_drive = j.at("softclip_drive").get<float>();
    d.params.band_low_hz = j.at("band_low_hz").get<float>();
    d.params.band_high_hz = j.at("band_high_hz").get<float>();
    d.params.add_noise = j.at("add_noise").get<bool>();
    d.params.noise_snr_db = j.at("noise_snr_db").get<float>();
    d.params.noise_seed = j.at("noise_seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("channel: bad profile json: ") + e.what());
  }
  return d;
}

void SaveProfileGrid(const std::vector<DeviceProfile>& grid, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : grid) j.push_back(ProfileToJson(p));
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "channel: cannot write " + path);
  os << j.dump(2) << "\n";
  if (!os) throw Error(ErrorKind::kIo, "channel: failed writing " + path);
}

std::vector<DeviceProfile> LoadProfileGrid(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "channel: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("channel: bad grid json: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::kFormat, "channel: grid json must be an array");
  std::vector<DeviceProfile> grid;
  for (const auto& item : j) grid.push_back(ProfileFromJson(item));
  return grid;
}

ParallelCorpus GenerateParallelCorpus(const CorpusManifest& manifest,
                                      const std::vector<DeviceProfile>& profiles,
                                      const std::string& out_dir, uint64_t seed) {
  namespace fs = std::filesystem;
  if (profiles.empty()) {
    throw Error(ErrorKind::kPrecondition, "channel: no profiles to replay through");
  }
  fs::create_directories(out_dir);
  ParallelCorpus pc;
  for (const auto& u : manifest.utterances) {
    const Waveform clean = LoadWaveform(u.waveform_path);
    for (const auto& prof : profiles) {
      const uint64_t noise_seed =
          DeriveSeed(seed, u.id + "/" + std::to_string(prof.replay_id));
      Waveform replayed = ApplyChannel(clean, prof, noise_seed);
      ParallelUtterance item;
      item.utt_id = u.id;
      item.replay_id = prof.replay_id;
      item.clean_path = u.waveform_path;
      item.replayed_path =
          (fs::path(out_dir) /
           (u.id + "_rp" + std::to_string(prof.replay_id) + ".wav"))
              .string();
      SaveWaveform(replayed, item.replayed_path, WavEncoding::kFloat32);
      pc.items.push_back(std::move(item));
    }
  }
  return pc;
}

void SaveParallelCorpus(const ParallelCorpus& pc, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "channel: cannot write " + path);
  for (const auto& item : pc.items) {
    nlohmann::json j = {{"utt_id", item.utt_id},
                        {"replay_id", item.replay_id},
                        {"clean_path", item.clean_path},
                        {"replayed_path", item.replayed_path}};
    os << j.dump() << "\n";
  }
  if (!os) throw Error(ErrorKind::kIo, "channel: failed writing " + path);
}

ParallelCorpus LoadParallelCorpus(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "channel: cannot open " + path);
  ParallelCorpus pc;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      ParallelUtterance item;
      item.utt_id = j.at("utt_id").get<std::string>();
      item.replay_id = j.at("replay_id").get<int>();
      item.clean_path = j.at("clean_path").get<std::string>();
      item.replayed_path = j.at("replayed_path").get<std::string>();
      pc.items.push_back(std::move(item));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, "channel: parallel corpus line " +
                                          std::to_string(line_no) + ": " + e.what());
    }
  }
  return pc;
}

}  // namespace asvlab
