// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/corpus/synth.h"

#include <cmath>
#include <filesystem>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"

namespace asvlab {

namespace {

// Two-pole resonator y[t] = g x[t] + 2r cos(w) y[t-1] - r^2 y[t-2].
struct Resonator {
  double freq_hz;
  double bandwidth_hz;

  void Apply(std::vector<double>* x, int sample_rate) const {
    const double r = std::exp(-M_PI * bandwidth_hz / sample_rate);
    const double w = 2.0 * M_PI * freq_hz / sample_rate;
    const double a1 = 2.0 * r * std::cos(w);
    const double a2 = -r * r;
    // Unity gain at the resonance peak.
    const double g = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * w) + r * r);
    double y1 = 0.0, y2 = 0.0;
    for (double& v : *x) {
      const double y = g * v + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }
};

struct SpeakerVoice {
  double f0;
  Resonator formants[3];
};

SpeakerVoice MakeVoice(const SynthConfig& cfg, uint64_t seed, int speaker) {
  Rng rng(DeriveSeed(seed, "speaker/" + std::to_string(speaker)));
  SpeakerVoice v;
  v.f0 = SpeakerF0(cfg, speaker);
  const double f1 = 320.0 + rng.Uniform() * 500.0;
  const double f2 = f1 + 350.0 + rng.Uniform() * 1100.0;
  const double f3 = std::min(f2 + 400.0 + rng.Uniform() * 1300.0, 3800.0);
  v.formants[0] = {f1, 70.0 + rng.Uniform() * 60.0};
  v.formants[1] = {f2, 90.0 + rng.Uniform() * 70.0};
  v.formants[2] = {f3, 120.0 + rng.Uniform() * 80.0};
  return v;
}

}  // namespace

nlohmann::json SynthConfig::ToJson() const {
  return {{"n_speakers", n_speakers},
          {"utts_per_speaker", utts_per_speaker},
          {"duration_s", duration_s},
          {"min_duration_s", min_duration_s},
          {"max_duration_s", max_duration_s},
          {"f0_range_hz", {f0_min_hz, f0_max_hz}},
          {"snr_db", snr_db},
          {"peak", peak},
          {"sample_rate", sample_rate},
          {"train_frac", train_frac},
          {"dev_frac", dev_frac}};
}

SynthConfig SynthConfig::FromJson(const nlohmann::json& j) {
  SynthConfig c;
  c.n_speakers = j.value("n_speakers", c.n_speakers);
  c.utts_per_speaker = j.value("utts_per_speaker", c.utts_per_speaker);
  c.duration_s = j.value("duration_s", c.duration_s);
  c.min_duration_s = j.value("min_duration_s", c.min_duration_s);
  c.max_duration_s = j.value("max_duration_s", c.max_duration_s);
  if (j.contains("f0_range_hz")) {
    c.f0_min_hz = j["f0_range_hz"][0].get<double>();
    c.f0_max_hz = j["f0_range_hz"][1].get<double>();
  }
  c.snr_db = j.value("snr_db", c.snr_db);
  c.peak = j.value("peak", c.peak);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.train_frac = j.value("train_frac", c.train_frac);
  c.dev_frac = j.value("dev_frac", c.dev_frac);
  return c;
}

void ValidateSynthConfig(const SynthConfig& cfg) {
  if (cfg.n_speakers < 2)
    throw Error(ErrorKind::kPrecondition, "need at least 2 speakers");
  if (cfg.utts_per_speaker < 2)
    throw Error(ErrorKind::kPrecondition, "need at least 2 utterances/speaker");
  if (cfg.duration_s <= 0.0)
    throw Error(ErrorKind::kConfig, "duration_s must be positive");
  if (cfg.duration_s < cfg.min_duration_s || cfg.duration_s > cfg.max_duration_s)
    throw Error(ErrorKind::kConfig, "duration_s outside configured bounds");
  if (!(cfg.f0_min_hz > 0.0) || !(cfg.f0_max_hz > cfg.f0_min_hz))
    throw Error(ErrorKind::kConfig, "bad f0 range");
  if (cfg.peak <= 0.0 || cfg.peak > 1.0)
    throw Error(ErrorKind::kConfig, "peak must be in (0, 1]");
  if (cfg.sample_rate <= 0)
    throw Error(ErrorKind::kConfig, "sample_rate must be positive");
  if (cfg.train_frac <= 0.0 || cfg.dev_frac <= 0.0 ||
      cfg.train_frac + cfg.dev_frac >= 1.0)
    throw Error(ErrorKind::kConfig, "partition fractions must leave eval room");
}

double SpeakerF0(const SynthConfig& cfg, int speaker_index) {
  if (cfg.n_speakers == 1) return cfg.f0_min_hz;
  const double t =
      static_cast<double>(speaker_index) / static_cast<double>(cfg.n_speakers - 1);
  return cfg.f0_min_hz * std::pow(cfg.f0_max_hz / cfg.f0_min_hz, t);
}

Waveform SynthesizeUtterance(const SynthConfig& cfg, uint64_t seed,
                             int speaker_index, int utt_index) {
  ValidateSynthConfig(cfg);
  const SpeakerVoice voice = MakeVoice(cfg, seed, speaker_index);
  Rng rng(DeriveSeed(DeriveSeed(seed, "speaker/" + std::to_string(speaker_index)),
                     "utt/" + std::to_string(utt_index)));

  const int n = static_cast<int>(std::lround(cfg.duration_s * cfg.sample_rate));
  std::vector<double> x(n, 0.0);

  // Glottal pulse train with vibrato, jitter and shimmer.
  const double vib_rate = 4.0 + rng.Uniform() * 2.5;
  const double vib_phase = rng.Uniform() * 2.0 * M_PI;
  const double vib_depth = 0.02;
  double jitter = 0.0;
  double t_pulse = rng.Uniform() * cfg.sample_rate / voice.f0;
  while (t_pulse < n) {
    const int idx = static_cast<int>(t_pulse);
    const double amp = 1.0 + 0.05 * (rng.Uniform() * 2.0 - 1.0);
    x[idx] += amp;
    jitter += 0.01 * (rng.Uniform() * 2.0 - 1.0);
    jitter = std::clamp(jitter, -0.03, 0.03);
    const double phase = 2.0 * M_PI * vib_rate * t_pulse / cfg.sample_rate;
    const double f0_now =
        voice.f0 * (1.0 + vib_depth * std::sin(phase + vib_phase) + jitter);
    t_pulse += cfg.sample_rate / f0_now;
  }

  for (const Resonator& f : voice.formants) f.Apply(&x, cfg.sample_rate);

  // Amplitude contour: onset/offset ramps plus slow modulation.
  const double am_rate = 1.5 + rng.Uniform() * 2.0;
  const double am_phase = rng.Uniform() * 2.0 * M_PI;
  const int ramp_in = static_cast<int>(0.06 * cfg.sample_rate);
  const int ramp_out = static_cast<int>(0.10 * cfg.sample_rate);
  for (int i = 0; i < n; ++i) {
    double env = 1.0 + 0.25 * std::sin(2.0 * M_PI * am_rate * i / cfg.sample_rate +
                                       am_phase);
    if (i < ramp_in) env *= static_cast<double>(i) / ramp_in;
    if (i >= n - ramp_out) env *= static_cast<double>(n - 1 - i) / ramp_out;
    x[i] *= env;
  }

  double rms = 0.0;
  for (double v : x) rms += v * v;
  rms = std::sqrt(rms / n);
  const double noise_rms = rms * std::pow(10.0, -cfg.snr_db / 20.0);
  for (double& v : x) v += noise_rms * rng.Gaussian();

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak <= 0.0)
    throw Error(ErrorKind::kDegenerate, "synthesized silence");
  const double scale = cfg.peak / peak;

  Waveform w;
  w.sample_rate = cfg.sample_rate;
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) w.samples[i] = static_cast<float>(x[i] * scale);
  ValidateWaveform(w);
  return w;
}

CorpusManifest SynthesizeCorpus(const SynthConfig& cfg, uint64_t seed,
                                const std::string& out_dir) {
  ValidateSynthConfig(cfg);
  std::filesystem::create_directories(out_dir);

  CorpusManifest m;
  m.seed = seed;
  m.generator_config = cfg.ToJson();
  m.generator_config["min_duration_s"] = cfg.min_duration_s;
  m.generator_config["max_duration_s"] = cfg.max_duration_s;

  char buf[64];
  for (int s = 0; s < cfg.n_speakers; ++s) {
    std::snprintf(buf, sizeof(buf), "spk%03d", s);
    const std::string speaker_id = buf;
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      std::snprintf(buf, sizeof(buf), "%s_utt%03d", speaker_id.c_str(), u);
      Utterance utt;
      utt.id = buf;
      utt.speaker_id = speaker_id;
      utt.waveform_path =
          (std::filesystem::path(out_dir) / (utt.id + ".wav")).string();
      utt.domain_tag = DomainTag::kSource;
      utt.duration = cfg.duration_s;
      SaveWaveform(SynthesizeUtterance(cfg, seed, s, u), utt.waveform_path);
      m.utterances.push_back(std::move(utt));
    }
  }

  const int n_train = static_cast<int>(std::lround(cfg.n_speakers * cfg.train_frac));
  const int n_dev = static_cast<int>(std::lround(cfg.n_speakers * cfg.dev_frac));
  nlohmann::json parts = {{"train", nlohmann::json::array()},
                          {"dev", nlohmann::json::array()},
                          {"eval", nlohmann::json::array()}};
  for (int s = 0; s < cfg.n_speakers; ++s) {
    std::snprintf(buf, sizeof(buf), "spk%03d", s);
    const char* part = s < n_train ? "train" : (s < n_train + n_dev ? "dev" : "eval");
    parts[part].push_back(std::string(buf));
  }
  m.generator_config["partitions"] = parts;
  m.Validate();
  return m;
}

double EstimatePitchHz(const Waveform& w, double f0_min, double f0_max) {
  const int sr = w.sample_rate;
  const int want = 4096;
  const int n = static_cast<int>(w.size());
  if (n < want) throw Error(ErrorKind::kLength, "waveform too short for pitch");
  const int start = (n - want) / 2;
  const float* x = w.samples.data() + start;

  const int lag_min = std::max(2, static_cast<int>(sr / (f0_max * 1.2)));
  const int lag_max = std::min(want / 2, static_cast<int>(sr / (f0_min * 0.8)));
  double best = -1.0;
  int best_lag = lag_min;
  std::vector<double> ac(lag_max + 1, 0.0);
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    double acc = 0.0;
    for (int i = 0; i + lag < want; ++i)
      acc += static_cast<double>(x[i]) * x[i + lag];
    ac[lag] = acc;
    if (acc > best) {
      best = acc;
      best_lag = lag;
    }
  }
  // Parabolic refinement around the peak.
  double lag = best_lag;
  if (best_lag > lag_min && best_lag < lag_max) {
    const double y0 = ac[best_lag - 1], y1 = ac[best_lag], y2 = ac[best_lag + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::fabs(denom) > 1e-12) lag += 0.5 * (y0 - y2) / denom;
  }
  return sr / lag;
}

}  // namespace asvlab
