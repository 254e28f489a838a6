// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Synthetic multi-speaker corpus generator. Each speaker is a source-filter
// voice: a pulse train at a speaker-specific fundamental (with vibrato and
// jitter) driven through three speaker-specific resonant filters, plus
// additive noise at a configured SNR.

#ifndef ASVLAB_CORPUS_SYNTH_H_
#define ASVLAB_CORPUS_SYNTH_H_

#include <cstdint>
#include <string>

#include "asvlab/core/waveform.h"
#include "asvlab/corpus/manifest.h"

namespace asvlab {

struct SynthConfig {
  int n_speakers = 20;
  int utts_per_speaker = 10;
  double duration_s = 3.0;
  double min_duration_s = 2.0;
  double max_duration_s = 4.5;
  double f0_min_hz = 95.0;
  double f0_max_hz = 250.0;
  double snr_db = 32.0;
  double peak = 0.45;
  int sample_rate = 16000;
  // Speaker split fractions; remainder goes to eval.
  double train_frac = 0.5;
  double dev_frac = 0.2;

  nlohmann::json ToJson() const;
  static SynthConfig FromJson(const nlohmann::json& j);
};

void ValidateSynthConfig(const SynthConfig& cfg);

// The deterministic per-speaker fundamental (log-spaced over the F0 range).
double SpeakerF0(const SynthConfig& cfg, int speaker_index);

// Synthesizes one utterance deterministically from (seed, speaker, index).
Waveform SynthesizeUtterance(const SynthConfig& cfg, uint64_t seed,
                             int speaker_index, int utt_index);

// Generates the corpus, writes WAVs under out_dir, returns the manifest
// (with train/dev/eval speaker partitions in generator_config).
CorpusManifest SynthesizeCorpus(const SynthConfig& cfg, uint64_t seed,
                                const std::string& out_dir);

// Autocorrelation pitch estimate for a voiced waveform, in Hz.
double EstimatePitchHz(const Waveform& w, double f0_min, double f0_max);

}  // namespace asvlab

#endif  // ASVLAB_CORPUS_SYNTH_H_
