// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORPUS_PAIRS_H_
#define ASVLAB_CORPUS_PAIRS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asvlab/corpus/manifest.h"

namespace asvlab {

struct TrialBuildResult {
  std::vector<TrialPair> pairs;
  int skipped_speakers = 0;
};

// Per round, emits one same-speaker pair and one different-speaker pair per
// speaker (total 2 * n_speakers * rounds). Speakers with fewer than two
// utterances are skipped and counted. When speaker_filter is non-empty,
// only those speakers enroll and partners are drawn from the same set.
TrialBuildResult BuildTrialPairs(
    const CorpusManifest& manifest, uint64_t seed, int rounds = 1,
    const std::vector<std::string>& speaker_filter = {});

}  // namespace asvlab

#endif  // ASVLAB_CORPUS_PAIRS_H_
