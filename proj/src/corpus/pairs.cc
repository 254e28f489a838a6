// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/corpus/pairs.h"

#include <unordered_map>
#include <unordered_set>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"

namespace asvlab {

TrialBuildResult BuildTrialPairs(const CorpusManifest& manifest, uint64_t seed,
                                 int rounds,
                                 const std::vector<std::string>& speaker_filter) {
  if (rounds < 1) throw Error(ErrorKind::kConfig, "rounds must be >= 1");

  std::vector<std::string> speakers;
  if (speaker_filter.empty()) {
    speakers = manifest.Speakers();
  } else {
    std::unordered_set<std::string> known;
    for (const auto& s : manifest.Speakers()) known.insert(s);
    for (const auto& s : speaker_filter) {
      if (!known.count(s))
        throw Error(ErrorKind::kLookup, "unknown speaker in filter: " + s);
    }
    speakers = speaker_filter;
  }
  if (speakers.size() < 2)
    throw Error(ErrorKind::kPrecondition, "need at least 2 speakers for pairs");

  std::unordered_map<std::string, std::vector<const Utterance*>> grouped;
  for (const auto& u : manifest.utterances)
    grouped[u.speaker_id].push_back(&u);

  std::vector<std::vector<const Utterance*>> utts(speakers.size());
  std::vector<size_t> eligible;
  for (size_t i = 0; i < speakers.size(); ++i) {
    const auto it = grouped.find(speakers[i]);
    if (it != grouped.end()) utts[i] = it->second;
    if (utts[i].size() >= 2) eligible.push_back(i);
  }

  TrialBuildResult result;
  result.skipped_speakers = static_cast<int>(speakers.size() - eligible.size());
  if (eligible.size() < 2)
    throw Error(ErrorKind::kPrecondition,
                "fewer than 2 speakers with >= 2 utterances");

  Rng rng(DeriveSeed(seed, "pairs"));
  for (int r = 0; r < rounds; ++r) {
    for (size_t ei = 0; ei < eligible.size(); ++ei) {
      const size_t i = eligible[ei];
      const auto& mine = utts[i];

      const size_t a = rng.Index(mine.size());
      size_t b = rng.Index(mine.size() - 1);
      if (b >= a) ++b;
      result.pairs.push_back({mine[a]->id, mine[b]->id, 1});

      size_t oj = rng.Index(eligible.size() - 1);
      if (oj >= ei) ++oj;
      const auto& other = utts[eligible[oj]];
      const size_t e = rng.Index(mine.size());
      const size_t v = rng.Index(other.size());
      result.pairs.push_back({mine[e]->id, other[v]->id, 0});
    }
  }
  return result;
}

}  // namespace asvlab
