// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORPUS_MANIFEST_H_
#define ASVLAB_CORPUS_MANIFEST_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace asvlab {

enum class DomainTag { kSource, kTarget };

const char* DomainTagName(DomainTag tag);
DomainTag ParseDomainTag(const std::string& name);

struct Utterance {
  std::string id;
  std::string speaker_id;
  std::string waveform_path;
  DomainTag domain_tag = DomainTag::kSource;
  double duration = 0.0;  // seconds
};

// References utterances by id; label 1 iff same speaker.
struct TrialPair {
  std::string enroll;
  std::string eval;
  int label = 0;
};

class CorpusManifest {
 public:
  std::vector<Utterance> utterances;
  std::vector<TrialPair> trials;
  uint64_t seed = 0;
  nlohmann::json generator_config = nlohmann::json::object();

  bool HasUtterance(const std::string& id) const;
  const Utterance& UtteranceById(const std::string& id) const;  // lookup error

  // Unique speaker ids in first-appearance order.
  std::vector<std::string> Speakers() const;
  std::vector<const Utterance*> BySpeaker(const std::string& speaker_id) const;

  // Speaker lists stored under generator_config["partitions"][name]
  // (names: train / dev / eval). Empty when undeclared.
  std::vector<std::string> PartitionSpeakers(const std::string& name) const;

  // Enforces manifest invariants: unique ids, trial references resolve,
  // labels match speaker equality, enroll != eval, partition speaker sets
  // disjoint, durations within declared bounds when present.
  void Validate() const;
};

void SaveManifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest LoadManifest(const std::string& path);

}  // namespace asvlab

#endif  // ASVLAB_CORPUS_MANIFEST_H_
