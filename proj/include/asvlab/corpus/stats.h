// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef ASVLAB_CORPUS_STATS_H_
#define ASVLAB_CORPUS_STATS_H_

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/corpus/manifest.h"

namespace asvlab {

struct StatGroup {
  size_t count = 0;
  double hours = 0.0;
};

// Sample counts and audio hours, total and per category key. The sum over
// any complete category equals the total.
struct StatsTable {
  size_t total_count = 0;
  double total_hours = 0.0;
  std::map<std::string, std::map<std::string, StatGroup>> by_category;

  nlohmann::json ToJson() const;
  std::string ToText() const;
};

// Accumulates one record at a time; each record carries its duration and a
// (category, key) tag per category it belongs to.
class StatsBuilder {
 public:
  void Add(const std::vector<std::pair<std::string, std::string>>& tags,
           double duration_s);
  StatsTable Build() const;

 private:
  StatsTable table_;
};

// Stats over a corpus manifest: categories "speaker" and "domain_tag".
StatsTable ComputeCorpusStats(const CorpusManifest& manifest);

}  // namespace asvlab

#endif  // ASVLAB_CORPUS_STATS_H_
