// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/corpus/stats.h"

#include <iomanip>
#include <sstream>

namespace asvlab {

nlohmann::json StatsTable::ToJson() const {
  nlohmann::json j;
  j["total"] = {{"count", total_count}, {"hours", total_hours}};
  for (const auto& [cat, groups] : by_category) {
    nlohmann::json g;
    for (const auto& [key, stat] : groups)
      g[key] = {{"count", stat.count}, {"hours", stat.hours}};
    j["by_category"][cat] = g;
  }
  return j;
}

std::string StatsTable::ToText() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(18) << "category" << std::setw(22) << "key"
     << std::right << std::setw(10) << "count" << std::setw(12) << "hours"
     << "\n";
  for (const auto& [cat, groups] : by_category) {
    for (const auto& [key, stat] : groups) {
      os << std::left << std::setw(18) << cat << std::setw(22) << key
         << std::right << std::setw(10) << stat.count << std::setw(12)
         << stat.hours << "\n";
    }
  }
  os << std::left << std::setw(18) << "TOTAL" << std::setw(22) << "-"
     << std::right << std::setw(10) << total_count << std::setw(12)
     << total_hours << "\n";
  return os.str();
}

void StatsBuilder::Add(
    const std::vector<std::pair<std::string, std::string>>& tags,
    double duration_s) {
  const double hours = duration_s / 3600.0;
  table_.total_count += 1;
  table_.total_hours += hours;
  for (const auto& [cat, key] : tags) {
    StatGroup& g = table_.by_category[cat][key];
    g.count += 1;
    g.hours += hours;
  }
}

StatsTable StatsBuilder::Build() const { return table_; }

StatsTable ComputeCorpusStats(const CorpusManifest& manifest) {
  StatsBuilder builder;
  for (const auto& u : manifest.utterances) {
    builder.Add({{"speaker", u.speaker_id},
                 {"domain_tag", DomainTagName(u.domain_tag)}},
                u.duration);
  }
  return builder.Build();
}

}  // namespace asvlab
