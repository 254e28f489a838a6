// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/corpus/manifest.h"

#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "asvlab/core/error.h"

namespace asvlab {

const char* DomainTagName(DomainTag tag) {
  return tag == DomainTag::kSource ? "source" : "target";
}

DomainTag ParseDomainTag(const std::string& name) {
  if (name == "source") return DomainTag::kSource;
  if (name == "target") return DomainTag::kTarget;
  throw Error(ErrorKind::kFormat, "unknown domain_tag: " + name);
}

bool CorpusManifest::HasUtterance(const std::string& id) const {
  for (const auto& u : utterances)
    if (u.id == id) return true;
  return false;
}

const Utterance& CorpusManifest::UtteranceById(const std::string& id) const {
  for (const auto& u : utterances)
    if (u.id == id) return u;
  throw Error(ErrorKind::kLookup, "unknown utterance id: " + id);
}

std::vector<std::string> CorpusManifest::Speakers() const {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& u : utterances)
    if (seen.insert(u.speaker_id).second) out.push_back(u.speaker_id);
  return out;
}

std::vector<const Utterance*> CorpusManifest::BySpeaker(
    const std::string& speaker_id) const {
  std::vector<const Utterance*> out;
  for (const auto& u : utterances)
    if (u.speaker_id == speaker_id) out.push_back(&u);
  return out;
}

std::vector<std::string> CorpusManifest::PartitionSpeakers(
    const std::string& name) const {
  std::vector<std::string> out;
  if (generator_config.contains("partitions") &&
      generator_config["partitions"].contains(name)) {
    for (const auto& s : generator_config["partitions"][name])
      out.push_back(s.get<std::string>());
  }
  return out;
}

void CorpusManifest::Validate() const {
  std::unordered_map<std::string, const Utterance*> by_id;
  for (const auto& u : utterances) {
    if (!by_id.emplace(u.id, &u).second)
      throw Error(ErrorKind::kFormat, "duplicate utterance id: " + u.id);
  }
  for (const auto& t : trials) {
    const auto e = by_id.find(t.enroll);
    const auto v = by_id.find(t.eval);
    if (e == by_id.end() || v == by_id.end())
      throw Error(ErrorKind::kFormat, "trial references unknown utterance");
    if (t.enroll == t.eval)
      throw Error(ErrorKind::kFormat, "trial pairs an utterance with itself");
    const int expect = e->second->speaker_id == v->second->speaker_id ? 1 : 0;
    if (t.label != expect)
      throw Error(ErrorKind::kFormat, "trial label contradicts speaker ids");
  }

  if (generator_config.contains("partitions")) {
    std::unordered_map<std::string, std::string> owner;
    for (const auto& [part, list] : generator_config["partitions"].items()) {
      for (const auto& s : list) {
        const std::string spk = s.get<std::string>();
        auto [it, fresh] = owner.emplace(spk, part);
        if (!fresh && it->second != part)
          throw Error(ErrorKind::kFormat,
                      "speaker " + spk + " appears in partitions " +
                          it->second + " and " + part);
      }
    }
  }

  double lo = 0.0, hi = 0.0;
  if (generator_config.contains("min_duration_s"))
    lo = generator_config["min_duration_s"].get<double>();
  if (generator_config.contains("max_duration_s"))
    hi = generator_config["max_duration_s"].get<double>();
  if (hi > 0.0) {
    for (const auto& u : utterances) {
      if (u.duration < lo || u.duration > hi)
        throw Error(ErrorKind::kFormat,
                    "utterance " + u.id + " duration outside declared bounds");
    }
  }
}

void SaveManifest(const CorpusManifest& manifest, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path);
  nlohmann::json head = {{"kind", "manifest"},
                         {"seed", manifest.seed},
                         {"generator_config", manifest.generator_config}};
  os << head.dump() << "\n";
  for (const auto& u : manifest.utterances) {
    nlohmann::json j = {{"kind", "utterance"},
                        {"id", u.id},
                        {"speaker_id", u.speaker_id},
                        {"waveform_path", u.waveform_path},
                        {"domain_tag", DomainTagName(u.domain_tag)},
                        {"duration", u.duration}};
    os << j.dump() << "\n";
  }
  for (const auto& t : manifest.trials) {
    nlohmann::json j = {{"kind", "trial"},
                        {"enroll", t.enroll},
                        {"eval", t.eval},
                        {"label", t.label}};
    os << j.dump() << "\n";
  }
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path);
}

CorpusManifest LoadManifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path);
  CorpusManifest m;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(line_no) +
                                          ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "manifest") {
      m.seed = j.value("seed", 0ULL);
      if (j.contains("generator_config")) m.generator_config = j["generator_config"];
    } else if (kind == "utterance") {
      Utterance u;
      u.id = j.at("id").get<std::string>();
      u.speaker_id = j.at("speaker_id").get<std::string>();
      u.waveform_path = j.at("waveform_path").get<std::string>();
      u.domain_tag = ParseDomainTag(j.at("domain_tag").get<std::string>());
      u.duration = j.at("duration").get<double>();
      m.utterances.push_back(std::move(u));
    } else if (kind == "trial") {
      TrialPair t;
      t.enroll = j.at("enroll").get<std::string>();
      t.eval = j.at("eval").get<std::string>();
      t.label = j.at("label").get<int>();
      m.trials.push_back(std::move(t));
    } else {
      throw Error(ErrorKind::kFormat, path + ":" + std::to_string(line_no) +
                                          ": unknown record kind '" + kind + "'");
    }
  }
  return m;
}

}  // namespace asvlab
