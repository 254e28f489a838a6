// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Shared plumbing for the pipeline stage implementations. Internal to the
// harness sources; nothing here is public API.

#ifndef ASVLAB_SRC_HARNESS_STAGE_INTERNAL_H_
#define ASVLAB_SRC_HARNESS_STAGE_INTERNAL_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/harness/pipeline.h"

namespace asvlab {
namespace pipeline_detail {

struct StageCtx {
  const PipelineConfig& cfg;
  std::string dir;  // this stage's directory (exists, freshly created)
  uint64_t seed;    // DeriveSeed(cfg.seed, "stage/<name>")
};

void WriteJsonFile(const std::string& path, const nlohmann::json& j);
nlohmann::json ReadJsonFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& body);

CorpusManifest LoadPipelineManifest(const PipelineConfig& cfg);
EmbeddingModel LoadPipelineModel(const PipelineConfig& cfg, const std::string& id);
// model id -> calibrated decision threshold, from the systems stage.
std::map<std::string, double> LoadTaus(const PipelineConfig& cfg);
std::vector<TrialPair> LoadTrials(const std::string& path);
void SaveTrials(const std::vector<TrialPair>& trials, const std::string& path);
std::vector<DeviceProfile> LoadGrid(const PipelineConfig& cfg);
const ModelSpec& SpecFor(const PipelineConfig& cfg, const std::string& id);

// Deterministic playback-noise seeds shared by every stage that drives the
// replay channel, so with- and without-simulator runs face identical noise.
uint64_t OtaNoiseSeed(const PipelineConfig& cfg, const std::string& enroll,
                      const std::string& eval, int replay_id, bool adversarial);
// Per-utterance seed for the bona fide target-domain augmentation.
uint64_t TargetAugSeed(const PipelineConfig& cfg, const std::string& utt_id);

// Detector run names: the four variants plus the two alignment ablations.
const std::vector<std::string>& DetectorRunNames();
const std::vector<std::string>& DetectorPlotNames();
DetectorConfig DetectorConfigFor(const PipelineConfig& cfg, const std::string& run);

// Stage bodies; each returns stamp-relative output paths.
std::vector<std::string> RunCorpusGen(const StageCtx& ctx);
std::vector<std::string> RunPairs(const StageCtx& ctx);
std::vector<std::string> RunAsvTrain(const StageCtx& ctx);
std::vector<std::string> RunAsvEval(const StageCtx& ctx);
std::vector<std::string> RunAttack(const StageCtx& ctx);
std::vector<std::string> RunChannelApply(const StageCtx& ctx);
std::vector<std::string> RunNrsData(const StageCtx& ctx);
std::vector<std::string> RunNrsTrain(const StageCtx& ctx);
std::vector<std::string> RunNrsAttack(const StageCtx& ctx);
std::vector<std::string> RunDetectTrain(const StageCtx& ctx);
std::vector<std::string> RunDetectEval(const StageCtx& ctx);
std::vector<std::string> RunReport(const StageCtx& ctx);
std::vector<std::string> RunPlot(const StageCtx& ctx);

}  // namespace pipeline_detail
}  // namespace asvlab

#endif  // ASVLAB_SRC_HARNESS_STAGE_INTERNAL_H_
