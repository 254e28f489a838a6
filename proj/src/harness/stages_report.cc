// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Report and plot stages. The report consumes only the per-trial CSV files
// persisted by earlier stages, so every aggregate it states can be
// recomputed from artifacts on disk by hand.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "asvlab/core/error.h"
#include "asvlab/harness/csv.h"
#include "asvlab/harness/plots.h"
#include "harness/stage_internal.h"

namespace fs = std::filesystem;

namespace asvlab {
namespace pipeline_detail {

namespace {

struct Tally {
  int trials = 0;
  int eligible = 0;
  int successes = 0;
  double rate() const {
    return eligible > 0 ? static_cast<double>(successes) / eligible : 0.0;
  }
};

void Count(Tally* t, const std::string& eligible, const std::string& success) {
  ++t->trials;
  if (eligible == "1") ++t->eligible;
  if (success == "1") ++t->successes;
}

nlohmann::json TallyJson(const Tally& t) {
  return {{"trials", t.trials},
          {"eligible", t.eligible},
          {"successes", t.successes},
          {"success_rate", t.rate()}};
}

std::string Fmt(double v, int prec = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return std::string(buf);
}

// Pads each column to its widest cell; two spaces between columns.
std::string AlignedTable(const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (size_t c = 0; c < row.size(); ++c) {
      std::string cell = row[c];
      cell.resize(width[c], ' ');
      line += cell;
      if (c + 1 < row.size()) line += "  ";
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line;
    out += "\n";
  }
  return out;
}

// Condition key with a stable numeric ordering on replay id.
struct Condition {
  int replay_id;
  std::string playback;
  std::string record;
};

}  // namespace

std::vector<std::string> RunReport(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  nlohmann::json report;
  report["format_version"] = 1;
  std::ostringstream text;
  text << "experiment report\n=================\n";

  // --- attack runs (white-box craft + victim transfer) -------------------
  {
    const CsvTable csv = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kAttack)) / "attack_trials.csv").string());
    std::vector<std::string> order;
    std::map<std::string, Tally> craft, transfer;
    std::map<std::string, std::string> method_of;
    for (size_t r = 0; r < csv.rows.size(); ++r) {
      const std::string key = csv.At(r, "surrogates");
      if (!craft.count(key)) order.push_back(key);
      method_of[key] = csv.At(r, "method");
      Count(&craft[key], csv.At(r, "eligible"), csv.At(r, "success"));
      Count(&transfer[key], csv.At(r, "victim_eligible"),
            csv.At(r, "victim_success"));
    }
    nlohmann::json runs = nlohmann::json::array();
    std::vector<std::vector<std::string>> table = {
        {"method", "surrogates", "trials", "elig", "succ", "rate",
         "transfer_elig", "transfer_succ", "transfer_rate"}};
    for (const auto& key : order) {
      const Tally& c = craft[key];
      const Tally& v = transfer[key];
      nlohmann::json run = {{"method", method_of[key]},
                            {"surrogates", key},
                            {"craft", TallyJson(c)},
                            {"victim", cfg.victim},
                            {"transfer", TallyJson(v)}};
      runs.push_back(run);
      table.push_back({method_of[key], key, std::to_string(c.trials),
                       std::to_string(c.eligible), std::to_string(c.successes),
                       Fmt(c.rate()), std::to_string(v.eligible),
                       std::to_string(v.successes), Fmt(v.rate())});
    }
    report["attack"] = {{"victim", cfg.victim}, {"runs", runs}};
    text << "\nattack success, different-speaker trials (transfer victim: "
         << cfg.victim << ")\n";
    text << AlignedTable(table);
  }

  // --- replay channel, with and without the simulator --------------------
  {
    const CsvTable ota = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kChannelApply)) / "ota_trials.csv").string());
    const CsvTable nrs = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kNrsAttack)) / "nrs_trials.csv").string());

    auto tally_by = [](const CsvTable& csv) {
      std::map<std::string, std::map<int, Tally>> by_subject;
      std::map<int, Condition> conditions;
      for (size_t r = 0; r < csv.rows.size(); ++r) {
        const int replay = std::stoi(csv.At(r, "replay_id"));
        conditions[replay] = {replay, csv.At(r, "playback"), csv.At(r, "record")};
        Count(&by_subject[csv.At(r, "surrogate")][replay], csv.At(r, "eligible"),
              csv.At(r, "success"));
      }
      return std::make_pair(by_subject, conditions);
    };
    auto [ota_by, ota_cond] = tally_by(ota);
    auto [nrs_by, nrs_cond] = tally_by(nrs);

    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& sid : cfg.ota_models) {
      const auto& without = ota_by.at(sid);
      const auto& with = nrs_by.at(sid);
      nlohmann::json conditions = nlohmann::json::array();
      double sum_wo = 0.0, sum_wi = 0.0;
      int n_grid = 0;
      double reference = 0.0;
      for (const auto& [replay, tally] : without) {
        if (replay == 0) {
          reference = tally.rate();
          nlohmann::json c = {{"replay_id", 0},
                              {"playback", ota_cond.at(0).playback},
                              {"record", ota_cond.at(0).record},
                              {"without_nrs", TallyJson(tally)}};
          conditions.push_back(c);
          continue;
        }
        const Tally& wi = with.at(replay);
        nlohmann::json c = {{"replay_id", replay},
                            {"playback", ota_cond.at(replay).playback},
                            {"record", ota_cond.at(replay).record},
                            {"without_nrs", TallyJson(tally)},
                            {"with_nrs", TallyJson(wi)},
                            {"gain", wi.rate() - tally.rate()}};
        conditions.push_back(c);
        sum_wo += tally.rate();
        sum_wi += wi.rate();
        ++n_grid;
      }
      const double mean_wo = n_grid ? sum_wo / n_grid : 0.0;
      const double mean_wi = n_grid ? sum_wi / n_grid : 0.0;
      subjects.push_back({{"surrogate", sid},
                          {"reference_success_rate", reference},
                          {"mean_grid_without_nrs", mean_wo},
                          {"mean_grid_with_nrs", mean_wi},
                          {"mean_gain", mean_wi - mean_wo},
                          {"mean_drop_from_reference", reference - mean_wo},
                          {"conditions", conditions}});

      text << "\nreplay grid for " << sid
           << " (over-the-line reference " << Fmt(reference) << ")\n";
      std::vector<std::vector<std::string>> table = {
          {"replay", "playback", "record", "without_nrs", "with_nrs", "gain"}};
      for (const auto& [replay, tally] : without) {
        if (replay == 0) continue;
        const Tally& wi = with.at(replay);
        table.push_back({std::to_string(replay), ota_cond.at(replay).playback,
                         ota_cond.at(replay).record, Fmt(tally.rate()),
                         Fmt(wi.rate()), Fmt(wi.rate() - tally.rate())});
      }
      table.push_back({"mean", "-", "-", Fmt(mean_wo), Fmt(mean_wi),
                       Fmt(mean_wi - mean_wo)});
      text << AlignedTable(table);
    }
    report["replay"] = {{"subjects", subjects}};
  }

  // --- simulator fidelity -------------------------------------------------
  {
    const CsvTable csv = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kNrsTrain)) / "holdout.csv").string());
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::vector<std::string>> table = {
        {"replay", "held_out", "improved", "frac", "baseline_mssl", "model_mssl"}};
    for (size_t r = 0; r < csv.rows.size(); ++r) {
      const int n = std::stoi(csv.At(r, "n_pairs"));
      const int imp = std::stoi(csv.At(r, "n_improved"));
      const double frac = n > 0 ? static_cast<double>(imp) / n : 0.0;
      rows.push_back({{"replay_id", std::stoi(csv.At(r, "replay_id"))},
                      {"n_pairs", n},
                      {"n_improved", imp},
                      {"improved_frac", frac},
                      {"baseline_mssl", std::stod(csv.At(r, "baseline_mssl"))},
                      {"model_mssl", std::stod(csv.At(r, "model_mssl"))}});
      table.push_back({csv.At(r, "replay_id"), std::to_string(n),
                       std::to_string(imp), Fmt(frac),
                       Fmt(std::stod(csv.At(r, "baseline_mssl"))),
                       Fmt(std::stod(csv.At(r, "model_mssl")))});
    }
    report["simulator_fidelity"] = rows;
    text << "\nsimulator holdout fidelity\n" << AlignedTable(table);
  }

  // --- detection ----------------------------------------------------------
  {
    const CsvTable csv = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kDetectEval)) / "metrics.csv").string());
    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::vector<std::string>> table = {
        {"detector", "eer", "auc", "far_src", "far_tgt", "far_all", "frr"}};
    for (size_t r = 0; r < csv.rows.size(); ++r) {
      rows.push_back({{"detector", csv.At(r, "detector")},
                      {"eer", std::stod(csv.At(r, "eer"))},
                      {"auc", std::stod(csv.At(r, "auc"))},
                      {"far_source", std::stod(csv.At(r, "far_source"))},
                      {"far_target", std::stod(csv.At(r, "far_target"))},
                      {"far_overall", std::stod(csv.At(r, "far_overall"))},
                      {"frr", std::stod(csv.At(r, "frr"))},
                      {"threshold", std::stod(csv.At(r, "threshold"))}});
      table.push_back({csv.At(r, "detector"), Fmt(std::stod(csv.At(r, "eer"))),
                       Fmt(std::stod(csv.At(r, "auc"))),
                       Fmt(std::stod(csv.At(r, "far_source"))),
                       Fmt(std::stod(csv.At(r, "far_target"))),
                       Fmt(std::stod(csv.At(r, "far_overall"))),
                       Fmt(std::stod(csv.At(r, "frr")))});
    }
    report["detection"] = rows;
    text << "\ndetection on the evaluation split\n" << AlignedTable(table);
  }

  WriteJsonFile((fs::path(ctx.dir) / "report.json").string(), report);
  WriteTextFile((fs::path(ctx.dir) / "report.txt").string(), text.str());
  return {"report.json", "report.txt"};
}

std::vector<std::string> RunPlot(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  std::vector<std::string> outputs;
  for (const auto& run : DetectorPlotNames()) {
    const CsvTable csv = ReadCsv((fs::path(StageDir(cfg, Stage::kDetectEval)) /
                                  ("scores_" + run + ".csv"))
                                     .string());
    std::vector<double> scores, bona, adv;
    std::vector<int> labels;
    for (size_t r = 0; r < csv.rows.size(); ++r) {
      const double s = std::stod(csv.At(r, "score"));
      const bool is_adv = csv.At(r, "set") == "adv";
      scores.push_back(s);
      labels.push_back(is_adv ? 1 : 0);
      (is_adv ? adv : bona).push_back(s);
    }
    const std::vector<DetPoint> pts = DetSweep(scores, labels);
    const std::string det_file = "det_" + run + ".svg";
    const std::string hist_file = "hist_" + run + ".svg";
    WriteDetCurveSvg((fs::path(ctx.dir) / det_file).string(), pts,
                     "DET: " + run);
    WriteScoreHistogramSvg((fs::path(ctx.dir) / hist_file).string(), bona, adv,
                           24, "score histogram: " + run);
    outputs.push_back(det_file);
    outputs.push_back(hist_file);
  }
  return outputs;
}

}  // namespace pipeline_detail
}  // namespace asvlab
