// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/harness/csv.h"
#include "asvlab/harness/metrics.h"
#include "asvlab/harness/pipeline.h"
#include "asvlab/harness/plots.h"

using namespace asvlab;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("asvlab_harness_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string Slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

// A complete desk-scale recipe shrunk to smoke-test size.
PipelineConfig MicroConfig(const std::string& out_root) {
  PipelineConfig cfg = PipelineConfig::Default();
  cfg.out_root = out_root;
  cfg.seed = 93;

  cfg.corpus.n_speakers = 8;
  cfg.corpus.utts_per_speaker = 3;
  cfg.corpus.duration_s = 0.55;
  cfg.corpus.min_duration_s = 0.5;
  cfg.corpus.max_duration_s = 0.7;
  cfg.corpus.train_frac = 0.5;
  cfg.corpus.dev_frac = 0.25;

  cfg.dev_rounds = 6;
  cfg.attack_rounds = 6;

  auto arch = [](Frontend fe, std::vector<int> ch, int dim) {
    EmbeddingModel::Arch a;
    a.frontend = fe;
    a.channels = std::move(ch);
    a.embedding_dim = dim;
    return a;
  };
  cfg.models = {{"s1", arch(Frontend::kSpectral, {8, 8, 12}, 16)},
                {"s2", arch(Frontend::kRaw, {8, 10, 12, 14}, 16)},
                {"v", arch(Frontend::kSpectral, {10, 10, 12}, 16)},
                {"f", arch(Frontend::kSpectral, {8, 8, 12}, 16)}};
  cfg.surrogates = {"s1", "s2"};
  cfg.victim = "v";
  cfg.featurizer = "f";

  cfg.asv.max_epochs = 12;
  cfg.asv.crop_s = 0.5;
  cfg.asv.target_dev_eer = 0.12;
  cfg.asv.eval_every = 4;
  cfg.asv.dev_rounds = 6;

  cfg.pgd.eps = 0.015f;
  cfg.pgd.alpha = 0.002f;
  cfg.pgd.max_steps = 14;

  cfg.ota_models = {"s1"};
  cfg.ota_trials = 3;

  cfg.nrs.arch.channels = {6, 8};
  cfg.nrs.arch.replay_embed_dim = 4;
  cfg.nrs.loss.fft_sizes = {128, 256};
  cfg.nrs.loss.hops = {32, 64};
  cfg.nrs.loss.win_lengths = {128, 256};
  cfg.nrs.epochs = 2;
  cfg.nrs.batch_pairs = 4;
  cfg.nrs.crop_samples = 2048;
  cfg.nrs.holdout_frac = 0.34f;
  cfg.nrs_utts = 6;

  cfg.detect.hidden_dim = 16;
  cfg.detect.out_dim = 8;
  cfg.detect.nu = 0.2f;
  cfg.detect.epochs = 8;
  return cfg;
}

ErrorKind KindOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kConfig;
}

}  // namespace

TEST_CASE("csv: round trip, numbers, and malformed input") {
  TempDir tmp("csv");
  CsvTable t;
  t.header = {"name", "x", "flag"};
  t.rows = {{"alpha", CsvNum(0.1), "1"},
            {"beta", CsvNum(-3.25e-9), "0"},
            {"gamma", CsvNum(12345.678901234567), "1"}};
  const std::string path = (tmp.path / "t.csv").string();
  WriteCsv(path, t);
  const CsvTable r = ReadCsv(path);
  REQUIRE(r.header == t.header);
  REQUIRE(r.rows == t.rows);
  CHECK(r.Col("flag") == 2);
  CHECK(r.At(1, "name") == "beta");
  // CsvNum is round-trip exact.
  CHECK(std::stod(CsvNum(0.1)) == 0.1);
  CHECK(std::stod(CsvNum(-3.25e-9)) == -3.25e-9);
  CHECK(std::stod(CsvNum(12345.678901234567)) == 12345.678901234567);

  CHECK(KindOf([&] { (void)r.Col("missing"); }) == ErrorKind::kArgument);
  CHECK(KindOf([&] { (void)r.At(99, "name"); }) == ErrorKind::kArgument);

  CsvTable bad = t;
  bad.rows.push_back({"short"});
  CHECK(KindOf([&] { WriteCsv(path, bad); }) == ErrorKind::kArgument);
  CsvTable comma = t;
  comma.rows[0][0] = "a,b";
  CHECK(KindOf([&] { WriteCsv(path, comma); }) == ErrorKind::kArgument);

  const std::string ragged = (tmp.path / "ragged.csv").string();
  {
    std::ofstream f(ragged);
    f << "a,b\n1,2\n3\n";
  }
  CHECK(KindOf([&] { (void)ReadCsv(ragged); }) == ErrorKind::kFormat);
  CHECK(KindOf([&] { (void)ReadCsv((tmp.path / "nope.csv").string()); }) ==
        ErrorKind::kIo);
}

TEST_CASE("det sweep: endpoints, monotonicity, and a recount oracle") {
  Rng rng(404);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 120; ++i) {
    // Coarse quantization forces plenty of tied scores.
    const double s = std::round(rng.Gaussian() * 4.0) / 4.0;
    scores.push_back(i % 3 == 0 ? s + 0.75 : s);
    labels.push_back(i % 3 == 0 ? 1 : 0);
  }
  const std::vector<DetPoint> pts = DetSweep(scores, labels);

  CHECK(pts.front().far == 1.0);
  CHECK(pts.front().frr == 0.0);
  CHECK(pts.back().far == 0.0);
  CHECK(pts.back().frr == 1.0);

  for (size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].threshold > pts[i - 1].threshold);
    CHECK(pts[i].far <= pts[i - 1].far);
    CHECK(pts[i].frr >= pts[i - 1].frr);
  }

  // Independent recount at every swept threshold.
  for (const auto& p : pts) {
    int fa = 0, n0 = 0, fr = 0, n1 = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] == 0) {
        ++n0;
        if (scores[i] >= p.threshold) ++fa;
      } else {
        ++n1;
        if (scores[i] < p.threshold) ++fr;
      }
    }
    CHECK(p.far == doctest::Approx(double(fa) / n0).epsilon(1e-12));
    CHECK(p.frr == doctest::Approx(double(fr) / n1).epsilon(1e-12));
  }

  CHECK(KindOf([] { (void)DetSweep({}, {}); }) == ErrorKind::kArgument);
  CHECK(KindOf([] { (void)DetSweep({1.0, 2.0}, {1, 1}); }) ==
        ErrorKind::kCalibration);
  CHECK(KindOf([] { (void)DetSweep({1.0, 2.0}, {0, 2}); }) ==
        ErrorKind::kArgument);
  CHECK(KindOf([] { (void)DetSweep({1.0}, {0, 1}); }) == ErrorKind::kShape);
}

TEST_CASE("plots: deterministic SVG output and argument guards") {
  TempDir tmp("plots");
  const std::vector<DetPoint> pts = DetSweep({0.1, 0.2, 0.9, 1.4}, {0, 0, 1, 1});
  const std::string det = (tmp.path / "det.svg").string();
  WriteDetCurveSvg(det, pts, "DET: smoke");
  const std::string first = Slurp(det);
  CHECK(first.find("<svg") != std::string::npos);
  CHECK(first.find("polyline") != std::string::npos);
  WriteDetCurveSvg(det, pts, "DET: smoke");
  CHECK(Slurp(det) == first);

  const std::string hist = (tmp.path / "hist.svg").string();
  WriteScoreHistogramSvg(hist, {0.1, 0.15, 0.2}, {0.9, 1.1}, 8, "scores");
  const std::string hfirst = Slurp(hist);
  CHECK(hfirst.find("rect") != std::string::npos);
  WriteScoreHistogramSvg(hist, {0.1, 0.15, 0.2}, {0.9, 1.1}, 8, "scores");
  CHECK(Slurp(hist) == hfirst);

  CHECK(KindOf([&] { WriteDetCurveSvg(det, {}, "x"); }) == ErrorKind::kArgument);
  CHECK(KindOf([&] { WriteScoreHistogramSvg(hist, {}, {1.0}, 8, "x"); }) ==
        ErrorKind::kArgument);
  CHECK(KindOf([&] { WriteScoreHistogramSvg(hist, {1.0}, {1.0}, 0, "x"); }) ==
        ErrorKind::kArgument);
}

TEST_CASE("pipeline config: json round trip and partial overrides") {
  const PipelineConfig def = PipelineConfig::Default();
  const PipelineConfig back = PipelineConfig::FromJson(def.ToJson());
  CHECK(back.ToJson().dump() == def.ToJson().dump());

  nlohmann::json patch = {{"pgd", {{"eps", 0.02}}},
                          {"corpus", {{"n_speakers", 5}}},
                          {"victim", "spec_s3"}};
  const PipelineConfig over = PipelineConfig::FromJson(patch);
  CHECK(over.pgd.eps == doctest::Approx(0.02f));
  CHECK(over.pgd.alpha == def.pgd.alpha);  // untouched knobs keep defaults
  CHECK(over.corpus.n_speakers == 5);
  CHECK(over.corpus.sample_rate == def.corpus.sample_rate);
  CHECK(over.victim == "spec_s3");
  CHECK(over.surrogates == def.surrogates);

  for (Stage s : AllStages()) {
    CHECK(ParseStage(StageName(s)) == s);
  }
  CHECK(KindOf([] { (void)ParseStage("bogus"); }) == ErrorKind::kArgument);
}

TEST_CASE("pipeline config: role validation") {
  TempDir tmp("validate");
  auto expect_config = [&](void (*mutate)(PipelineConfig*)) {
    PipelineConfig cfg = MicroConfig((tmp.path / "x").string());
    mutate(&cfg);
    CHECK(KindOf([&] { (void)RunStage(cfg, Stage::kCorpusGen); }) ==
          ErrorKind::kConfig);
  };
  expect_config([](PipelineConfig* c) { c->surrogates = {"s1"}; });
  expect_config([](PipelineConfig* c) { c->victim = "s1"; });
  expect_config([](PipelineConfig* c) { c->featurizer = "v"; });
  expect_config([](PipelineConfig* c) { c->victim = "ghost"; });
  expect_config([](PipelineConfig* c) { c->ota_models = {"v"}; });
  expect_config([](PipelineConfig* c) { c->detect_adv = "v"; });
  expect_config([](PipelineConfig* c) { c->models[1].id = "s1"; });
  expect_config([](PipelineConfig* c) { c->nrs_utts = 2; });
  expect_config([](PipelineConfig* c) { c->target_aug = DeviceProfile{}; });
}

TEST_CASE("pipeline: dependency errors name the missing stage") {
  TempDir tmp("deps");
  const PipelineConfig cfg = MicroConfig((tmp.path / "root").string());
  try {
    (void)RunStage(cfg, Stage::kAttack);
    FAIL("expected a dependency error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDependency);
    CHECK(std::string(e.what()).find("corpus-gen") != std::string::npos);
  }
}

TEST_CASE("pipeline: micro end-to-end run, resume, integrity, determinism") {
  TempDir tmp("micro");
  const PipelineConfig cfg = MicroConfig((tmp.path / "a").string());

  // Full run: every stage executes once.
  const std::vector<StageResult> first = RunPipeline(cfg);
  REQUIRE(first.size() == AllStages().size());
  for (const auto& r : first) {
    CHECK_FALSE(r.skipped);
    CHECK(fs::exists(fs::path(r.dir) / "config.resolved.json"));
    CHECK(fs::exists(fs::path(r.dir) / "stage.stamp.json"));
  }

  const std::string report_path =
      (fs::path(StageDir(cfg, Stage::kReport)) / "report.json").string();
  const std::string report_bytes = Slurp(report_path);
  const nlohmann::json report = nlohmann::json::parse(report_bytes);
  CHECK(report.at("format_version") == 1);
  REQUIRE(report.contains("attack"));
  REQUIRE(report.contains("replay"));
  REQUIRE(report.contains("simulator_fidelity"));
  REQUIRE(report.contains("detection"));

  // Rerun with the same config: every stage is a stamped no-op and the
  // report bytes survive untouched.
  for (const auto& r : RunPipeline(cfg)) CHECK(r.skipped);
  CHECK(Slurp(report_path) == report_bytes);

  // Report numbers recompute from the persisted per-trial CSV files.
  {
    const CsvTable atk = ReadCsv(
        (fs::path(StageDir(cfg, Stage::kAttack)) / "attack_trials.csv").string());
    for (const auto& run : report.at("attack").at("runs")) {
      const std::string key = run.at("surrogates").get<std::string>();
      int elig = 0, succ = 0;
      for (size_t r = 0; r < atk.rows.size(); ++r) {
        if (atk.At(r, "surrogates") != key) continue;
        if (atk.At(r, "eligible") == "1") ++elig;
        if (atk.At(r, "success") == "1") ++succ;
      }
      CHECK(run.at("craft").at("eligible").get<int>() == elig);
      CHECK(run.at("craft").at("successes").get<int>() == succ);
      const double rate = elig ? double(succ) / elig : 0.0;
      CHECK(run.at("craft").at("success_rate").get<double>() ==
            doctest::Approx(rate).epsilon(1e-12));
    }

    // Detection metrics re-derive from the per-sample score files.
    const fs::path de = StageDir(cfg, Stage::kDetectEval);
    const CsvTable metrics = ReadCsv((de / "metrics.csv").string());
    for (size_t r = 0; r < metrics.rows.size(); ++r) {
      const CsvTable scores =
          ReadCsv((de / ("scores_" + metrics.At(r, "detector") + ".csv")).string());
      std::vector<double> xs;
      std::vector<int> ys;
      int fa = 0, n0 = 0;
      const double thr = std::stod(metrics.At(r, "threshold"));
      for (size_t i = 0; i < scores.rows.size(); ++i) {
        const double s = std::stod(scores.At(i, "score"));
        const int label = scores.At(i, "set") == "adv" ? 1 : 0;
        xs.push_back(s);
        ys.push_back(label);
        if (label == 0) {
          ++n0;
          if (s >= thr) ++fa;
        }
      }
      CHECK(std::stod(metrics.At(r, "eer")) ==
            doctest::Approx(ComputeEer(xs, ys).eer).epsilon(1e-12));
      CHECK(std::stod(metrics.At(r, "auc")) ==
            doctest::Approx(ComputeAuc(xs, ys)).epsilon(1e-12));
      CHECK(std::stod(metrics.At(r, "far_overall")) ==
            doctest::Approx(double(fa) / n0).epsilon(1e-12));
    }
  }

  // The plot stage emits one DET curve and one histogram per variant.
  {
    const fs::path plots = StageDir(cfg, Stage::kPlot);
    int dets = 0, hists = 0;
    for (const auto& entry : fs::directory_iterator(plots)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("det_", 0) == 0) ++dets;
      if (name.rfind("hist_", 0) == 0) ++hists;
    }
    CHECK(dets == 4);
    CHECK(hists == 4);
  }

  // Deleting one stage's artifacts rebuilds them byte-identically.
  {
    const std::string ota_csv =
        (fs::path(StageDir(cfg, Stage::kChannelApply)) / "ota_trials.csv").string();
    const std::string before = Slurp(ota_csv);
    fs::remove_all(StageDir(cfg, Stage::kChannelApply));
    CHECK_FALSE(StageFresh(cfg, Stage::kChannelApply));
    CHECK(StageFresh(cfg, Stage::kNrsData));  // stamps are per stage

    const StageResult redo = RunStage(cfg, Stage::kChannelApply);
    CHECK_FALSE(redo.skipped);
    CHECK(Slurp(ota_csv) == before);
    CHECK(RunStage(cfg, Stage::kNrsData).skipped);
  }

  // Config edits invalidate exactly the stages that consume them.
  {
    PipelineConfig bumped = cfg;
    bumped.pgd.max_steps += 1;
    CHECK(StageFresh(bumped, Stage::kCorpusGen));
    CHECK(StageFresh(bumped, Stage::kAsvTrain));
    CHECK_FALSE(StageFresh(bumped, Stage::kAttack));
    CHECK_FALSE(StageFresh(bumped, Stage::kDetectTrain));  // transitive
    try {
      (void)RunStage(bumped, Stage::kDetectTrain);
      FAIL("expected a dependency error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kDependency);
      CHECK(std::string(e.what()).find("'attack'") != std::string::npos);
    }
  }

  // Identical config and seed reproduce identical result files elsewhere.
  {
    PipelineConfig clone = cfg;
    clone.out_root = (tmp.path / "b").string();
    for (const auto& r : RunPipeline(clone)) CHECK_FALSE(r.skipped);
    CHECK(Slurp((fs::path(StageDir(clone, Stage::kReport)) / "report.json").string()) ==
          report_bytes);
    CHECK(Slurp((fs::path(StageDir(clone, Stage::kAttack)) / "attack_trials.csv").string()) ==
          Slurp((fs::path(StageDir(cfg, Stage::kAttack)) / "attack_trials.csv").string()));
    CHECK(Slurp((fs::path(StageDir(clone, Stage::kDetectEval)) / "metrics.csv").string()) ==
          Slurp((fs::path(StageDir(cfg, Stage::kDetectEval)) / "metrics.csv").string()));
    CHECK(Slurp((fs::path(StageDir(clone, Stage::kAttack)) / "ensemble/adv_000000.wav").string()) ==
          Slurp((fs::path(StageDir(cfg, Stage::kAttack)) / "ensemble/adv_000000.wav").string()));
  }
}
