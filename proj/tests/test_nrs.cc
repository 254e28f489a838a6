// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"
#include "asvlab/nrs/mssl.h"
#include "asvlab/nrs/nrs.h"
#include "asvlab/nrs/train.h"

using namespace asvlab;

namespace {

Waveform NoiseWave(int n, uint64_t seed, float amp = 0.25f) {
  Waveform w;
  w.samples.resize(static_cast<size_t>(n));
  Rng rng(seed);
  for (auto& v : w.samples) v = amp * static_cast<float>(rng.Uniform(-1.0, 1.0));
  return w;
}

bool SameBits(const Waveform& a, const Waveform& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i] != b.samples[i]) return false;
  }
  return true;
}

// Brute-force double-precision reference for one resolution: frames at
// t*hop, periodic Hann over win samples, direct DFT with tail zero-padding.
double DirectMssl(const Waveform& pred, const Waveform& target, int fft, int hop,
                  int win, double floor_v) {
  const int n = static_cast<int>(pred.size());
  const int frames = (n - win) / hop + 1;
  const int bins = fft / 2 + 1;
  std::vector<double> w(static_cast<size_t>(win));
  for (int m = 0; m < win; ++m) {
    w[static_cast<size_t>(m)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * m / win);
  }
  auto mags = [&](const Waveform& s) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(frames * bins));
    for (int t = 0; t < frames; ++t) {
      for (int k = 0; k < bins; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (int m = 0; m < win; ++m) {
          const double v =
              double(s.samples[static_cast<size_t>(t * hop + m)]) *
              w[static_cast<size_t>(m)];
          const double ph = -2.0 * M_PI * k * m / fft;
          acc += v * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        out.push_back(std::abs(acc));
      }
    }
    return out;
  };
  const std::vector<double> a = mags(pred);
  const std::vector<double> b = mags(target);
  double fro_d = 0.0, fro_y = 0.0, l_mag = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    fro_d += (a[i] - b[i]) * (a[i] - b[i]);
    fro_y += b[i] * b[i];
    l_mag += std::abs(std::log(std::max(a[i], floor_v)) -
                      std::log(std::max(b[i], floor_v)));
  }
  const double l_sc = std::sqrt(fro_d) / std::max(std::sqrt(fro_y), floor_v);
  return l_sc + l_mag / static_cast<double>(a.size());
}

MsslConfig SmallMssl() {
  MsslConfig cfg;
  cfg.fft_sizes = {64, 128};
  cfg.hops = {16, 32};
  cfg.win_lengths = {64, 128};
  return cfg;
}

NrsConfig TinyNrs() {
  NrsConfig cfg;
  cfg.channels = {4, 6};
  cfg.replay_embed_dim = 4;
  cfg.n_replay_ids = 3;
  return cfg;
}

class LinearScorer : public Scorer {
 public:
  LinearScorer(std::vector<float> w, double tau, std::string id = "lin")
      : w_(std::move(w)), tau_(tau), id_(std::move(id)) {}
  const std::string& id() const override { return id_; }
  double tau() const override { return tau_; }
  double ScoreWithGrad(const Waveform& x, std::vector<float>* gx) const override {
    double acc = 0.0;
    for (size_t i = 0; i < w_.size(); ++i) acc += double(w_[i]) * double(x.samples[i]);
    if (gx != nullptr) *gx = w_;
    return acc;
  }

 private:
  std::vector<float> w_;
  double tau_;
  std::string id_;
};

std::filesystem::path TempDir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("asvlab_nrs_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("spectral loss config carries the stock resolutions and validates") {
  MsslConfig cfg;
  CHECK(cfg.fft_sizes == std::vector<int>{128, 256, 512, 1024, 2048});
  CHECK(cfg.hops == std::vector<int>{32, 64, 128, 256, 512});
  CHECK(cfg.win_lengths == std::vector<int>{128, 256, 512, 1024, 2048});
  CHECK(cfg.mag_floor == doctest::Approx(1e-7f));
  CHECK_NOTHROW(ValidateMsslConfig(cfg));

  MsslConfig bad = cfg;
  bad.hops.pop_back();
  CHECK_THROWS_AS(ValidateMsslConfig(bad), Error);
  bad = cfg;
  bad.hops[0] = 200;  // hop above the window
  CHECK_THROWS_AS(ValidateMsslConfig(bad), Error);
  bad = cfg;
  bad.win_lengths[0] = 300;  // window above the fft size
  CHECK_THROWS_AS(ValidateMsslConfig(bad), Error);
  bad = cfg;
  bad.fft_sizes[0] = 100;  // not a power of two
  CHECK_THROWS_AS(ValidateMsslConfig(bad), Error);
  bad = cfg;
  bad.mag_floor = 0.0f;
  CHECK_THROWS_AS(ValidateMsslConfig(bad), Error);
}

TEST_CASE("spectral loss of a signal against itself is zero") {
  const Waveform x = NoiseWave(4096, 7101);
  CHECK(Mssl(x, x) <= 1e-9);
  const Waveform y = NoiseWave(4096, 7102);
  CHECK(Mssl(x, y) > 0.0);
}

TEST_CASE("spectral loss matches a direct-DFT oracle") {
  MsslConfig cfg;
  cfg.fft_sizes = {64};
  cfg.hops = {16};
  cfg.win_lengths = {64};
  const Waveform pred = NoiseWave(256, 7201);
  const Waveform target = NoiseWave(256, 7202);
  const double lib = Mssl(pred, target, cfg);
  const double oracle =
      DirectMssl(pred, target, 64, 16, 64, double(cfg.mag_floor));
  CHECK(lib == doctest::Approx(oracle).epsilon(5e-4));

  // Two resolutions average the per-resolution losses.
  MsslConfig two = SmallMssl();
  const Waveform p2 = NoiseWave(400, 7203);
  const Waveform t2 = NoiseWave(400, 7204);
  const double o2 =
      0.5 * (DirectMssl(p2, t2, 64, 16, 64, double(two.mag_floor)) +
             DirectMssl(p2, t2, 128, 32, 128, double(two.mag_floor)));
  CHECK(Mssl(p2, t2, two) == doctest::Approx(o2).epsilon(5e-4));
}

TEST_CASE("spectral loss of a halved signal lands on the closed-form value") {
  // |X| = 0.5 |Y| at every bin: the convergence term is exactly 0.5 and the
  // log-magnitude term is log 2 wherever the bins clear the floor.
  MsslConfig cfg;
  cfg.fft_sizes = {256};
  cfg.hops = {64};
  cfg.win_lengths = {256};
  const Waveform target = NoiseWave(2048, 7301, 0.5f);
  Waveform pred = target;
  for (auto& v : pred.samples) v *= 0.5f;
  const double expected = 0.5 + std::log(2.0);
  CHECK(Mssl(pred, target, cfg) == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("spectral loss gradient matches finite differences") {
  const MsslConfig cfg = SmallMssl();
  const Waveform target = NoiseWave(320, 7401);
  Waveform pred = NoiseWave(320, 7402);
  std::vector<float> g;
  const double base = MsslWithGrad(pred, target, cfg, &g);
  REQUIRE(g.size() == pred.size());
  CHECK(base > 0.0);

  Rng rng(7403);
  const float h = 1e-3f;
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<float> dir(pred.size());
    for (auto& v : dir) v = static_cast<float>(rng.Uniform(-1.0, 1.0));
    double analytic = 0.0;
    for (size_t i = 0; i < dir.size(); ++i) analytic += double(g[i]) * double(dir[i]);
    Waveform plus = pred, minus = pred;
    for (size_t i = 0; i < dir.size(); ++i) {
      plus.samples[i] += h * dir[i];
      minus.samples[i] -= h * dir[i];
    }
    const double fd =
        (Mssl(plus, target, cfg) - Mssl(minus, target, cfg)) / (2.0 * double(h));
    CHECK(std::abs(fd - analytic) <=
          5e-2 * std::max({std::abs(fd), std::abs(analytic), 1e-4}));
  }
}

TEST_CASE("spectral loss rejects mismatched and too-short signals") {
  const Waveform a = NoiseWave(4096, 7501);
  const Waveform b = NoiseWave(4000, 7502);
  CHECK_THROWS_AS(Mssl(a, b), Error);
  const Waveform tiny = NoiseWave(1000, 7503);  // below the 2048 window
  try {
    Mssl(tiny, tiny);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLength);
  }
}

TEST_CASE("soft clamp is the identity inside the knee and saturates outside") {
  const float knee = 0.85f;
  CHECK(SoftClamp(0.3f, knee) == 0.3f);
  CHECK(SoftClamp(-0.84f, knee) == -0.84f);
  CHECK(SoftClamp(0.0f, knee) == 0.0f);
  CHECK(SoftClamp(1.5f, knee) < 1.0f);  // strict for moderate overshoot
  CHECK(SoftClamp(3.0f, knee) <= 1.0f);  // float tanh saturates far out
  CHECK(SoftClamp(3.0f, knee) > knee);
  CHECK(SoftClamp(-50.0f, knee) >= -1.0f);
  CHECK(SoftClamp(-0.9f, knee) == -SoftClamp(0.9f, knee));
  // Continuity and a C1 join at the knee.
  CHECK(SoftClamp(knee + 1e-6f, knee) == doctest::Approx(knee).epsilon(1e-5));
  CHECK(SoftClampGrad(0.5f, knee) == 1.0f);
  CHECK(SoftClampGrad(knee + 1e-6f, knee) == doctest::Approx(1.0f).epsilon(1e-4));
  for (float v : {0.9f, 1.2f, -0.95f}) {
    const float h = 1e-3f;
    const float fd = (SoftClamp(v + h, knee) - SoftClamp(v - h, knee)) / (2 * h);
    CHECK(SoftClampGrad(v, knee) == doctest::Approx(fd).epsilon(1e-3));
  }
}

TEST_CASE("replay net keeps length and amplitude bounds on awkward sizes") {
  const NrsModel net(TinyNrs(), 91);
  for (int n : {33, 128, 333, 1001}) {
    const Waveform x = NoiseWave(n, 8000 + n);
    const Waveform y = net.Forward(x, 1);
    CHECK(static_cast<int>(y.size()) == n);
    CHECK(y.sample_rate == x.sample_rate);
    for (float v : y.samples) {
      CHECK(std::isfinite(v));
      CHECK(std::abs(v) <= 1.0f);
    }
  }
  // Same input, same id: bit-identical. Different id: different output.
  const Waveform x = NoiseWave(300, 8100);
  CHECK(SameBits(net.Forward(x, 1), net.Forward(x, 1)));
  CHECK_FALSE(SameBits(net.Forward(x, 1), net.Forward(x, 2)));
  // Fresh weights land close to the identity map.
  double max_dev = 0.0;
  const Waveform y = net.Forward(x, 1);
  for (size_t i = 0; i < x.samples.size(); ++i) {
    max_dev = std::max(max_dev, double(std::abs(y.samples[i] - x.samples[i])));
  }
  CHECK(max_dev < 0.5);
}

TEST_CASE("replay net id 0 is a hard passthrough, bad ids are lookup errors") {
  NrsModel net(TinyNrs(), 92);
  const Waveform x = NoiseWave(257, 8200);
  CHECK(SameBits(net.Forward(x, 0), x));
  CHECK(SameBits(net.Simulate(x, 0), x));  // no coverage required for id 0

  CHECK_THROWS_AS(net.Forward(x, 3), Error);   // outside the embedding table
  CHECK_THROWS_AS(net.Forward(x, -1), Error);
  try {
    net.Simulate(x, 1);  // in range but not covered by training
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kLookup);
  }
  net.set_covered_ids({1});
  CHECK_NOTHROW(net.Simulate(x, 1));
  CHECK_THROWS_AS(net.Simulate(x, 2), Error);
}

TEST_CASE("replay net constructor rejects broken configurations") {
  NrsConfig cfg = TinyNrs();
  cfg.channels.clear();
  CHECK_THROWS_AS(NrsModel(cfg, 1), Error);
  cfg = TinyNrs();
  cfg.n_replay_ids = 1;
  CHECK_THROWS_AS(NrsModel(cfg, 1), Error);
  cfg = TinyNrs();
  cfg.clamp_knee = 1.0f;
  CHECK_THROWS_AS(NrsModel(cfg, 1), Error);
}

TEST_CASE("replay net checkpoint round trip preserves behavior") {
  const auto dir = TempDir("ckpt");
  NrsModel net(TinyNrs(), 93);
  net.set_covered_ids({1, 2});
  nlohmann::json meta;
  meta["note"] = "round trip";
  net.set_training_meta(meta);
  const std::string path = (dir / "nrs.ckpt").string();
  net.Save(path);

  const NrsModel back = NrsModel::Load(path);
  CHECK(back.config().channels == net.config().channels);
  CHECK(back.config().n_replay_ids == net.config().n_replay_ids);
  CHECK(back.covered_ids() == std::vector<int>{1, 2});
  CHECK(back.training_meta().at("note") == "round trip");
  const Waveform x = NoiseWave(500, 8300);
  CHECK(SameBits(back.Forward(x, 1), net.Forward(x, 1)));
  CHECK(SameBits(back.Simulate(x, 2), net.Simulate(x, 2)));
  std::filesystem::remove_all(dir);
}

TEST_CASE("replay net parameter gradients match finite differences") {
  NrsConfig arch;
  arch.channels = {3, 4};
  arch.replay_embed_dim = 3;
  arch.n_replay_ids = 3;
  NrsModel net(arch, 94);

  MsslConfig loss;
  loss.fft_sizes = {32};
  loss.hops = {8};
  loss.win_lengths = {32};
  const Waveform x = NoiseWave(96, 8401);
  const Waveform target = NoiseWave(96, 8402);
  const int id = 1;

  auto loss_at = [&]() { return Mssl(net.Forward(x, id), target, loss); };

  auto refs = net.Params();
  for (auto& r : refs) r.grad->setZero();
  NrsModel::Cache cache;
  const Waveform pred = net.Forward(x, id, &cache);
  std::vector<float> gpred;
  MsslWithGrad(pred, target, loss, &gpred);
  net.Backward(cache, gpred);

  struct Probe {
    const char* name;
    Eigen::Index row;
    Eigen::Index col;
  };
  const std::vector<Probe> probes = {
      {"embed", 1, 0},  {"down0.w", 0, 3}, {"down1.w", 1, 2}, {"down1.b", 0, 0},
      {"up0.w", 0, 1},  {"up1.w", 2, 0},   {"fuse0.w", 0, 2}, {"fuse1.w", 1, 1},
      {"film.w", 0, 1}, {"film.b", 2, 0},  {"head.w", 0, 0},  {"head.b", 0, 0}};
  const float h = 2e-3f;
  int checked = 0;
  for (const auto& p : probes) {
    nn::ParamRef* ref = nullptr;
    for (auto& r : refs) {
      if (r.name == p.name) ref = &r;
    }
    REQUIRE(ref != nullptr);
    const double analytic = double((*ref->grad)(p.row, p.col));
    const float saved = (*ref->value)(p.row, p.col);
    (*ref->value)(p.row, p.col) = saved + h;
    const double up = loss_at();
    (*ref->value)(p.row, p.col) = saved - h;
    const double down = loss_at();
    (*ref->value)(p.row, p.col) = saved;
    const double fd = (up - down) / (2.0 * double(h));
    if (std::abs(fd) < 1e-5 && std::abs(analytic) < 1e-5) continue;
    CHECK(std::abs(fd - analytic) <=
          8e-2 * std::max({std::abs(fd), std::abs(analytic), 1e-4}));
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("training fits per-id gains and beats the identity baseline") {
  const auto dir = TempDir("train");
  ParallelCorpus pc;
  const float gains[] = {0.62f, 0.85f};
  for (int id = 1; id <= 2; ++id) {
    for (int u = 0; u < 8; ++u) {
      const Waveform clean = NoiseWave(600, 9000 + id * 100 + u, 0.4f);
      Waveform replayed = clean;
      for (auto& v : replayed.samples) v *= gains[id - 1];
      ParallelUtterance item;
      item.utt_id = "utt" + std::to_string(id) + "_" + std::to_string(u);
      item.replay_id = id;
      item.clean_path = (dir / (item.utt_id + "_c.wav")).string();
      item.replayed_path = (dir / (item.utt_id + "_r.wav")).string();
      SaveWaveform(clean, item.clean_path, WavEncoding::kFloat32);
      SaveWaveform(replayed, item.replayed_path, WavEncoding::kFloat32);
      pc.items.push_back(item);
    }
  }

  NrsTrainConfig cfg;
  cfg.arch.channels = {6, 8};
  cfg.arch.replay_embed_dim = 4;
  cfg.arch.n_replay_ids = 3;
  cfg.loss = SmallMssl();
  cfg.epochs = 40;
  cfg.batch_pairs = 6;
  cfg.crop_samples = 256;
  cfg.lr = 2e-3f;
  cfg.holdout_frac = 0.25f;

  const NrsTrainResult res = TrainNrs(pc, cfg, 4242);
  CHECK(res.epochs_run == cfg.epochs);
  CHECK(res.model.covered_ids() == std::vector<int>{1, 2});
  REQUIRE(res.holdout.size() == 2);
  for (const auto& stat : res.holdout) {
    INFO("replay id ", stat.replay_id, " baseline ", stat.baseline_mssl,
         " model ", stat.model_mssl);
    CHECK(stat.n_pairs >= 1);
    CHECK(stat.baseline_mssl > 0.1);  // the channel is far from identity
    CHECK(stat.model_mssl < stat.baseline_mssl);
    CHECK(stat.n_improved >= 1);
    CHECK(stat.n_improved <= stat.n_pairs);
  }

  // Same seed, same data: training is bit-reproducible.
  const NrsTrainResult again = TrainNrs(pc, cfg, 4242);
  CHECK(again.final_loss == res.final_loss);
  const Waveform probe = NoiseWave(400, 9999);
  CHECK(SameBits(again.model.Forward(probe, 1), res.model.Forward(probe, 1)));

  // Identity pairs and out-of-table ids are configuration errors.
  ParallelCorpus bad = pc;
  bad.items[0].replay_id = 0;
  CHECK_THROWS_AS(TrainNrs(bad, cfg, 1), Error);
  bad.items[0].replay_id = 7;
  CHECK_THROWS_AS(TrainNrs(bad, cfg, 1), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("replay-aware attack with id 0 reproduces the plain attack bit for bit") {
  const NrsModel net(TinyNrs(), 95);
  Rng rng(9551);
  std::vector<float> w(240), x0(240);
  for (auto& v : w) v = static_cast<float>(rng.Uniform(-1.0, 1.0));
  for (auto& v : x0) v = 0.5f * static_cast<float>(rng.Uniform(-1.0, 1.0));
  Waveform x;
  x.samples = x0;
  const LinearScorer scorer(w, 1e9, "lin");  // never passes: full step budget

  PgdConfig pgd;
  pgd.alpha = 0.002f;
  pgd.eps = 0.02f;
  pgd.max_steps = 7;
  NrsAttackConfig cfg;
  cfg.pgd = pgd;

  const AdversarialExample plain = PgdAttack(scorer, x, pgd);
  const AdversarialExample wrapped = NrsPgdAttack(scorer, x, net, 0, cfg);
  CHECK(SameBits(plain.adv, wrapped.adv));
  CHECK(plain.steps_used == wrapped.steps_used);
  CHECK(plain.success == wrapped.success);
  CHECK(plain.final_scores == wrapped.final_scores);
  CHECK(plain.clean_scores == wrapped.clean_scores);
  CHECK(plain.replay_id == -1);
  CHECK(wrapped.replay_id == 0);
  CHECK(wrapped.method == AttackMethod::kNrsPgd);
}

TEST_CASE("replay-aware attack references its own start unless told otherwise") {
  NrsModel net(TinyNrs(), 96);
  net.set_covered_ids({1});
  const Waveform x = NoiseWave(320, 9601, 0.4f);
  std::vector<float> w(320, 0.1f);
  const LinearScorer scorer(w, 1e9, "lin");

  NrsAttackConfig cfg;
  cfg.pgd.alpha = 0.004f;
  cfg.pgd.eps = 0.01f;
  cfg.pgd.max_steps = 5;

  const Waveform start = net.Simulate(x, 1);
  const AdversarialExample ex = NrsPgdAttack(scorer, x, net, 1, cfg);
  CHECK(SameBits(ex.ref, start));
  CHECK(ex.delta_inf_norm <= cfg.pgd.eps + 1e-6f);
  float dev = 0.0f;
  for (size_t i = 0; i < ex.adv.samples.size(); ++i) {
    dev = std::max(dev, std::abs(ex.adv.samples[i] - start.samples[i]));
  }
  CHECK(dev <= cfg.pgd.eps + 1e-6f);

  cfg.project_to_clean = true;
  const AdversarialExample ex2 = NrsPgdAttack(scorer, x, net, 1, cfg);
  CHECK(SameBits(ex2.ref, x));

  CHECK_THROWS_AS(NrsPgdAttack(scorer, x, net, 2, cfg), Error);  // uncovered
}
