#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rsvp/data_io.hpp"
#include "rsvp/errors.hpp"
#include "rsvp/preprocess.hpp"
#include "rsvp/rng.hpp"
#include "rsvp/synth.hpp"

using namespace rsvp;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.channels = 8;
  cfg.rate = 250;
  cfg.blocks = 2;
  cfg.images_per_block = 60;
  cfg.targets_per_block = 5;
  cfg.seed = seed;
  return cfg;
}

fs::path temp_dir() {
  const auto dir = fs::temp_directory_path() / "rsvp_test_io";
  fs::create_directories(dir);
  return dir;
}

/// Random recording with float32-representable samples, so the float payload
/// round-trips bit-exactly.
ContinuousRecording random_recording(Rng& rng) {
  ContinuousRecording rec;
  rec.rate = 250;
  const auto n_ch = static_cast<Eigen::Index>(rng.uniform_int(1, 5));
  const auto n_s = static_cast<Eigen::Index>(rng.uniform_int(4, 200));
  rec.data.resize(n_ch, n_s);
  for (Eigen::Index c = 0; c < n_ch; ++c) {
    rec.channels.push_back("ch" + std::to_string(c));
    for (Eigen::Index s = 0; s < n_s; ++s) {
      rec.data(c, s) = static_cast<double>(static_cast<float>(rng.normal(0, 40)));
    }
  }
  const auto n_ev = rng.uniform_int(0, 10);
  for (std::int64_t e = 0; e < n_ev; ++e) {
    rec.events.push_back({rng.uniform_int(0, n_s - 1),
                          rng.uniform() < 0.2 ? EventLabel::Target : EventLabel::Standard,
                          static_cast<std::int32_t>(rng.uniform_int(0, 3)),
                          static_cast<std::int32_t>(rng.uniform_int(0, 2))});
  }
  std::sort(rec.events.begin(), rec.events.end(),
            [](const Event& a, const Event& b) { return a.sample < b.sample; });
  return rec;
}

EpochSet random_epochs(Rng& rng) {
  EpochSet set;
  set.rate = 250;
  set.window_start = 0;
  set.window_end = 1;
  const auto n = rng.uniform_int(0, 12);
  const auto n_c = static_cast<Eigen::Index>(rng.uniform_int(1, 4));
  const auto n_t = static_cast<Eigen::Index>(rng.uniform_int(2, 30));
  for (Eigen::Index c = 0; c < n_c; ++c) set.channels.push_back("c" + std::to_string(c));
  for (std::int64_t i = 0; i < n; ++i) {
    Eigen::MatrixXd e(n_c, n_t);
    for (Eigen::Index c = 0; c < n_c; ++c) {
      for (Eigen::Index s = 0; s < n_t; ++s) e(c, s) = rng.normal();
    }
    set.epochs.push_back(e);
    set.labels.push_back(rng.uniform() < 0.5 ? EventLabel::Target : EventLabel::Standard);
    set.provenance.push_back({static_cast<std::int32_t>(rng.uniform_int(0, 8)),
                              static_cast<std::int32_t>(rng.uniform_int(0, 5))});
  }
  return set;
}

}  // namespace

TEST_CASE("generator: noiseless output recovers templates exactly") {
  SynthConfig cfg = small_config(3);
  cfg.noise.background_std_uv = 0.0;
  cfg.eog.amplitude_uv = 0.0;          // no EOG channels
  cfg.min_target_gap = 8;              // keep target epochs free of neighbors
  const auto [rec, truth] = synth_rsvp(cfg);

  const auto epochs = epoch(rec, 0.0, 1.0).epochs;
  const Eigen::MatrixXd avg = erp_average(epochs, EventLabel::Target);

  // Reconstruct the expected epoch from the resolved templates.
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(avg.rows(), avg.cols());
  for (const auto& t : truth.templates) {
    for (Eigen::Index s = 0; s < avg.cols(); ++s) {
      const double dt = static_cast<double>(s) / cfg.rate - t.latency_s;
      if (std::abs(dt) > 4.0 * t.width_s) continue;
      expected.col(s) +=
          t.amplitude_uv * std::exp(-0.5 * (dt / t.width_s) * (dt / t.width_s)) * t.topography;
    }
  }
  CHECK((avg - expected).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("generator: default ratio is 9 targets per 180 images per block") {
  SynthConfig cfg;
  cfg.seed = 9;
  cfg.blocks = 1;
  const auto [rec, truth] = synth_rsvp(cfg);
  std::size_t targets = 0, standards = 0;
  for (const auto& ev : rec.events) {
    (ev.label == EventLabel::Target ? targets : standards) += 1;
  }
  CHECK(targets == 9);
  CHECK(standards == 171);
  CHECK(truth.instances.size() == targets * truth.templates.size());
}

TEST_CASE("generator: determinism and seed sensitivity") {
  const auto a1 = synth_rsvp(small_config(42));
  const auto a2 = synth_rsvp(small_config(42));
  const auto b = synth_rsvp(small_config(43));
  CHECK(bit_equal(a1.first, a2.first));
  CHECK_FALSE(bit_equal(a1.first, b.first));
}

TEST_CASE("generator: linearity in template amplitude") {
  SynthConfig cfg = small_config(7);
  auto scaled = cfg;
  scaled.erp_templates = default_erp_templates(cfg.channels);
  cfg.erp_templates = default_erp_templates(cfg.channels);
  for (auto& t : scaled.erp_templates) t.amplitude_uv *= 2.0;

  const auto base = synth_rsvp(cfg);
  const auto twice = synth_rsvp(scaled);
  CHECK((twice.second.clean - 2.0 * base.second.clean).cwiseAbs().maxCoeff() < 1e-12);
  // Same noise stream: the residual (data - clean) is identical.
  CHECK(((twice.first.data - twice.second.clean) - (base.first.data - base.second.clean))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("generator: empirical SNR falls as background noise rises") {
  double previous = 1e300;
  for (const double noise : {2.0, 8.0, 32.0}) {
    SynthConfig cfg = small_config(11);
    cfg.noise.background_std_uv = noise;
    const auto [rec, truth] = synth_rsvp(cfg);
    const double signal = truth.clean.squaredNorm();
    const double residual = (rec.data - truth.clean).squaredNorm();
    const double snr = signal / residual;
    CHECK(snr < previous);
    previous = snr;
  }
}

TEST_CASE("generator: infeasible target placement is rejected") {
  SynthConfig cfg = small_config(1);
  cfg.images_per_block = 10;
  cfg.targets_per_block = 7;
  cfg.min_target_gap = 3;
  CHECK_THROWS_AS(synth_rsvp(cfg), ParamError);
}

TEST_CASE("recording round-trip is bit exact over randomized instances") {
  Rng rng(1234);
  const auto base = (temp_dir() / "roundtrip_rec").string();
  for (int rep = 0; rep < 25; ++rep) {
    const auto rec = random_recording(rng);
    write_recording(base, rec);
    const auto back = read_recording(base);
    CHECK(bit_equal(rec, back));
  }
}

TEST_CASE("epoch round-trip is bit exact over randomized instances") {
  Rng rng(4321);
  const auto path = (temp_dir() / "roundtrip_epochs.bin").string();
  for (int rep = 0; rep < 25; ++rep) {
    const auto set = random_epochs(rng);
    write_epochs(path, set);
    const auto back = read_epochs(path);
    CHECK(bit_equal(set, back));
  }
}

TEST_CASE("reading an empty epoch file is allowed for inspection") {
  const auto path = (temp_dir() / "empty_epochs.bin").string();
  EpochSet empty;
  empty.rate = 250;
  write_epochs(path, empty);
  const auto back = read_epochs(path);
  CHECK(back.size() == 0);
}

TEST_CASE("truncated payload is rejected with expected and actual sizes") {
  Rng rng(99);
  const auto base = (temp_dir() / "trunc_rec").string();
  const auto rec = random_recording(rng);
  write_recording(base, rec);

  const auto payload = base + ".f32";
  const auto size = fs::file_size(payload);
  fs::resize_file(payload, size - 1);
  try {
    read_recording(base);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(size)) != std::string::npos);      // expected
    CHECK(msg.find(std::to_string(size - 1)) != std::string::npos);  // actual
    CHECK(e.byte_offset() == size - 1);
  }
}

TEST_CASE("events with unknown labels are rejected with a line number") {
  Rng rng(100);
  const auto base = (temp_dir() / "badlabel_rec").string();
  auto rec = random_recording(rng);
  if (rec.events.empty()) rec.events.push_back({0, EventLabel::Target, 0, 0});
  write_recording(base, rec);
  {
    std::ofstream f(base + ".events.csv", std::ios::trunc);
    f << "sample_index,label,block_id,task_id\n0,oddity,0,0\n";
  }
  try {
    read_recording(base);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("oddity") != std::string::npos);
  }
}

TEST_CASE("future format versions are rejected explicitly") {
  const auto path = (temp_dir() / "future_epochs.bin").string();
  EpochSet set;
  set.rate = 100;
  write_epochs(path, set);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(7);  // version byte follows the 7-byte magic
    const char v2 = 2;
    f.write(&v2, 1);
  }
  CHECK_THROWS_AS(read_epochs(path), FormatError);

  const auto rec_base = (temp_dir() / "future_rec").string();
  Rng rng(5);
  write_recording(rec_base, random_recording(rng));
  {
    std::ifstream in(rec_base + ".json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto at = text.find("\"version\": 1");
    REQUIRE(at != std::string::npos);
    text.replace(at, 12, "\"version\": 9");
    std::ofstream out(rec_base + ".json", std::ios::trunc);
    out << text;
  }
  CHECK_THROWS_AS(read_recording(rec_base), FormatError);
}

TEST_CASE("truncated epoch payload reports the failing byte offset") {
  Rng rng(6);
  const auto path = (temp_dir() / "trunc_epochs.bin").string();
  auto set = random_epochs(rng);
  while (set.size() == 0) set = random_epochs(rng);
  write_epochs(path, set);
  fs::resize_file(path, fs::file_size(path) / 2);
  try {
    read_epochs(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset() != FormatError::npos);
  }
}
