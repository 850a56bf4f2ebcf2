#include <doctest.h>

#include "rppg/estimate.hpp"
#include "rppg/io.hpp"
#include "rppg/pipeline.hpp"
#include "rppg/synth.hpp"
#include "support.hpp"

using namespace rppg;
using testing::sine;

namespace {

VideoClip constant_clip(Index frames, float value = 0.4f) {
  return VideoClip(FrameMatrix<float>::Constant(frames, 4 * 4 * 3, value), 4, 4, 30.0);
}

double clip_hr(const Estimator& est, const VideoClip& clip, const StftConfig& cfg = StftConfig::w10()) {
  const PredictionSet set = estimate_clip(est, clip);
  const Waveform wave = overlap_add(set.chunks, set.chunk_len, set.covered_length(), set.fps);
  const HrSeries hr = hr_series(wave, cfg);
  return mean_valid_hr(hr);
}

double clip_hr_full(const Estimator& est, const VideoClip& clip) {
  const PredictionSet set = estimate_clip(est, clip);
  return hr_full(overlap_add(set.chunks, set.chunk_len, set.covered_length(), set.fps), StftConfig::w10());
}

double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt(x.square().sum() * y.square().sum());
}

VideoClip synth_video(double bpm, double seconds, double drift = 0.05, std::uint64_t seed = 1) {
  SynthSpec spec;
  spec.trajectory = HrTrajectory::constant(bpm, seconds);
  spec.illum_drift_amplitude = drift;
  spec.seed = seed;
  spec.size = 32;
  return synth_session(spec).video;
}

}  // namespace

TEST_CASE("GREEN of a constant video is all zeros") {
  CHECK(estimate_green(constant_clip(50)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("GREEN follows a sinusoidal green channel") {
  const Eigen::VectorXd g = (0.5 + 0.1 * sine(136, 1.2, 30.0).array()).matrix();
  const Eigen::VectorXd out = estimate_green(testing::green_clip(g, 30.0));
  CHECK(corr(out, sine(136, 1.2, 30.0)) > 0.999);
  CHECK(std::abs(out.mean()) < 1e-9);
}

TEST_CASE("GREEN standardized output ignores pixel scale and offset") {
  const Eigen::VectorXd g = (0.4 + 0.05 * sine(136, 1.3, 30.0).array()).matrix();
  const VideoClip a = testing::green_clip(g, 30.0);
  const VideoClip b = testing::green_clip((0.5 * g.array() + 0.2).matrix(), 30.0, 4, 0.45, 0.4);
  const Eigen::VectorXd sa = standardize(estimate_green(a));
  const Eigen::VectorXd sb = standardize(estimate_green(b));
  CHECK((sa - sb).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("every estimator recovers a 72 BPM synthetic video") {
  const VideoClip clip = synth_video(72, 30);
  for (const char* name : {"green", "chrom", "pos"}) {
    CAPTURE(name);
    CHECK(std::abs(clip_hr(make_estimator(name), clip) - 72.0) <= 2.0);
  }
}

TEST_CASE("CHROM survives 20 percent illumination drift") {
  const VideoClip clip = synth_video(72, 30, 0.2, 4);
  CHECK(std::abs(clip_hr(make_estimator("chrom"), clip) - 72.0) <= 2.0);
}

TEST_CASE("CHROM and POS peaks do not move under pixel scale and offset") {
  const VideoClip clip = synth_video(84, 20);
  const FrameMatrix<float> scaled = (clip.data().array() * 0.8f + 0.1f).matrix();
  const VideoClip other(scaled, clip.height(), clip.width(), clip.fps());
  for (const char* name : {"chrom", "pos"}) {
    CAPTURE(name);
    const double bin = 60.0 * 0.001;
    CHECK(std::abs(clip_hr_full(make_estimator(name), clip) - clip_hr_full(make_estimator(name), other)) < 0.5 * bin);
  }
}

TEST_CASE("CHROM falls back to X when channels are equal") {
  FrameMatrix<float> data(136, 2 * 2 * 3);
  const Eigen::VectorXd s = sine(136, 1.2, 30.0);
  for (Index t = 0; t < 136; ++t) data.row(t).setConstant(static_cast<float>(0.5 + 0.1 * s[t]));
  const ChromResult r = estimate_chrom_detail(VideoClip(data, 2, 2, 30.0));
  CHECK(r.used_fallback);
  CHECK(r.values.allFinite());

  const ChromResult ok = estimate_chrom_detail(synth_video(72, 5));
  CHECK_FALSE(ok.used_fallback);
}

TEST_CASE("POS of a constant video is all zeros and short chunks are rejected") {
  CHECK(estimate_pos(constant_clip(60)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(estimate_pos(constant_clip(47)), Error);
}

TEST_CASE("chunk starts follow the stride") {
  const Estimator est = make_estimator("green");
  const auto chunks = run_chunked(est, constant_clip(340));
  REQUIRE(chunks.size() == 4);
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    CHECK(chunks[k].start == Index(k) * 68);
    CHECK(chunks[k].values.size() == 136);
  }
  CHECK(run_chunked(est, constant_clip(136)).size() == 1);
  CHECK_THROWS_AS(run_chunked(est, constant_clip(135)), Error);
  CHECK_THROWS_AS(make_estimator("magic"), Error);
  CHECK_THROWS_AS(make_estimator("green", 136, 200), Error);
}

TEST_CASE("chunk outputs are standardized") {
  const auto chunks = run_chunked(make_estimator("green"), synth_video(90, 10));
  for (const auto& c : chunks) {
    CHECK(std::abs(c.values.mean()) < 1e-9);
    CHECK(std::sqrt(c.values.array().square().mean()) == doctest::Approx(1.0));
  }
}

TEST_CASE("external predictions load in start order with validation") {
  testing::TempDir dir("rppg_estimate_preds");
  auto values = [](double v) {
    std::string s = "[";
    for (int i = 0; i < 136; ++i) s += (i ? "," : "") + std::to_string(v);
    return s + "]";
  };
  io::write_text(dir.path / "ok.json", "{\"chunk_len\":136,\"stride\":68,\"fps\":30,\"chunks\":[{\"start\":136,\"values\":" +
                                           values(3) + "},{\"start\":0,\"values\":" + values(1) +
                                           "},{\"start\":68,\"values\":" + values(2) + "}]}");
  const PredictionSet set = load_external_predictions(dir.path / "ok.json");
  REQUIRE(set.chunks.size() == 3);
  CHECK(set.chunks[0].start == 0);
  CHECK(set.chunks[2].start == 136);
  CHECK(set.chunks[2].values[0] == 3.0);
  CHECK(set.warnings.empty());

  std::string short_values = values(1);
  short_values = short_values.substr(0, short_values.rfind(',')) + "]";
  io::write_text(dir.path / "short.json", "{\"chunk_len\":136,\"stride\":68,\"fps\":30,\"chunks\":[{\"start\":0,\"values\":" +
                                              values(1) + "},{\"start\":68,\"values\":" + short_values + "}]}");
  try {
    load_external_predictions(dir.path / "short.json", "sess");
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("chunk 1") != std::string::npos);
    CHECK(msg.find("135") != std::string::npos);
  }

  io::write_text(dir.path / "offgrid.json", "{\"chunk_len\":136,\"stride\":68,\"fps\":30,\"chunks\":[{\"start\":10,\"values\":" +
                                                values(1) + "}]}");
  CHECK(load_external_predictions(dir.path / "offgrid.json").warnings.size() == 1);

  io::write_text(dir.path / "schema.json", "{\"chunk_len\":136,\"fps\":30,\"chunks\":[]}");
  CHECK_THROWS_AS(load_external_predictions(dir.path / "schema.json"), Error);
}

TEST_CASE("saved predictions load back unchanged") {
  testing::TempDir dir("rppg_estimate_roundtrip");
  const PredictionSet set = estimate_clip(make_estimator("pos"), synth_video(66, 10));
  save_predictions(dir.path / "p.json", set);
  const PredictionSet back = load_external_predictions(dir.path / "p.json");
  REQUIRE(back.chunks.size() == set.chunks.size());
  for (std::size_t k = 0; k < set.chunks.size(); ++k) CHECK(back.chunks[k].values == set.chunks[k].values);
}

TEST_CASE("estimators track constant rates across the band at high SNR") {
  for (double bpm : {45.0, 80.0, 125.0, 170.0}) {
    SynthSpec spec;
    spec.trajectory = HrTrajectory::constant(bpm, 20);
    spec.noise_sigma = 0.005;
    spec.size = 24;
    spec.seed = static_cast<std::uint64_t>(bpm);
    const VideoClip clip = synth_session(spec).video;
    for (const char* name : {"green", "chrom", "pos"}) {
      CAPTURE(name);
      CAPTURE(bpm);
      CHECK(std::abs(clip_hr(make_estimator(name), clip) - bpm) <= 2.0);
    }
  }
}
