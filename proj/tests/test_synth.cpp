#include <doctest.h>

#include "rppg/core.hpp"
#include "rppg/io.hpp"
#include "rppg/postprocess.hpp"
#include "rppg/synth.hpp"
#include "support.hpp"

using namespace rppg;

namespace {

void check_against_analytic(const HrTrajectory& traj, double tol) {
  const Waveform w = synth_waveform(traj, 30.0);
  const HrSeries hr = hr_series(w, StftConfig::w10());
  for (Index c = hr.first_window; c <= hr.last_window; ++c) {
    REQUIRE(hr.valid[c]);
    CHECK(std::abs(hr.bpm[c] - traj.bpm_at(c / 30.0)) <= tol);
  }
}

}  // namespace

TEST_CASE("constant 72 BPM wave reads 72 BPM") {
  const Waveform w = synth_waveform(HrTrajectory::constant(72, 30), 30.0);
  CHECK(w.size() == 900);
  CHECK(w.samples().cwiseAbs().maxCoeff() <= 1.0);
  const HrSeries hr = hr_series(w, StftConfig::w10());
  for (Index i = 0; i < hr.size(); ++i) CHECK(std::abs(hr.bpm[i] - 72.0) <= 0.06);
}

TEST_CASE("a 60 to 90 BPM ramp tracks the analytic rate at window centers") {
  const HrTrajectory ramp = HrTrajectory::linear_ramp(60, 1.0, 30);
  CHECK(ramp.bpm_at(30) == doctest::Approx(90.0));
  check_against_analytic(ramp, 1.5);
}

TEST_CASE("every preset matches its analytic rate within 1.5 BPM") {
  check_against_analytic(HrTrajectory::constant(45, 40), 1.5);
  check_against_analytic(HrTrajectory::constant(170, 40), 1.5);
  check_against_analytic(HrTrajectory::linear_ramp(150, -2.0, 40), 1.5);
  check_against_analytic(HrTrajectory::sinusoidal(80, 10, 30, 60), 1.5);
}

TEST_CASE("closed-form phase agrees with numeric integration") {
  const HrTrajectory traj = HrTrajectory::sinusoidal(90, 20, 25, 50);
  const Index n = 50 * 600;
  Eigen::VectorXd bpm(n);
  for (Index i = 0; i < n; ++i) bpm[i] = traj.bpm_at(i / 600.0);
  const Waveform numeric = synth_waveform_from_bpm(bpm, 600.0);
  const Waveform exact = synth_waveform(traj, 600.0);
  CHECK((numeric.samples() - exact.samples()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("trajectory invariants are enforced at construction") {
  CHECK_THROWS_AS(HrTrajectory::linear_ramp(60, 8.0, 5), Error);
  CHECK_THROWS_AS(HrTrajectory::linear_ramp(60, 7.0, 30), Error);  // ends at 270 BPM
  CHECK_NOTHROW(HrTrajectory::linear_ramp(60, 7.0, 10));
  CHECK_THROWS_AS(HrTrajectory::constant(200, 10), Error);
  CHECK_THROWS_AS(HrTrajectory::constant(39, 10), Error);
  CHECK_THROWS_AS(HrTrajectory::sinusoidal(100, 30, 10, 60), Error);  // slope 18.8 BPM/s
  CHECK_THROWS_AS(HrTrajectory::sinusoidal(50, 20, 60, 60), Error);   // dips to 30
  CHECK_THROWS_AS(HrTrajectory::constant(70, 0), Error);
  CHECK(HrTrajectory::sinusoidal(80, 10, 30, 60).max_slope() <= 7.0);
}

TEST_CASE("the face disc covers at least 60 percent of the frame") {
  SynthSpec spec;
  spec.trajectory = HrTrajectory::constant(72, 1);
  spec.noise_sigma = 0;
  spec.illum_drift_amplitude = 0;
  spec.pulse_amplitude = 0;
  const SynthSession s = synth_session(spec);
  Index face = 0;
  for (Index p = 0; p < 64 * 64; ++p) {
    if (std::abs(s.video.data()(0, p * 3) - spec.base_rgb[0]) < 1e-6) ++face;
  }
  CHECK(double(face) / (64 * 64) >= 0.6);
  REQUIRE(s.landmarks.size() == s.video.frames());
  CHECK(s.landmarks.frames[0][0].x() == doctest::Approx(32 - face_radius(64)));
}

TEST_CASE("mean face color stays within the pulse envelope of base_rgb") {
  SynthSpec spec;
  spec.trajectory = HrTrajectory::constant(72, 20);
  spec.illum_drift_amplitude = 0;
  spec.size = 32;
  const SynthSession s = synth_session(spec);
  const double r = face_radius(32);
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  Index count = 0;
  for (Index t = 0; t < s.video.frames(); ++t) {
    Eigen::Vector3d frame_sum = Eigen::Vector3d::Zero();
    Index inside = 0;
    for (Index y = 0; y < 32; ++y) {
      for (Index x = 0; x < 32; ++x) {
        const double dx = x + 0.5 - 16, dy = y + 0.5 - 16;
        if (dx * dx + dy * dy > r * r) continue;
        for (int c = 0; c < 3; ++c) frame_sum[c] += s.video.at(t, y, x, c);
        ++inside;
      }
    }
    const Eigen::Vector3d mean = frame_sum / double(inside);
    const Eigen::Vector3d envelope = spec.pulse_amplitude * skin_direction();
    CHECK(((mean - spec.base_rgb).cwiseAbs().array() <= envelope.array() + 1e-3).all());
    total += frame_sum;
    count += inside;
  }
  CHECK(((total / double(count) - spec.base_rgb).cwiseAbs().array() < 1e-3).all());
}

TEST_CASE("seeds change the noise but not the ground truth") {
  SynthSpec a;
  a.trajectory = HrTrajectory::constant(66, 3);
  a.size = 16;
  SynthSpec b = a;
  b.seed = 9;
  const SynthSession sa = synth_session(a);
  const SynthSession sa2 = synth_session(a);
  const SynthSession sb = synth_session(b);
  CHECK(sa.video.data() == sa2.video.data());
  CHECK(sa.video.data() != sb.video.data());
  CHECK(sa.gt.samples() == sb.gt.samples());
  CHECK(sa.gt.fs() == 60.0);
  CHECK(sa.gt.size() == 180);
}

TEST_CASE("zero pulse amplitude leaves no pulse to find") {
  SynthSpec spec;
  spec.trajectory = HrTrajectory::constant(72, 10);
  spec.pulse_amplitude = 0;
  spec.illum_drift_amplitude = 0;
  spec.size = 16;
  const SynthSession s = synth_session(spec);
  const Eigen::VectorXd g = s.video.mean_rgb().col(1);
  const Eigen::VectorXd truth = resample_waveform(s.gt, 30.0).samples().head(g.size());
  const Eigen::ArrayXd a = g.array() - g.mean();
  const Eigen::ArrayXd b = truth.array() - truth.mean();
  CHECK(std::abs((a * b).sum() / std::sqrt(a.square().sum() * b.square().sum())) < 0.3);
}

TEST_CASE("written sessions load back through the manifest") {
  testing::TempDir dir("rppg_synth_write");
  SynthSpec spec;
  spec.trajectory = HrTrajectory::constant(80, 2);
  spec.size = 16;
  spec.session_id = "demo";
  const SynthSession s = synth_session(spec);
  const auto manifest_path = write_session(dir.path, s);
  CHECK(manifest_path == dir.path / "demo.manifest.json");
  CHECK(std::filesystem::exists(dir.path / "demo" / "frames"));
  const Session loaded = load_session(load_manifest(manifest_path));
  CHECK(loaded.video.frames() == 60);
  CHECK(loaded.gt.size() == 120);
  CHECK(loaded.gt.samples() == s.gt.samples());
  CHECK((loaded.video.data() - s.video.data()).cwiseAbs().maxCoeff() <= 0.5f / 255 + 1e-6f);
  REQUIRE(loaded.landmarks.has_value());
  CHECK(loaded.landmarks->size() == 60);
}
