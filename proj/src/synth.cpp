#include "rppg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rppg/core.hpp"
#include "rppg/io.hpp"
#include "rppg/rng.hpp"

namespace rppg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_rate(double bpm, const char* what) {
  require(std::isfinite(bpm) && bpm >= HrTrajectory::kMinBpm && bpm <= HrTrajectory::kMaxBpm,
          ErrorCode::Validation,
          std::string(what) + " of " + std::to_string(bpm) + " BPM is outside [40, 180]");
}

}  // namespace

HrTrajectory::HrTrajectory(TrajectoryKind kind, double base, double slope, double depth,
                           double period, double duration)
    : kind_(kind), base_(base), slope_(slope), depth_(depth), period_(period), duration_(duration) {
  require(std::isfinite(duration_) && duration_ > 0, ErrorCode::Validation,
          "trajectory duration must be positive");
  require(max_slope() <= kMaxSlope * (1 + 1e-12), ErrorCode::Validation,
          "trajectory slope " + std::to_string(max_slope()) + " BPM/s exceeds 7 BPM/s");
}

HrTrajectory HrTrajectory::constant(double bpm, double duration_s) {
  check_rate(bpm, "rate");
  return HrTrajectory(TrajectoryKind::Constant, bpm, 0, 0, 1, duration_s);
}

HrTrajectory HrTrajectory::linear_ramp(double start_bpm, double slope_bpm_per_s,
                                       double duration_s) {
  require(std::isfinite(slope_bpm_per_s), ErrorCode::Validation, "slope must be finite");
  HrTrajectory t(TrajectoryKind::LinearRamp, start_bpm, slope_bpm_per_s, 0, 1, duration_s);
  check_rate(start_bpm, "start rate");
  check_rate(t.bpm_at(duration_s), "end rate");
  return t;
}

HrTrajectory HrTrajectory::sinusoidal(double base_bpm, double depth_bpm, double period_s,
                                      double duration_s) {
  require(std::isfinite(period_s) && period_s > 0, ErrorCode::Validation,
          "modulation period must be positive");
  require(std::isfinite(depth_bpm) && depth_bpm >= 0, ErrorCode::Validation,
          "modulation depth must be non-negative");
  HrTrajectory t(TrajectoryKind::Sinusoidal, base_bpm, 0, depth_bpm, period_s, duration_s);
  check_rate(base_bpm - depth_bpm, "minimum rate");
  check_rate(base_bpm + depth_bpm, "maximum rate");
  return t;
}

double HrTrajectory::bpm_at(double t) const {
  switch (kind_) {
    case TrajectoryKind::Constant: return base_;
    case TrajectoryKind::LinearRamp: return base_ + slope_ * t;
    case TrajectoryKind::Sinusoidal: return base_ + depth_ * std::sin(kTwoPi * t / period_);
  }
  return base_;
}

double HrTrajectory::phase_at(double t) const {
  double beats_min = 0;  // integral of bpm over [0, t], in BPM * s
  switch (kind_) {
    case TrajectoryKind::Constant: beats_min = base_ * t; break;
    case TrajectoryKind::LinearRamp: beats_min = base_ * t + 0.5 * slope_ * t * t; break;
    case TrajectoryKind::Sinusoidal:
      beats_min = base_ * t + depth_ * period_ / kTwoPi * (1.0 - std::cos(kTwoPi * t / period_));
      break;
  }
  return kTwoPi * beats_min / 60.0;
}

double HrTrajectory::max_slope() const {
  switch (kind_) {
    case TrajectoryKind::Constant: return 0;
    case TrajectoryKind::LinearRamp: return std::abs(slope_);
    case TrajectoryKind::Sinusoidal: return depth_ * kTwoPi / period_;
  }
  return 0;
}

namespace {

Eigen::VectorXd pulse_shape(const Eigen::ArrayXd& phase, double h) {
  require(h >= 0 && h < 1, ErrorCode::Validation, "harmonic ratio must lie in [0, 1)");
  return (phase.sin() + h * (2.0 * phase).sin()) / (1.0 + h);
}

}  // namespace

Waveform synth_waveform(const HrTrajectory& traj, double fs, double harmonic_ratio) {
  require(std::isfinite(fs) && fs > 0, ErrorCode::Validation, "sample rate must be positive");
  const auto n = std::max<Index>(1, static_cast<Index>(std::llround(traj.duration() * fs)));
  Eigen::ArrayXd phase(n);
  for (Index i = 0; i < n; ++i) phase[i] = traj.phase_at(static_cast<double>(i) / fs);
  return Waveform(pulse_shape(phase, harmonic_ratio), fs);
}

Waveform synth_waveform_from_bpm(const Eigen::VectorXd& bpm, double fs, double harmonic_ratio) {
  require(bpm.size() >= 1 && fs > 0, ErrorCode::Validation, "need a rate per sample and fs > 0");
  Eigen::ArrayXd phase(bpm.size());
  phase[0] = 0;
  for (Index i = 1; i < bpm.size(); ++i) {
    phase[i] = phase[i - 1] + kTwoPi * 0.5 * (bpm[i - 1] + bpm[i]) / 60.0 / fs;
  }
  return Waveform(pulse_shape(phase, harmonic_ratio), fs);
}

HrSeries analytic_hr_series(const HrTrajectory& traj, double fps, Index count) {
  Eigen::VectorXd v(count);
  for (Index i = 0; i < count; ++i) v[i] = traj.bpm_at(static_cast<double>(i) / fps);
  return HrSeries::from_values(std::move(v), fps);
}

void SynthSpec::validate() const {
  require(fps > 0 && gt_fs > 0, ErrorCode::Validation, "fps and gt_fs must be positive");
  require(size >= 4, ErrorCode::Validation, "frame size must be at least 4 pixels");
  require(pulse_amplitude >= 0, ErrorCode::Validation, "pulse amplitude must be non-negative");
  require(harmonic_ratio >= 0 && harmonic_ratio < 1, ErrorCode::Validation,
          "harmonic ratio must lie in [0, 1)");
  require(noise_sigma >= 0 && illum_drift_amplitude >= 0 && illum_drift_period_s > 0,
          ErrorCode::Validation, "noise and drift settings must be non-negative");
  require((base_rgb.array() >= 0).all() && (base_rgb.array() <= 1).all() &&
              (background_rgb.array() >= 0).all() && (background_rgb.array() <= 1).all(),
          ErrorCode::Validation, "colors must lie in [0, 1]");
  require(!session_id.empty(), ErrorCode::Validation, "session id must not be empty");
}

Eigen::Vector3d skin_direction() { return Eigen::Vector3d(0.3, 1.0, 0.5).normalized(); }

double face_radius(Index size) { return 0.45 * static_cast<double>(size); }

SynthSession synth_session(const SynthSpec& spec) {
  spec.validate();
  const Index side = spec.size;
  const Index pixels = side * side;
  const auto frames =
      std::max<Index>(1, static_cast<Index>(std::llround(spec.trajectory.duration() * spec.fps)));

  Eigen::Array<bool, Eigen::Dynamic, 1> face(pixels);
  const double r = face_radius(side);
  const double c = 0.5 * static_cast<double>(side);
  for (Index y = 0; y < side; ++y) {
    for (Index x = 0; x < side; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - c;
      const double dy = static_cast<double>(y) + 0.5 - c;
      face[y * side + x] = dx * dx + dy * dy <= r * r;
    }
  }

  const Waveform pulse = synth_waveform(spec.trajectory, spec.fps, spec.harmonic_ratio);
  const Eigen::Vector3d skin = skin_direction();
  RngState rng = RngState(spec.seed).substream("synth/noise");
  std::normal_distribution<double> noise(0.0, std::max(spec.noise_sigma, 1e-300));

  FrameMatrix<float> data(frames, pixels * 3);
  for (Index t = 0; t < frames; ++t) {
    const double time = static_cast<double>(t) / spec.fps;
    const double gain =
        1.0 + spec.illum_drift_amplitude * std::sin(kTwoPi * time / spec.illum_drift_period_s);
    const Eigen::Vector3d face_rgb = gain * (spec.base_rgb + spec.pulse_amplitude * pulse[t] * skin);
    const Eigen::Vector3d back_rgb = gain * spec.background_rgb;
    float* row = data.row(t).data();
    for (Index p = 0; p < pixels; ++p) {
      const Eigen::Vector3d& color = face[p] ? face_rgb : back_rgb;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = color[ch] + (spec.noise_sigma > 0 ? noise(rng.engine()) : 0.0);
        row[p * 3 + ch] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }

  LandmarkTrack landmarks;
  const std::vector<Eigen::Vector2d> box{{c - r, c - r}, {c + r, c + r}};
  landmarks.frames.assign(static_cast<std::size_t>(frames), box);

  SessionManifest manifest;
  manifest.session_id = spec.session_id;
  manifest.subject_id = spec.subject_id;
  manifest.fps = spec.fps;
  manifest.gt_fs = spec.gt_fs;

  return SynthSession{VideoClip(std::move(data), side, side, spec.fps),
                      synth_waveform(spec.trajectory, spec.gt_fs, spec.harmonic_ratio),
                      std::move(landmarks), std::move(manifest)};
}

std::filesystem::path write_session(const std::filesystem::path& dir, const SynthSession& session) {
  const std::string& id = session.manifest.session_id;
  const std::filesystem::path root = dir / id;
  SessionManifest m = session.manifest;
  m.frames_dir = root / "frames";
  m.gt_waveform = root / "gt.csv";
  m.landmarks = root / "landmarks.json";
  io::write_frames_dir(m.frames_dir, session.video);
  io::write_waveform_csv(m.gt_waveform, session.gt);
  io::write_landmarks_json(*m.landmarks, session.landmarks);
  const std::filesystem::path manifest_path = dir / (id + ".manifest.json");
  save_manifest(manifest_path, m);
  return manifest_path;
}

}  // namespace rppg
