#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rppg/types.hpp"

namespace rppg {

enum class TrajectoryKind { Constant, LinearRamp, Sinusoidal };

/// Heart rate over time. Construction rejects slopes above 7 BPM/s and rates
/// outside [40, 180] BPM.
class HrTrajectory {
 public:
  static HrTrajectory constant(double bpm, double duration_s);
  static HrTrajectory linear_ramp(double start_bpm, double slope_bpm_per_s, double duration_s);
  /// base + depth * sin(2 pi t / period).
  static HrTrajectory sinusoidal(double base_bpm, double depth_bpm, double period_s,
                                 double duration_s);

  TrajectoryKind kind() const { return kind_; }
  double duration() const { return duration_; }
  double bpm_at(double t) const;
  /// Integrated phase 2 pi * integral of bpm / 60, in closed form.
  double phase_at(double t) const;
  double max_slope() const;

  static constexpr double kMaxSlope = 7.0;
  static constexpr double kMinBpm = 40.0;
  static constexpr double kMaxBpm = 180.0;

 private:
  HrTrajectory(TrajectoryKind kind, double base, double slope, double depth, double period,
               double duration);

  TrajectoryKind kind_;
  double base_;
  double slope_;
  double depth_;
  double period_;
  double duration_;
};

/// (sin phi + h sin 2 phi) / (1 + h) sampled at fs for round(duration * fs)
/// samples.
Waveform synth_waveform(const HrTrajectory& traj, double fs, double harmonic_ratio = 0.3);

/// Same pulse shape driven by an arbitrary per-sample rate (trapezoidal phase
/// integration). No slope or range checks.
Waveform synth_waveform_from_bpm(const Eigen::VectorXd& bpm, double fs,
                                 double harmonic_ratio = 0.3);

/// Trajectory rate at each of `count` frames.
HrSeries analytic_hr_series(const HrTrajectory& traj, double fps, Index count);

struct SynthSpec {
  HrTrajectory trajectory = HrTrajectory::constant(72.0, 60.0);
  double fps = 30.0;
  Index size = 64;
  Eigen::Vector3d base_rgb{0.6, 0.4, 0.3};
  Eigen::Vector3d background_rgb{0.2, 0.22, 0.25};
  double pulse_amplitude = 0.01;
  double harmonic_ratio = 0.3;
  double noise_sigma = 0.01;
  double illum_drift_amplitude = 0.05;  // relative
  double illum_drift_period_s = 20.0;
  double gt_fs = 60.0;
  std::uint64_t seed = 0;
  std::string session_id = "synth";
  std::string subject_id = "synth";

  void validate() const;
};

/// Unit vector along (0.3, 1.0, 0.5).
Eigen::Vector3d skin_direction();

/// Radius of the face disc in pixels.
double face_radius(Index size);

struct SynthSession {
  VideoClip video;
  Waveform gt;  // at spec.gt_fs
  LandmarkTrack landmarks;
  SessionManifest manifest;  // paths left empty until written
};

SynthSession synth_session(const SynthSpec& spec);

/// Writes <dir>/<id>.manifest.json and <dir>/<id>/{frames/, gt.csv,
/// landmarks.json}; returns the manifest path.
std::filesystem::path write_session(const std::filesystem::path& dir, const SynthSession& session);

}  // namespace rppg
