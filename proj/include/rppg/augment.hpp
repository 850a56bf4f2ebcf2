#pragma once

#include <json.hpp>

#include <optional>

#include "rppg/postprocess.hpp"
#include "rppg/rng.hpp"
#include "rppg/types.hpp"

namespace rppg {

/// Target heart-rate range for speed augmentation and the clip length n.
struct SpeedAugSpec {
  double hr_min = 40.0;
  double hr_max = 180.0;
  Index clip_len = 136;

  void validate() const;
};

/// Upper bound on the heart-rate slope a modulation may introduce.
struct ModulationSpec {
  double max_slope = 7.0;  // BPM per second
  Index clip_len = 136;

  void validate() const;
};

struct SpatialAugSpec {
  double p_flip = 0.5;
  double sigma_illum = 0.1;
  double sigma_noise = 0.05;
};

/// Where an augmented clip came from.
struct AugmentProvenance {
  Index clip_start = 0;
  double source_start = 0;  // first interpolated source frame
  Index source_len = 0;     // L, frames of source consumed by the speed step
  double source_hr = 0;
  double target_hr = 0;
  double factor = 1.0;      // modulation factor f
  bool speed_applied = false;
  bool modulation_applied = false;
  int retries = 0;
};

struct AugmentedClip {
  VideoClip video;
  Waveform wave;
  double realized_hr_start = 0;
  double realized_hr_end = 0;
  AugmentProvenance provenance;
};

/// Mean HR of the STFT windows centered inside [clip_start, clip_start + n).
/// Only the part of `wave` needed for those windows is transformed. When no
/// window center falls inside the clip (clip near a session edge) the nearest
/// windows stand in.
double source_hr(const Waveform& wave, Index clip_start, Index n,
                 const StftConfig& cfg = StftConfig::w10());

/// L = floor(n * hr_target / hr_source).
Index speed_source_length(double hr_source, double hr_target, Index n);

/// First frame of the L-frame source interval centered on the n-frame clip,
/// shifted inward to fit a session of `frames` frames. Throws
/// InsufficientContext when L exceeds the session.
Index speed_source_start(Index clip_start, Index n, Index source_len, Index frames);

/// Resample the L-frame interval centered on [clip_start, clip_start + n) to n
/// frames, video and waveform alike. `extra_frames` more positions continue
/// the same spacing past the end (clamped at the session edge).
AugmentedClip speed_augment(const VideoClip& video, const Waveform& wave, Index clip_start,
                            double hr_source, double hr_target, Index n,
                            Index extra_frames = 0);

/// Uniform draw on [hr_min, hr_max].
double sample_target_hr(RngState& rng, const SpeedAugSpec& spec);

struct FactorRange {
  double min = 1.0;
  double max = 1.0;
};

/// Largest [1/f_max, f_max] with 2 hr |f - 1| / (1 + f) <= max_slope * n / fps.
FactorRange modulation_bounds(double hr, Index n, double fps, const ModulationSpec& spec);

/// modulation_bounds further narrowed so that the start and end rates
/// hr * s and hr * e stay inside [hr_min, hr_max].
FactorRange modulation_bounds_in_range(double hr, Index n, double fps, const ModulationSpec& spec,
                                       const SpeedAugSpec& range);

/// Log-uniform draw on the range, so f and 1/f are equally likely.
double sample_modulation_factor(RngState& rng, const FactorRange& range);

/// Start and end normalized rates: s = 2 / (1 + f), e = s f.
struct NormalizedRates {
  double start = 1.0;
  double end = 1.0;
};
NormalizedRates normalized_rates(double f);

/// Normalized heart rate at output frame x: s + x (e - s) / n.
double normalized_hr(double x, double f, Index n);

/// P(x) = x s + x^2 (e - s) / (2 n) for any real x.
double modulation_position(double x, double f, Index n);

/// P(x) at x = 0..n-1.
Eigen::VectorXd modulation_positions(double f, Index n);

/// Interpolate `video` and `wave` at P(x). The source should hold n + 1
/// frames; with only n the last position clamps to the final frame.
/// `hr` is the clip's rate before modulation, used for the realized rates.
AugmentedClip modulate(const VideoClip& video, const Waveform& wave, double f, Index n, double hr,
                       std::optional<FactorRange> bounds = std::nullopt);

/// Random horizontal flip, global illumination offset and pixel noise,
/// clamped to [0, 1].
VideoClip spatial_augment(const VideoClip& clip, RngState& rng, const SpatialAugSpec& params);

/// Left-right mirror of every frame.
VideoClip flip_horizontal(const VideoClip& clip);

struct AugmentConfig {
  SpeedAugSpec speed;
  ModulationSpec modulation;
  SpatialAugSpec spatial;
  StftConfig stft;
  bool use_speed = true;
  bool use_modulation = true;
  bool use_spatial = false;
  int max_retries = 10;
};

/// Speed, then modulation, then spatial augmentation of the n-frame clip at
/// `clip_start`. Target HRs that do not fit the session are redrawn up to
/// max_retries times, after which the clip passes through unaugmented.
AugmentedClip augment_clip(const VideoClip& video, const Waveform& wave, Index clip_start,
                           const AugmentConfig& config, RngState& rng);

nlohmann::json to_json(const AugmentProvenance& p, std::uint64_t seed);

}  // namespace rppg
