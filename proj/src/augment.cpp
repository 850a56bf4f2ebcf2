#include "rppg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rppg/interpolate.hpp"

namespace rppg {

void SpeedAugSpec::validate() const {
  require(hr_min > 0 && hr_min <= hr_max, ErrorCode::Validation,
          "speed augmentation needs 0 < hr_min <= hr_max");
  require(clip_len >= 2, ErrorCode::Validation, "clip length must be at least 2");
}

void ModulationSpec::validate() const {
  require(max_slope >= 0, ErrorCode::Validation, "modulation slope cap must be non-negative");
  require(clip_len >= 2, ErrorCode::Validation, "clip length must be at least 2");
}

double source_hr(const Waveform& wave, Index clip_start, Index n, const StftConfig& cfg) {
  cfg.validate(wave.fs());
  require(n >= 1 && clip_start >= 0, ErrorCode::Validation, "invalid clip range");
  const Index len = cfg.window_samples(wave.fs());
  require(wave.size() >= len, ErrorCode::Validation,
          "waveform shorter than one STFT window; cannot measure source HR");
  const Index last_start = wave.size() - len;
  const Index lo = std::clamp<Index>(clip_start - len / 2, 0, last_start);
  const Index hi = std::clamp<Index>(clip_start + n - 1 - len / 2, 0, last_start);

  SpectralPeakPicker picker(len, wave.fs(), cfg.bin_hz, cfg.band);
  const Mask validity = wave.validity();
  double sum = 0;
  Index count = 0;
  for (Index start = lo; start <= hi; start += cfg.stride_frames) {
    if (!validity.segment(start, len).all()) continue;
    if (const auto peak = picker.peak_hz(wave.samples().segment(start, len))) {
      sum += 60.0 * *peak;
      ++count;
    }
  }
  require(count > 0, ErrorCode::NoSourceHr, "every STFT window covering the clip is masked");
  return sum / static_cast<double>(count);
}

Index speed_source_length(double hr_source, double hr_target, Index n) {
  require(hr_source > 0 && hr_target > 0, ErrorCode::Validation, "heart rates must be positive");
  const double exact = static_cast<double>(n) * hr_target / hr_source;
  return static_cast<Index>(std::floor(exact * (1.0 + 1e-12)));
}

Index speed_source_start(Index clip_start, Index n, Index source_len, Index frames) {
  require(source_len <= frames, ErrorCode::InsufficientContext,
          "speed augmentation needs " + std::to_string(source_len) +
              " source frames but the session has " + std::to_string(frames));
  const Index diff = n - source_len;
  const Index half = diff >= 0 ? diff / 2 : -((-diff + 1) / 2);
  return std::clamp<Index>(clip_start + half, 0, frames - source_len);
}

namespace {

Index session_frames(const VideoClip& video, const Waveform& wave) {
  require(wave.fs() == video.fps(), ErrorCode::Validation,
          "waveform must be resampled to the video frame rate before augmentation");
  return std::min(video.frames(), wave.size());
}

AugmentedClip speed_with_length(const VideoClip& video, const Waveform& wave, Index clip_start,
                                double hr_source, Index source_len, Index n, Index extra_frames) {
  require(n >= 2, ErrorCode::Validation, "clip length must be at least 2");
  require(source_len >= 2, ErrorCode::InsufficientContext, "speed interval shorter than 2 frames");
  const Index frames = session_frames(video, wave);
  const Index start = speed_source_start(clip_start, n, source_len, frames);
  const double step = static_cast<double>(source_len) / static_cast<double>(n);
  const Eigen::VectorXd positions =
      Eigen::VectorXd::LinSpaced(n + extra_frames, 0.0, static_cast<double>(n + extra_frames - 1)) * step +
      Eigen::VectorXd::Constant(n + extra_frames, static_cast<double>(start));

  const double realized = hr_source * step;
  AugmentedClip out{interpolate_clip(video, positions, video.fps()),
                    interpolate_waveform(wave, positions, wave.fs()),
                    realized,
                    realized,
                    {}};
  out.provenance.clip_start = clip_start;
  out.provenance.source_start = static_cast<double>(start);
  out.provenance.source_len = source_len;
  out.provenance.source_hr = hr_source;
  out.provenance.speed_applied = true;
  return out;
}

}  // namespace

AugmentedClip speed_augment(const VideoClip& video, const Waveform& wave, Index clip_start,
                            double hr_source, double hr_target, Index n, Index extra_frames) {
  const Index source_len = speed_source_length(hr_source, hr_target, n);
  AugmentedClip out =
      speed_with_length(video, wave, clip_start, hr_source, source_len, n, extra_frames);
  out.provenance.target_hr = hr_target;
  return out;
}

double sample_target_hr(RngState& rng, const SpeedAugSpec& spec) {
  spec.validate();
  return rng.uniform(spec.hr_min, spec.hr_max);
}

FactorRange modulation_bounds(double hr, Index n, double fps, const ModulationSpec& spec) {
  require(hr > 0 && fps > 0 && n >= 1, ErrorCode::Validation, "modulation bounds need positive inputs");
  const double allowed = spec.max_slope * static_cast<double>(n) / fps;  // max |delta HR| in BPM
  if (!(allowed > 0)) return {1.0, 1.0};
  if (allowed >= 2.0 * hr) return {0.0, std::numeric_limits<double>::infinity()};
  const double f_max = (2.0 * hr + allowed) / (2.0 * hr - allowed);
  return {1.0 / f_max, f_max};
}

FactorRange modulation_bounds_in_range(double hr, Index n, double fps, const ModulationSpec& spec,
                                       const SpeedAugSpec& range) {
  FactorRange b = modulation_bounds(hr, n, fps, spec);
  if (hr < range.hr_min || hr > range.hr_max) return {1.0, 1.0};
  const double r = range.hr_max / hr;  // >= 1
  const double q = range.hr_min / hr;  // <= 1
  // f > 1: end rate hr*e <= hr_max and start rate hr*s >= hr_min.
  if (r < 2.0) b.max = std::min(b.max, r / (2.0 - r));
  if (q > 0) b.max = std::min(b.max, 2.0 / q - 1.0);
  // f < 1: start rate hr*s <= hr_max and end rate hr*e >= hr_min.
  b.min = std::max(b.min, 2.0 / r - 1.0);
  b.min = std::max(b.min, q / (2.0 - q));
  b.max = std::max(1.0, b.max);
  b.min = std::min(1.0, b.min);
  return b;
}

double sample_modulation_factor(RngState& rng, const FactorRange& range) {
  const double lo = std::clamp(range.min, 1e-3, 1.0);
  const double hi = std::clamp(range.max, 1.0, 1e3);
  if (hi == lo) return lo;
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

NormalizedRates normalized_rates(double f) {
  require(f > 0 && std::isfinite(f), ErrorCode::Validation, "modulation factor must be positive");
  const double s = 2.0 / (1.0 + f);
  return {s, s * f};
}

double normalized_hr(double x, double f, Index n) {
  const auto [s, e] = normalized_rates(f);
  return s + x * (e - s) / static_cast<double>(n);
}

double modulation_position(double x, double f, Index n) {
  const auto [s, e] = normalized_rates(f);
  return x * s + x * x * (e - s) / (2.0 * static_cast<double>(n));
}

Eigen::VectorXd modulation_positions(double f, Index n) {
  require(n >= 1, ErrorCode::Validation, "clip length must be positive");
  const auto [s, e] = normalized_rates(f);
  const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  return x * s + x.square() * (e - s) / (2.0 * static_cast<double>(n));
}

AugmentedClip modulate(const VideoClip& video, const Waveform& wave, double f, Index n, double hr,
                       std::optional<FactorRange> bounds) {
  if (bounds) {
    const double tol = 1e-12;
    require(f >= bounds->min * (1 - tol) && f <= bounds->max * (1 + tol), ErrorCode::Validation,
            "modulation factor outside the allowed range");
  }
  require(video.frames() >= n && wave.size() >= n, ErrorCode::InsufficientContext,
          "modulation needs at least n source frames");
  require(wave.fs() == video.fps(), ErrorCode::Validation,
          "waveform must be at the video frame rate");
  const Eigen::VectorXd positions = modulation_positions(f, n);
  const auto [s, e] = normalized_rates(f);
  AugmentedClip out{interpolate_clip(video, positions, video.fps()),
                    interpolate_waveform(wave, positions, wave.fs()),
                    hr * s,
                    hr * e,
                    {}};
  out.provenance.factor = f;
  out.provenance.modulation_applied = true;
  return out;
}

VideoClip flip_horizontal(const VideoClip& clip) {
  FrameMatrix<float> out(clip.frames(), clip.data().cols());
  const Index w = clip.width();
  for (Index y = 0; y < clip.height(); ++y) {
    for (Index x = 0; x < w; ++x) {
      out.middleCols((y * w + x) * 3, 3) = clip.data().middleCols((y * w + (w - 1 - x)) * 3, 3);
    }
  }
  return VideoClip(std::move(out), clip.height(), clip.width(), clip.fps());
}

VideoClip spatial_augment(const VideoClip& clip, RngState& rng, const SpatialAugSpec& params) {
  const bool flip = rng.bernoulli(params.p_flip);
  const double illumination = rng.normal(0.0, params.sigma_illum);
  FrameMatrix<float> data = flip ? flip_horizontal(clip).data() : clip.data();
  if (params.sigma_noise > 0) {
    std::normal_distribution<double> noise(0.0, params.sigma_noise);
    for (Index i = 0; i < data.size(); ++i) {
      data.data()[i] += static_cast<float>(illumination + noise(rng.engine()));
    }
  } else if (illumination != 0.0) {
    data.array() += static_cast<float>(illumination);
  }
  data = data.cwiseMax(0.0f).cwiseMin(1.0f);
  return VideoClip(std::move(data), clip.height(), clip.width(), clip.fps());
}

AugmentedClip augment_clip(const VideoClip& video, const Waveform& wave, Index clip_start,
                           const AugmentConfig& config, RngState& rng) {
  config.speed.validate();
  config.modulation.validate();
  const Index n = config.speed.clip_len;
  const Index frames = session_frames(video, wave);
  require(clip_start >= 0 && clip_start + n <= frames, ErrorCode::Validation,
          "clip [" + std::to_string(clip_start) + ", " + std::to_string(clip_start + n) +
              ") lies outside the session");
  RngState speed_rng = rng.substream("speed");
  RngState mod_rng = rng.substream("modulation");
  RngState spatial_rng = rng.substream("spatial");
  const Index extra = config.use_modulation ? 1 : 0;

  std::optional<AugmentedClip> current;
  double hr = 0;
  int retries = 0;
  double hr_src = 0;
  bool have_source = false;
  if (config.use_speed || config.use_modulation) {
    try {
      hr_src = source_hr(wave, clip_start, n, config.stft);
      have_source = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSourceHr) throw;
    }
  }

  if (config.use_speed && have_source) {
    for (int attempt = 0; attempt <= config.max_retries && !current; ++attempt) {
      const double target = sample_target_hr(speed_rng, config.speed);
      Index source_len = speed_source_length(hr_src, target, n);
      // Flooring L can drop the realized rate just under hr_min.
      if (hr_src * static_cast<double>(source_len) / static_cast<double>(n) < config.speed.hr_min) {
        ++source_len;
      }
      try {
        current = speed_with_length(video, wave, clip_start, hr_src, source_len, n, extra);
        current->provenance.target_hr = target;
        current->provenance.retries = attempt;
        hr = current->realized_hr_end;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientContext) throw;
        retries = attempt + 1;
      }
    }
  }
  if (!current) {
    const Index count = std::min(n + extra, frames - clip_start);
    current = AugmentedClip{video.slice(clip_start, count), wave.segment(clip_start, count),
                            hr_src, hr_src, {}};
    current->provenance.clip_start = clip_start;
    current->provenance.source_start = static_cast<double>(clip_start);
    current->provenance.source_len = n;
    current->provenance.source_hr = hr_src;
    current->provenance.target_hr = hr_src;
    current->provenance.retries = retries;
    hr = hr_src;
  }

  AugmentProvenance provenance = current->provenance;
  if (config.use_modulation && have_source) {
    const FactorRange range = modulation_bounds_in_range(hr, n, video.fps(), config.modulation,
                                                         config.speed);
    const double f = sample_modulation_factor(mod_rng, range);
    AugmentedClip modulated = modulate(current->video, current->wave, f, n, hr, range);
    provenance.factor = f;
    provenance.modulation_applied = true;
    modulated.provenance = provenance;
    current = std::move(modulated);
  } else if (current->video.frames() > n) {
    current->video = current->video.slice(0, n);
    current->wave = current->wave.head(n);
  }

  if (config.use_spatial) {
    current->video = spatial_augment(current->video, spatial_rng, config.spatial);
  }
  return std::move(*current);
}

nlohmann::json to_json(const AugmentProvenance& p, std::uint64_t seed) {
  return {{"target_hr", p.target_hr},
          {"source_hr", p.source_hr},
          {"L", p.source_len},
          {"f", p.factor},
          {"seed", seed},
          {"clip_start", p.clip_start},
          {"source_start", p.source_start},
          {"speed_applied", p.speed_applied},
          {"modulation_applied", p.modulation_applied},
          {"retries", p.retries}};
}

}  // namespace rppg
