#include "rppg/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rppg {

void StftConfig::validate(double fs) const {
  require(bin_hz > 0, ErrorCode::Validation, "STFT bin width must be positive");
  require(band.lo < band.hi && band.lo >= 0, ErrorCode::Validation, "STFT band is empty");
  require(stride_frames >= 1, ErrorCode::Validation, "STFT stride must be at least 1 frame");
  require(window_s * fs >= 2, ErrorCode::Validation, "STFT window shorter than 2 samples");
}

Index StftConfig::window_samples(double fs) const {
  return static_cast<Index>(std::llround(window_s * fs));
}

Eigen::VectorXd periodic_hann(Index n) {
  Eigen::VectorXd w(n);
  for (Index k = 0; k < n; ++k) {
    w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                static_cast<double>(n));
  }
  return w;
}

Index padded_fft_size(Index segment_len, double fs, double bin_hz) {
  const auto base = static_cast<Index>(std::ceil(fs / bin_hz - 1e-9));
  const Index multiple = std::max<Index>(1, (segment_len + base - 1) / base);
  return base * multiple;
}

SpectralPeakPicker::SpectralPeakPicker(Index segment_len, double fs, double bin_hz, Band band)
    : segment_len_(segment_len),
      fs_(fs),
      nfft_(padded_fft_size(segment_len, fs, bin_hz)),
      taper_(periodic_hann(segment_len)),
      padded_(static_cast<std::size_t>(nfft_), 0.0) {
  require(segment_len >= 2, ErrorCode::Validation, "spectral segment shorter than 2 samples");
  const double per_hz = static_cast<double>(nfft_) / fs;
  bin_lo_ = std::max<Index>(0, static_cast<Index>(std::ceil(band.lo * per_hz - 1e-9)));
  bin_hi_ = std::min<Index>(nfft_ / 2, static_cast<Index>(std::floor(band.hi * per_hz + 1e-9)));
  require(bin_lo_ <= bin_hi_, ErrorCode::Validation, "band contains no FFT bins");
  fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
}

std::optional<double> SpectralPeakPicker::peak_hz(
    const Eigen::Ref<const Eigen::VectorXd>& segment, const Mask& valid) {
  require(segment.size() == segment_len_, ErrorCode::Validation,
          "segment length differs from the picker's");
  const bool masked = valid.size() != 0;
  double sum = 0;
  Index count = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < segment_len_; ++i) {
    if (masked && !valid[i]) continue;
    sum += segment[i];
    ++count;
    lo = std::min(lo, segment[i]);
    hi = std::max(hi, segment[i]);
  }
  if (count < 2 || !(hi - lo > 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi))))) {
    return std::nullopt;
  }
  const double mean = sum / static_cast<double>(count);
  for (Index i = 0; i < segment_len_; ++i) {
    const bool keep = !masked || valid[i];
    padded_[static_cast<std::size_t>(i)] = keep ? (segment[i] - mean) * taper_[i] : 0.0;
  }
  std::fill(padded_.begin() + segment_len_, padded_.end(), 0.0);
  fft_.fwd(spectrum_, padded_);

  Index best = -1;
  double best_power = 0;
  for (Index k = bin_lo_; k <= bin_hi_; ++k) {
    const double power = std::norm(spectrum_[static_cast<std::size_t>(k)]);
    if (power > best_power) {
      best_power = power;
      best = k;
    }
  }
  if (best < 0) return std::nullopt;
  return static_cast<double>(best) * fs_ / static_cast<double>(nfft_);
}

Waveform overlap_add(const std::vector<ChunkPrediction>& chunks, Index chunk_len,
                     Index total_len, double fs) {
  require(!chunks.empty(), ErrorCode::Validation, "overlap_add needs at least one chunk");
  require(chunk_len >= 1 && total_len >= 1, ErrorCode::Validation, "overlap_add sizes must be positive");
  const Eigen::VectorXd window = periodic_hann(chunk_len);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(total_len);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(total_len);
  for (const auto& chunk : chunks) {
    require(chunk.values.size() == chunk_len, ErrorCode::Validation,
            "chunk at " + std::to_string(chunk.start) + " has the wrong length");
    require(chunk.start >= 0 && chunk.start + chunk_len <= total_len, ErrorCode::Validation,
            "chunk at " + std::to_string(chunk.start) + " extends past the output");
    acc.segment(chunk.start, chunk_len) += chunk.values.cwiseProduct(window);
    weight.segment(chunk.start, chunk_len) += window;
  }
  Eigen::VectorXd out = acc.array() / weight.array().max(kOlaEpsilon);
  Mask mask = weight.array() >= kOlaMaskWeight;
  return Waveform(std::move(out), fs, std::move(mask));
}

namespace {

// Spread window values to every frame: centers hold their window, gaps and
// edges take the nearest center (earlier one on ties).
HrSeries fill_per_frame(const std::vector<double>& values, const std::vector<bool>& ok,
                        Index first_center, Index stride, Index total, double fs, Band band) {
  HrSeries out;
  out.bpm.resize(total);
  out.valid.resize(total);
  out.fs = fs;
  out.band = band;
  const auto count = static_cast<Index>(values.size());
  out.first_window = first_center;
  out.last_window = first_center + (count - 1) * stride;
  for (Index i = 0; i < total; ++i) {
    Index k = 0;
    if (i > first_center) {
      const Index d = i - first_center;
      k = std::min<Index>(count - 1, (2 * d + stride - 1) / (2 * stride));
    }
    out.bpm[i] = values[static_cast<std::size_t>(k)];
    out.valid[i] = ok[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

HrSeries hr_series(const Waveform& wave, const StftConfig& cfg) {
  cfg.validate(wave.fs());
  const Index len = cfg.window_samples(wave.fs());
  require(wave.size() >= len, ErrorCode::Validation,
          "waveform shorter than one STFT window (" + std::to_string(wave.size()) + " < " +
              std::to_string(len) + " samples)");

  // Prefix count of invalid samples for O(1) window validity checks.
  std::vector<Index> bad(static_cast<std::size_t>(wave.size()) + 1, 0);
  for (Index i = 0; i < wave.size(); ++i) {
    bad[static_cast<std::size_t>(i) + 1] = bad[static_cast<std::size_t>(i)] + (wave.valid(i) ? 0 : 1);
  }

  SpectralPeakPicker picker(len, wave.fs(), cfg.bin_hz, cfg.band);
  std::vector<double> values;
  std::vector<bool> ok;
  for (Index start = 0; start + len <= wave.size(); start += cfg.stride_frames) {
    const bool clean = bad[static_cast<std::size_t>(start + len)] == bad[static_cast<std::size_t>(start)];
    std::optional<double> peak;
    if (clean) peak = picker.peak_hz(wave.samples().segment(start, len));
    values.push_back(peak ? 60.0 * *peak : 0.0);
    ok.push_back(peak.has_value());
  }
  return fill_per_frame(values, ok, len / 2, cfg.stride_frames, wave.size(), wave.fs(), cfg.band);
}

double hr_full(const Waveform& wave, const StftConfig& cfg) {
  require(wave.size() >= 2, ErrorCode::Validation, "hr_full needs at least 2 samples");
  require(cfg.bin_hz > 0 && cfg.band.lo < cfg.band.hi, ErrorCode::Validation, "invalid STFT config");
  SpectralPeakPicker picker(wave.size(), wave.fs(), cfg.bin_hz, cfg.band);
  const auto peak = picker.peak_hz(wave.samples(), wave.mask());
  require(peak.has_value(), ErrorCode::Degenerate, "waveform has no spectral content in band");
  return 60.0 * *peak;
}

HrSeries mask_unstable_gt(const HrSeries& hr, double threshold_bpm_per_s, double segment_s) {
  require(segment_s > 0, ErrorCode::Validation, "mask segment length must be positive");
  HrSeries out = hr;
  if (!std::isfinite(threshold_bpm_per_s)) return out;
  const Index lag = std::max<Index>(1, static_cast<Index>(std::llround(hr.fs)));
  const Index segment = std::max<Index>(1, static_cast<Index>(std::llround(segment_s * hr.fs)));
  const double seconds = static_cast<double>(lag) / hr.fs;
  const Index n = hr.size();
  std::vector<bool> unstable(static_cast<std::size_t>((n + segment - 1) / segment), false);
  for (Index i = 0; i + lag < n; ++i) {
    if (!hr.valid[i] || !hr.valid[i + lag]) continue;
    const double rate = std::abs(hr.bpm[i + lag] - hr.bpm[i]) / seconds;
    if (rate > threshold_bpm_per_s) {
      for (Index s = i / segment; s <= (i + lag) / segment; ++s) {
        unstable[static_cast<std::size_t>(s)] = true;
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (unstable[static_cast<std::size_t>(i / segment)]) out.valid[i] = false;
  }
  return out;
}

double mean_valid_hr(const HrSeries& hr) {
  double sum = 0;
  Index count = 0;
  for (Index i = std::max<Index>(0, hr.first_window); i <= hr.last_window && i < hr.size(); ++i) {
    if (!hr.valid[i]) continue;
    sum += hr.bpm[i];
    ++count;
  }
  require(count > 0, ErrorCode::Degenerate, "HR series has no valid windows");
  return sum / static_cast<double>(count);
}

double windowed_hr_sd(const HrSeries& hr, double window_s) {
  const Index begin = std::max<Index>(0, hr.first_window);
  const Index end = std::min<Index>(hr.size(), hr.last_window + 1);
  require(end > begin, ErrorCode::Degenerate, "HR series has no windows");
  const Index span = end - begin;
  const Index len = std::clamp<Index>(static_cast<Index>(std::llround(window_s * hr.fs)), 1, span);

  // Running sums over valid entries, centered on the window mean to limit cancellation.
  const double ref = mean_valid_hr(hr);
  double s1 = 0;
  double s2 = 0;
  Index count = 0;
  auto add = [&](Index i, int sign) {
    if (!hr.valid[i]) return;
    const double d = hr.bpm[i] - ref;
    s1 += sign * d;
    s2 += sign * d * d;
    count += sign;
  };
  for (Index i = begin; i < begin + len; ++i) add(i, +1);
  double total = 0;
  Index windows = 0;
  for (Index start = begin;; ++start) {
    if (count > 0) {
      const double m = s1 / static_cast<double>(count);
      total += std::sqrt(std::max(0.0, s2 / static_cast<double>(count) - m * m));
      ++windows;
    }
    if (start + len >= end) break;
    add(start, -1);
    add(start + len, +1);
  }
  require(windows > 0, ErrorCode::Degenerate, "no valid HR windows for SD");
  return total / static_cast<double>(windows);
}

DatasetStats dataset_stats(const std::vector<LabeledWaveform>& sessions, const StftConfig& cfg,
                           double sd_window_s) {
  require(!sessions.empty(), ErrorCode::Validation, "dataset has no sessions");
  DatasetStats out;
  std::vector<double> durations;
  std::vector<double> means;
  std::vector<double> sds;
  for (const auto& s : sessions) {
    const HrSeries hr = hr_series(s.wave, cfg);
    SessionStats row{s.session_id, static_cast<double>(s.wave.size()) / s.wave.fs(),
                     mean_valid_hr(hr), windowed_hr_sd(hr, sd_window_s)};
    durations.push_back(row.duration_s);
    means.push_back(row.hr_mean);
    sds.push_back(row.hr_sd);
    out.sessions.push_back(std::move(row));
  }
  out.duration_s = mean_ci(durations);
  out.hr_mean = mean_ci(means);
  out.hr_sd = mean_ci(sds);
  return out;
}

}  // namespace rppg
