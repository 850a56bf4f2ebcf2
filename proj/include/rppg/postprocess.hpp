#pragma once

#include <limits>
#include <optional>
#include <string>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "rppg/summary.hpp"
#include "rppg/types.hpp"

namespace rppg {

/// Sliding STFT settings for heart-rate extraction.
struct StftConfig {
  double window_s = 10.0;
  Index stride_frames = 1;
  double bin_hz = 0.001;
  Band band;

  void validate(double fs) const;
  Index window_samples(double fs) const;

  static StftConfig w10() { return StftConfig{}; }
  static StftConfig w30() {
    StftConfig c;
    c.window_s = 30.0;
    return c;
  }
};

/// Periodic Hann window: w[k] = 0.5 - 0.5 cos(2 pi k / n).
Eigen::VectorXd periodic_hann(Index n);

/// Picks the dominant in-band frequency of mean-removed, Hann-tapered,
/// zero-padded segments of one fixed length. Reuses one FFT plan.
class SpectralPeakPicker {
 public:
  SpectralPeakPicker(Index segment_len, double fs, double bin_hz, Band band);

  Index fft_size() const { return nfft_; }
  double bin_width() const { return fs_ / static_cast<double>(nfft_); }

  /// Peak frequency in Hz, or nullopt when the segment is constant. Masked
  /// samples (false in `valid`) are zeroed after mean removal.
  std::optional<double> peak_hz(const Eigen::Ref<const Eigen::VectorXd>& segment,
                                const Mask& valid = Mask());

 private:
  Index segment_len_;
  double fs_;
  Index nfft_;
  Index bin_lo_;
  Index bin_hi_;
  Eigen::VectorXd taper_;
  std::vector<double> padded_;
  std::vector<std::complex<double>> spectrum_;
  Eigen::FFT<double> fft_;
};

/// Zero-padded length giving a bin no wider than `bin_hz` for `segment_len`
/// samples: a multiple of ceil(fs / bin_hz).
Index padded_fft_size(Index segment_len, double fs, double bin_hz);

/// Hann-weighted overlap-add of chunk predictions. Output = weighted sum /
/// max(weight, 1e-6); samples with accumulated weight below 1e-3 are masked.
Waveform overlap_add(const std::vector<ChunkPrediction>& chunks, Index chunk_len,
                     Index total_len, double fs);

inline constexpr double kOlaEpsilon = 1e-6;
inline constexpr double kOlaMaskWeight = 1e-3;

/// Per-frame heart rate from a sliding STFT. Each window's HR sits at its
/// center frame; frames outside the covered range take the nearest window.
/// Windows touching masked samples or holding a constant signal are invalid.
HrSeries hr_series(const Waveform& wave, const StftConfig& cfg);

/// One heart rate from a single transform over the whole waveform.
double hr_full(const Waveform& wave, const StftConfig& cfg);

/// Invalidate every `segment_s` segment (fixed grid from frame 0) touched by a
/// per-second HR change above `threshold_bpm_per_s`.
HrSeries mask_unstable_gt(const HrSeries& hr, double threshold_bpm_per_s = 7.0,
                          double segment_s = 10.0);

/// Mean of the valid window entries of a series.
double mean_valid_hr(const HrSeries& hr);

/// Mean over sliding windows of `window_s` (stride one entry) of the HR
/// standard deviation inside each window. Series shorter than one window
/// use a single window.
double windowed_hr_sd(const HrSeries& hr, double window_s = 60.0);

struct SessionStats {
  std::string session_id;
  double duration_s = 0;
  double hr_mean = 0;
  double hr_sd = 0;
};

struct DatasetStats {
  std::vector<SessionStats> sessions;
  MeanCi duration_s;
  MeanCi hr_mean;
  MeanCi hr_sd;
};

struct LabeledWaveform {
  std::string session_id;
  Waveform wave;
};

/// Duration, mean HR and 60 s-window HR SD per session, each summarized
/// across sessions with a 95% interval.
DatasetStats dataset_stats(const std::vector<LabeledWaveform>& sessions,
                           const StftConfig& cfg = StftConfig::w10(),
                           double sd_window_s = 60.0);

}  // namespace rppg
