#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rppg/error.hpp"

namespace rppg {

using Index = Eigen::Index;
using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Row-major frame stack: one row per frame, pixels laid out (y, x, channel).
template <typename Scalar>
using FrameMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A time-ordered stack of RGB frames with intensities in [0, 1].
template <typename Scalar>
class VideoClipT {
 public:
  using Matrix = FrameMatrix<Scalar>;
  using PixelMatrix =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

  VideoClipT(Matrix frames, Index height, Index width, double fps)
      : data_(std::move(frames)), height_(height), width_(width), fps_(fps) {
    require(data_.rows() >= 1, ErrorCode::Validation, "video clip has no frames");
    require(height_ >= 1 && width_ >= 1, ErrorCode::Validation,
            "video clip has an empty frame size");
    require(data_.cols() == height_ * width_ * 3, ErrorCode::Validation,
            "video frame row length does not match H*W*3");
    require(std::isfinite(fps_) && fps_ > 0, ErrorCode::Validation,
            "video fps must be positive");
    require(data_.allFinite() && data_.minCoeff() >= Scalar(0) &&
                data_.maxCoeff() <= Scalar(1),
            ErrorCode::Validation, "video intensities must lie in [0, 1]");
  }

  Index frames() const { return data_.rows(); }
  Index height() const { return height_; }
  Index width() const { return width_; }
  double fps() const { return fps_; }
  const Matrix& data() const { return data_; }

  auto frame(Index t) const { return data_.row(t); }

  Scalar at(Index t, Index y, Index x, int channel) const {
    return data_(t, (y * width_ + x) * 3 + channel);
  }

  /// Frame t viewed as an (H*W) x 3 pixel table.
  Eigen::Map<const PixelMatrix> pixels(Index t) const {
    return Eigen::Map<const PixelMatrix>(data_.row(t).data(),
                                         height_ * width_, 3);
  }

  /// Per-frame spatial mean of each channel, T x 3.
  Eigen::MatrixX3d mean_rgb() const {
    Eigen::MatrixX3d out(frames(), 3);
    for (Index t = 0; t < frames(); ++t) {
      out.row(t) = pixels(t).template cast<double>().colwise().mean();
    }
    return out;
  }

  /// Frames [start, start + count) as a new clip.
  VideoClipT slice(Index start, Index count) const {
    require(start >= 0 && count >= 1 && start + count <= frames(),
            ErrorCode::Validation, "video slice out of range");
    return VideoClipT(data_.middleRows(start, count), height_, width_, fps_);
  }

 private:
  Matrix data_;
  Index height_;
  Index width_;
  double fps_;
};

using VideoClip = VideoClipT<float>;

/// Uniformly sampled 1-D signal with an optional per-sample validity mask.
/// An empty mask means every sample is valid.
class Waveform {
 public:
  Waveform(Eigen::VectorXd samples, double fs, Mask mask = Mask())
      : samples_(std::move(samples)), fs_(fs), mask_(std::move(mask)) {
    require(samples_.size() >= 1, ErrorCode::Validation, "waveform is empty");
    require(std::isfinite(fs_) && fs_ > 0, ErrorCode::Validation,
            "waveform sample rate must be positive");
    require(mask_.size() == 0 || mask_.size() == samples_.size(),
            ErrorCode::Validation, "waveform mask length differs from samples");
  }

  Index size() const { return samples_.size(); }
  double fs() const { return fs_; }
  const Eigen::VectorXd& samples() const { return samples_; }
  double operator[](Index i) const { return samples_[i]; }

  bool has_mask() const { return mask_.size() != 0; }
  const Mask& mask() const { return mask_; }
  bool valid(Index i) const { return !has_mask() || mask_[i]; }

  /// Mask with every entry materialized.
  Mask validity() const {
    return has_mask() ? mask_ : Mask::Constant(size(), true);
  }

  Waveform head(Index count) const {
    require(count >= 1 && count <= size(), ErrorCode::Validation,
            "waveform head out of range");
    return Waveform(samples_.head(count), fs_,
                    has_mask() ? Mask(mask_.head(count)) : Mask());
  }

  Waveform segment(Index start, Index count) const {
    require(start >= 0 && count >= 1 && start + count <= size(),
            ErrorCode::Validation, "waveform segment out of range");
    return Waveform(samples_.segment(start, count), fs_,
                    has_mask() ? Mask(mask_.segment(start, count)) : Mask());
  }

 private:
  Eigen::VectorXd samples_;
  double fs_;
  Mask mask_;
};

/// Frequency bounds in Hz used for spectral peak picking.
struct Band {
  double lo = 2.0 / 3.0;
  double hi = 3.0;
};

/// Heart rate in BPM for every frame of a waveform. Entries whose index lies in
/// [first_window, last_window] are STFT window centers; entries outside were
/// filled from the nearest window. Invalid entries never enter metric sums.
struct HrSeries {
  Eigen::VectorXd bpm;
  Mask valid;
  double fs = 30.0;
  Band band;
  Index first_window = 0;
  Index last_window = -1;

  Index size() const { return bpm.size(); }

  /// A series where every entry is its own window and valid.
  static HrSeries from_values(Eigen::VectorXd values, double fs = 30.0) {
    HrSeries out;
    const Index n = values.size();
    out.bpm = std::move(values);
    out.valid = Mask::Constant(n, true);
    out.fs = fs;
    out.first_window = 0;
    out.last_window = n - 1;
    return out;
  }
};

/// Per-frame landmark points in pixel coordinates. Boxes are stored as their
/// two corner points.
struct LandmarkTrack {
  std::vector<std::vector<Eigen::Vector2d>> frames;

  Index size() const { return static_cast<Index>(frames.size()); }
};

/// One chunk of estimator output starting at frame `start`.
struct ChunkPrediction {
  Index start = 0;
  Eigen::VectorXd values;
};

struct SessionManifest {
  std::string session_id;
  std::string subject_id;
  std::filesystem::path frames_dir;
  double fps = 0;
  std::filesystem::path gt_waveform;
  double gt_fs = 0;
  std::optional<std::filesystem::path> landmarks;
};

struct Session {
  VideoClip video;
  Waveform gt;
  std::optional<LandmarkTrack> landmarks;
};

}  // namespace rppg
