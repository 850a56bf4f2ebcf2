#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rppg/types.hpp"

namespace rppg {

/// Linearly interpolate the rows of `src` at fractional row positions.
/// Positions outside [0, rows-1] are clamped to the end rows. Works for frame
/// stacks (one frame per row) and for column vectors alike.
template <typename Derived>
typename Derived::PlainObject interpolate_rows(
    const Eigen::MatrixBase<Derived>& src,
    const Eigen::Ref<const Eigen::VectorXd>& positions) {
  using Scalar = typename Derived::Scalar;
  typename Derived::PlainObject out(positions.size(), src.cols());
  const Index last = src.rows() - 1;
  for (Index j = 0; j < positions.size(); ++j) {
    const double p = std::clamp(positions[j], 0.0, static_cast<double>(last));
    const auto k = static_cast<Index>(std::floor(p));
    const double a = p - static_cast<double>(k);
    if (k >= last || a == 0.0) {
      out.row(j) = src.row(std::min(k, last));
    } else {
      out.row(j) = Scalar(1.0 - a) * src.row(k) + Scalar(a) * src.row(k + 1);
    }
  }
  return out;
}

/// Validity at fractional positions: a sample is valid only when both
/// flanking inputs are valid (or the single input when the position is exact).
inline Mask interpolate_mask(const Mask& mask,
                             const Eigen::Ref<const Eigen::VectorXd>& positions) {
  if (mask.size() == 0) return Mask();
  Mask out(positions.size());
  const Index last = mask.size() - 1;
  for (Index j = 0; j < positions.size(); ++j) {
    const double p = std::clamp(positions[j], 0.0, static_cast<double>(last));
    const auto k = static_cast<Index>(std::floor(p));
    if (k >= last || p == static_cast<double>(k)) {
      out[j] = mask[std::min(k, last)];
    } else {
      out[j] = mask[k] && mask[k + 1];
    }
  }
  return out;
}

/// Interpolate a waveform (values and mask) at fractional sample positions.
inline Waveform interpolate_waveform(const Waveform& wave,
                                     const Eigen::Ref<const Eigen::VectorXd>& positions,
                                     double fs) {
  return Waveform(interpolate_rows(wave.samples(), positions), fs,
                  interpolate_mask(wave.mask(), positions));
}

/// Interpolate a clip's frames at fractional frame positions.
template <typename Scalar>
VideoClipT<Scalar> interpolate_clip(const VideoClipT<Scalar>& clip,
                                    const Eigen::Ref<const Eigen::VectorXd>& positions,
                                    double fps) {
  FrameMatrix<Scalar> frames = interpolate_rows(clip.data(), positions);
  frames = frames.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return VideoClipT<Scalar>(std::move(frames), clip.height(), clip.width(), fps);
}

}  // namespace rppg
