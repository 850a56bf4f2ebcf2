#pragma once

#include <optional>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

/// Face crop geometry: padding fractions of the landmark box and the output
/// edge length in pixels.
struct CropSpec {
  double pad_top = 0.30;
  double pad_sides = 0.05;
  double pad_bottom = 0.05;
  Index out_size = 64;

  void validate() const;
};

/// Half-open integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelBox {
  Index x0 = 0;
  Index y0 = 0;
  Index x1 = 0;
  Index y1 = 0;

  Index width() const { return x1 - x0; }
  Index height() const { return y1 - y0; }
  bool operator==(const PixelBox&) const = default;
};

/// Square crop region for one frame: landmark extremes padded, the shorter
/// side extended symmetrically, edges rounded outward (floor/ceil), then the
/// max side trimmed until square, shrunk to fit and shifted inside the image.
PixelBox crop_region(const std::vector<Eigen::Vector2d>& points, Index image_height,
                     Index image_width, const CropSpec& spec);

/// Bicubic (Keys, a = -0.5) resample of `box` from one frame to
/// out_size x out_size, clamped to [0, 1]. `frame` is one H*W*3 row.
Eigen::RowVectorXf resize_bicubic(const Eigen::Ref<const Eigen::RowVectorXf>& frame,
                                  Index height, Index width, const PixelBox& box,
                                  Index out_size);

/// Crop frame t of `clip` around `points` and resize to spec.out_size.
Eigen::RowVectorXf crop_face(const VideoClip& clip, Index t,
                             const std::vector<Eigen::Vector2d>& points,
                             const CropSpec& spec);

/// Mean of each group of `factor` consecutive frames; trailing remainder
/// frames are dropped and the frame rate divides by `factor`.
VideoClip average_downsample_fps(const VideoClip& clip, Index factor);

/// Frame-rate averaging (when fps > fps_target) followed by per-frame face
/// cropping. Each averaged frame uses the landmarks of the first frame in its
/// group. Without landmarks the whole frame is the face box.
VideoClip preprocess_session(const VideoClip& clip,
                             const std::optional<LandmarkTrack>& landmarks,
                             const CropSpec& spec, double fps_target);

}  // namespace rppg
