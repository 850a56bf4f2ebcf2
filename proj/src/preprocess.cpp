#include "rppg/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace rppg {

void CropSpec::validate() const {
  require(pad_top >= 0 && pad_sides >= 0 && pad_bottom >= 0, ErrorCode::Validation,
          "crop padding fractions must be non-negative");
  require(out_size >= 8, ErrorCode::Validation, "crop out_size must be at least 8");
}

namespace {

// Fit [lo, lo + side) into [0, limit) by shrinking symmetrically, then shifting.
void fit_interval(Index& lo, Index& hi, Index side, Index limit) {
  if (hi - lo > side) {
    const Index excess = (hi - lo) - side;
    lo += excess / 2;
    hi = lo + side;
  }
  if (lo < 0) {
    hi -= lo;
    lo = 0;
  }
  if (hi > limit) {
    lo -= hi - limit;
    hi = limit;
  }
}

}  // namespace

PixelBox crop_region(const std::vector<Eigen::Vector2d>& points, Index image_height,
                     Index image_width, const CropSpec& spec) {
  spec.validate();
  require(!points.empty(), ErrorCode::Degenerate, "crop needs at least one landmark");
  require(image_height >= 1 && image_width >= 1, ErrorCode::Validation, "crop on an empty frame");

  Eigen::Vector2d lo = points.front();
  Eigen::Vector2d hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double w = hi.x() - lo.x();
  const double h = hi.y() - lo.y();
  require(w > 0 && h > 0, ErrorCode::Degenerate, "landmark box has zero area");

  double x0 = lo.x() - spec.pad_sides * w;
  double x1 = hi.x() + spec.pad_sides * w;
  double y0 = lo.y() - spec.pad_top * h;
  double y1 = hi.y() + spec.pad_bottom * h;
  const double pw = x1 - x0;
  const double ph = y1 - y0;
  if (pw < ph) {
    const double cx = 0.5 * (x0 + x1);
    x0 = cx - 0.5 * ph;
    x1 = cx + 0.5 * ph;
  } else if (ph < pw) {
    const double cy = 0.5 * (y0 + y1);
    y0 = cy - 0.5 * pw;
    y1 = cy + 0.5 * pw;
  }

  PixelBox box{static_cast<Index>(std::floor(x0)), static_cast<Index>(std::floor(y0)),
               static_cast<Index>(std::ceil(x1)), static_cast<Index>(std::ceil(y1))};
  // Rounding outward can break squareness by a pixel or two; trim the max side.
  while (box.width() > box.height()) --box.x1;
  while (box.height() > box.width()) --box.y1;

  const Index side = std::min({box.width(), image_width, image_height});
  fit_interval(box.x0, box.x1, side, image_width);
  fit_interval(box.y0, box.y1, side, image_height);
  return box;
}

namespace {

// Keys cubic convolution kernel weights for fractional offset t in [0, 1).
std::array<double, 4> cubic_weights(double t) {
  constexpr double a = -0.5;
  auto near = [](double x) { return ((a + 2) * x - (a + 3)) * x * x + 1; };
  auto far = [](double x) { return ((a * x - 5 * a) * x + 8 * a) * x - 4 * a; };
  return {far(1 + t), near(t), near(1 - t), far(2 - t)};
}

}  // namespace

Eigen::RowVectorXf resize_bicubic(const Eigen::Ref<const Eigen::RowVectorXf>& frame,
                                  Index height, Index width, const PixelBox& box,
                                  Index out_size) {
  require(frame.size() == height * width * 3, ErrorCode::Validation,
          "frame size does not match dimensions");
  require(box.width() >= 1 && box.height() >= 1, ErrorCode::Degenerate, "empty crop box");
  Eigen::RowVectorXf out(out_size * out_size * 3);
  const double sy = static_cast<double>(box.height()) / static_cast<double>(out_size);
  const double sx = static_cast<double>(box.width()) / static_cast<double>(out_size);

  std::vector<std::array<Index, 4>> xi(out_size);
  std::vector<std::array<double, 4>> xw(out_size);
  for (Index u = 0; u < out_size; ++u) {
    const double src = static_cast<double>(box.x0) + (static_cast<double>(u) + 0.5) * sx - 0.5;
    const double base = std::floor(src);
    xw[u] = cubic_weights(src - base);
    for (int k = 0; k < 4; ++k) {
      xi[u][k] = std::clamp<Index>(static_cast<Index>(base) - 1 + k, 0, width - 1);
    }
  }

  for (Index v = 0; v < out_size; ++v) {
    const double src = static_cast<double>(box.y0) + (static_cast<double>(v) + 0.5) * sy - 0.5;
    const double base = std::floor(src);
    const auto yw = cubic_weights(src - base);
    std::array<Index, 4> yi{};
    for (int k = 0; k < 4; ++k) {
      yi[k] = std::clamp<Index>(static_cast<Index>(base) - 1 + k, 0, height - 1);
    }
    for (Index u = 0; u < out_size; ++u) {
      std::array<double, 3> acc{0, 0, 0};
      for (int ky = 0; ky < 4; ++ky) {
        for (int kx = 0; kx < 4; ++kx) {
          const double w = yw[ky] * xw[u][kx];
          const Index idx = (yi[ky] * width + xi[u][kx]) * 3;
          for (int c = 0; c < 3; ++c) acc[c] += w * frame[idx + c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        out[(v * out_size + u) * 3 + c] = static_cast<float>(std::clamp(acc[c], 0.0, 1.0));
      }
    }
  }
  return out;
}

Eigen::RowVectorXf crop_face(const VideoClip& clip, Index t,
                             const std::vector<Eigen::Vector2d>& points,
                             const CropSpec& spec) {
  const PixelBox box = crop_region(points, clip.height(), clip.width(), spec);
  return resize_bicubic(clip.frame(t), clip.height(), clip.width(), box, spec.out_size);
}

VideoClip average_downsample_fps(const VideoClip& clip, Index factor) {
  require(factor >= 1, ErrorCode::Validation, "averaging factor must be at least 1");
  require(clip.frames() >= factor, ErrorCode::Validation,
          "clip is shorter than one averaging group");
  if (factor == 1) return clip;
  const Index out_frames = clip.frames() / factor;
  FrameMatrix<float> out(out_frames, clip.data().cols());
  for (Index i = 0; i < out_frames; ++i) {
    out.row(i) = clip.data()
                     .middleRows(i * factor, factor)
                     .cast<double>()
                     .colwise()
                     .mean()
                     .cast<float>();
  }
  return VideoClip(std::move(out), clip.height(), clip.width(),
                   clip.fps() / static_cast<double>(factor));
}

VideoClip preprocess_session(const VideoClip& clip,
                             const std::optional<LandmarkTrack>& landmarks,
                             const CropSpec& spec, double fps_target) {
  spec.validate();
  require(fps_target > 0, ErrorCode::Validation, "target fps must be positive");
  const double ratio = clip.fps() / fps_target;
  const double rounded = std::round(ratio);
  require(rounded >= 1 && std::abs(ratio - rounded) <= 1e-6 * ratio, ErrorCode::Validation,
          "source fps must be an integer multiple of the target fps");
  const auto factor = static_cast<Index>(rounded);
  if (landmarks) {
    require(landmarks->size() == clip.frames(), ErrorCode::Validation,
            "landmark frame count does not match the video");
  }

  const VideoClip averaged = average_downsample_fps(clip, factor);
  const std::vector<Eigen::Vector2d> whole_frame = {
      Eigen::Vector2d(0, 0),
      Eigen::Vector2d(static_cast<double>(clip.width()), static_cast<double>(clip.height()))};
  const CropSpec no_padding{0, 0, 0, spec.out_size};

  FrameMatrix<float> out(averaged.frames(), spec.out_size * spec.out_size * 3);
  for (Index t = 0; t < averaged.frames(); ++t) {
    if (landmarks) {
      out.row(t) = crop_face(averaged, t, landmarks->frames[static_cast<std::size_t>(t * factor)],
                             spec);
    } else {
      out.row(t) = crop_face(averaged, t, whole_frame, no_padding);
    }
  }
  return VideoClip(std::move(out), spec.out_size, spec.out_size, averaged.fps());
}

}  // namespace rppg
