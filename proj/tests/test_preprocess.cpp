#include <doctest.h>

#include "rppg/preprocess.hpp"
#include "support.hpp"

using namespace rppg;

namespace {

VideoClip ramp_clip(Index frames, Index h, Index w, double fps) {
  FrameMatrix<float> data(frames, h * w * 3);
  for (Index t = 0; t < frames; ++t) {
    for (Index c = 0; c < data.cols(); ++c) {
      data(t, c) = static_cast<float>(((t * 13 + c * 5) % 1000) / 999.0);
    }
  }
  return VideoClip(std::move(data), h, w, fps);
}

std::vector<Eigen::Vector2d> box_points(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y1}};
}

}  // namespace

TEST_CASE("padded landmark box is extended to a square around its center") {
  const PixelBox box = crop_region(box_points(100, 120, 200, 220), 480, 640, CropSpec{});
  // Padded x [95, 205], y [90, 225]; width grows to 135 about x = 150.
  CHECK(box.y0 == 90);
  CHECK(box.y1 == 225);
  CHECK(box.x0 == 82);
  CHECK(box.x1 == 217);
  CHECK(box.width() == box.height());
}

TEST_CASE("an already square padded box is not extended") {
  CropSpec spec{0.05, 0.05, 0.05, 64};
  const PixelBox box = crop_region(box_points(100, 100, 200, 200), 480, 640, spec);
  CHECK(box == PixelBox{95, 95, 205, 205});
}

TEST_CASE("degenerate landmark sets are rejected") {
  CHECK_THROWS_AS(crop_region({{10.0, 10.0}}, 100, 100, CropSpec{}), Error);
  CHECK_THROWS_AS(crop_region({}, 100, 100, CropSpec{}), Error);
  CHECK_THROWS_AS(crop_region(box_points(10, 10, 10, 50), 100, 100, CropSpec{}), Error);
}

TEST_CASE("boxes past the frame edge shift inward instead of padding") {
  const PixelBox box = crop_region(box_points(-20, 5, 40, 60), 100, 100, CropSpec{});
  CHECK(box.x0 >= 0);
  CHECK(box.y0 >= 0);
  CHECK(box.x1 <= 100);
  CHECK(box.y1 <= 100);
  CHECK(box.width() == box.height());

  // Larger than the frame: shrinks to the short side.
  const PixelBox big = crop_region(box_points(-50, -50, 300, 300), 80, 120, CropSpec{});
  CHECK(big.width() == 80);
  CHECK(big.height() == 80);
  CHECK(big.y0 == 0);
}

TEST_CASE("random landmark sets always give a square in-frame region") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> coord(-40, 200);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Eigen::Vector2d> pts;
    const int n = 2 + static_cast<int>(gen() % 60);
    for (int i = 0; i < n; ++i) pts.emplace_back(coord(gen), coord(gen));
    const Index h = 40 + static_cast<Index>(gen() % 200);
    const Index w = 40 + static_cast<Index>(gen() % 200);
    const PixelBox box = crop_region(pts, h, w, CropSpec{});
    CHECK(box.width() == box.height());
    CHECK(box.width() >= 1);
    CHECK(box.x0 >= 0);
    CHECK(box.y0 >= 0);
    CHECK(box.x1 <= w);
    CHECK(box.y1 <= h);
  }
}

TEST_CASE("bicubic resize at unit scale copies pixels") {
  const VideoClip clip = ramp_clip(1, 20, 20, 30);
  const PixelBox box{3, 4, 11, 12};
  const Eigen::RowVectorXf out = resize_bicubic(clip.frame(0), 20, 20, box, 8);
  for (Index v = 0; v < 8; ++v) {
    for (Index u = 0; u < 8; ++u) {
      for (int c = 0; c < 3; ++c) {
        CHECK(out[(v * 8 + u) * 3 + c] == doctest::Approx(clip.at(0, 4 + v, 3 + u, c)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("bicubic resize reproduces a linear gradient away from the border") {
  const Index n = 40;
  FrameMatrix<float> data(1, n * n * 3);
  for (Index y = 0; y < n; ++y) {
    for (Index x = 0; x < n; ++x) {
      for (int c = 0; c < 3; ++c) data(0, (y * n + x) * 3 + c) = static_cast<float>(0.01 * x + 0.005 * y + 0.1);
    }
  }
  const PixelBox box{8, 8, 32, 32};
  const Index out_size = 64;
  const Eigen::RowVectorXf out = resize_bicubic(data.row(0), n, n, box, out_size);
  const double scale = 24.0 / out_size;
  for (Index v = 0; v < out_size; ++v) {
    for (Index u = 0; u < out_size; ++u) {
      const double sx = 8 + (u + 0.5) * scale - 0.5;
      const double sy = 8 + (v + 0.5) * scale - 0.5;
      CHECK(out[(v * out_size + u) * 3] == doctest::Approx(0.01 * sx + 0.005 * sy + 0.1).epsilon(1e-5));
    }
  }
}

TEST_CASE("crop_face output is out_size square and within [0, 1]") {
  std::mt19937_64 gen(9);
  FrameMatrix<float> data(1, 50 * 70 * 3);
  std::bernoulli_distribution bit(0.5);
  for (Index c = 0; c < data.cols(); ++c) data(0, c) = bit(gen) ? 1.0f : 0.0f;  // worst case for overshoot
  const VideoClip clip(data, 50, 70, 30.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(0, 60);
    const auto out = crop_face(clip, 0, box_points(u(gen), u(gen) * 0.5, 65, 48), CropSpec{});
    CHECK(out.size() == 64 * 64 * 3);
    CHECK(out.minCoeff() >= 0.0f);
    CHECK(out.maxCoeff() <= 1.0f);
  }
}

TEST_CASE("frame averaging takes group means and drops the tail") {
  const VideoClip clip = ramp_clip(272, 4, 4, 90.0);
  const VideoClip out = average_downsample_fps(clip, 3);
  CHECK(out.frames() == 90);
  CHECK(out.fps() == doctest::Approx(30.0));
  for (Index t = 0; t < out.frames(); ++t) {
    for (Index c = 0; c < out.data().cols(); ++c) {
      const double mean =
          (double(clip.data()(3 * t, c)) + clip.data()(3 * t + 1, c) + clip.data()(3 * t + 2, c)) / 3.0;
      CHECK(std::abs(out.data()(t, c) - mean) <= 1e-7);
    }
  }
  // Mean of means equals the mean of every consumed frame.
  const double consumed = clip.data().topRows(270).cast<double>().mean();
  CHECK(out.data().cast<double>().mean() == doctest::Approx(consumed).epsilon(1e-7));
}

TEST_CASE("constant frames 0, 0.3, 0.6 average to 0.3") {
  FrameMatrix<float> data(3, 12);
  data.row(0).setConstant(0.0f);
  data.row(1).setConstant(0.3f);
  data.row(2).setConstant(0.6f);
  const VideoClip out = average_downsample_fps(VideoClip(data, 2, 2, 90.0), 3);
  CHECK(out.frames() == 1);
  CHECK(out.data()(0, 0) == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("averaging factor 1 is the identity") {
  const VideoClip clip = ramp_clip(10, 3, 3, 30.0);
  CHECK(average_downsample_fps(clip, 1).data() == clip.data());
}

TEST_CASE("preprocess_session averages 90 fps down before cropping") {
  const VideoClip clip = ramp_clip(100, 32, 40, 90.0);
  LandmarkTrack track;
  track.frames.assign(100, box_points(8, 6, 30, 28));
  const VideoClip out = preprocess_session(clip, track, CropSpec{}, 30.0);
  CHECK(out.frames() == 33);
  CHECK(out.height() == 64);
  CHECK(out.width() == 64);
  CHECK(out.fps() == doctest::Approx(30.0));

  // Same result as averaging, then cropping each averaged frame.
  const VideoClip avg = average_downsample_fps(clip, 3);
  const auto first = crop_face(avg, 5, track.frames[15], CropSpec{});
  CHECK((out.frame(5) - first).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("preprocess_session at the native rate only crops") {
  const VideoClip clip = ramp_clip(12, 32, 32, 30.0);
  const VideoClip out = preprocess_session(clip, std::nullopt, CropSpec{}, 30.0);
  CHECK(out.frames() == 12);
  CHECK(out.height() == 64);
}

TEST_CASE("preprocess_session rejects upsampling and non-integer ratios") {
  const VideoClip clip = ramp_clip(12, 16, 16, 25.0);
  CHECK_THROWS_AS(preprocess_session(clip, std::nullopt, CropSpec{}, 30.0), Error);
  const VideoClip clip2 = ramp_clip(12, 16, 16, 50.0);
  CHECK_THROWS_AS(preprocess_session(clip2, std::nullopt, CropSpec{}, 30.0), Error);
}
