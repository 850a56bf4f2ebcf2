#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "rppg/types.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

inline Eigen::VectorXd sine(rppg::Index n, double hz, double fs, double amp = 1.0, double phase = 0.0) {
  Eigen::VectorXd v(n);
  for (rppg::Index i = 0; i < n; ++i) v[i] = amp * std::sin(2 * kPi * hz * i / fs + phase);
  return v;
}

// Hann-tapered, mean-removed power at an arbitrary frequency by direct
// summation. Independent of any FFT.
inline double dtft_power(const Eigen::VectorXd& x, double hz, double fs) {
  const rppg::Index n = x.size();
  const double mean = x.mean();
  std::complex<double> acc = 0;
  for (rppg::Index k = 0; k < n; ++k) {
    const double w = 0.5 - 0.5 * std::cos(2 * kPi * k / n);
    acc += (x[k] - mean) * w * std::polar(1.0, -2 * kPi * hz * k / fs);
  }
  return std::norm(acc);
}

// Frequency of maximal power over a uniform grid [lo, hi] with `step` spacing.
inline double dense_peak_hz(const Eigen::VectorXd& x, double fs, double lo, double hi, double step) {
  double best = lo;
  double best_p = -1;
  for (double f = lo; f <= hi + 1e-12; f += step) {
    const double p = dtft_power(x, f, fs);
    if (p > best_p) {
      best_p = p;
      best = f;
    }
  }
  return best;
}

// Solid-color clip whose green channel follows `green`.
inline rppg::VideoClip green_clip(const Eigen::VectorXd& green, double fps, rppg::Index side = 4,
                                  double r = 0.5, double b = 0.4) {
  rppg::FrameMatrix<float> data(green.size(), side * side * 3);
  for (rppg::Index t = 0; t < green.size(); ++t) {
    for (rppg::Index p = 0; p < side * side; ++p) {
      data(t, p * 3 + 0) = static_cast<float>(r);
      data(t, p * 3 + 1) = static_cast<float>(green[t]);
      data(t, p * 3 + 2) = static_cast<float>(b);
    }
  }
  return rppg::VideoClip(std::move(data), side, side, fps);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           (name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
