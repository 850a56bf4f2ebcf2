#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rppg/types.hpp"

namespace rppg {

/// Extracts a pulse signal of one value per frame from a video chunk.
using PulseExtractor = std::function<Eigen::VectorXd(const VideoClip&)>;

struct Estimator {
  std::string name;
  Index chunk_len = 136;
  Index stride = 68;
  PulseExtractor extract;

  void validate() const;
};

/// Named estimator: "green", "chrom" or "pos".
Estimator make_estimator(const std::string& name, Index chunk_len = 136, Index stride = 68);

/// Spatial mean of the green channel per frame, mean removed.
Eigen::VectorXd estimate_green(const VideoClip& chunk);

struct ChromResult {
  Eigen::VectorXd values;
  /// True when X alone was used because Y had no variance or X and Y were
  /// collinear (the combined signal vanished).
  bool used_fallback = false;
};

/// Chrominance method over the whole chunk: channels normalized by their
/// temporal mean, X = 3R - 2G, Y = 1.5R + G - 1.5B, S = X - (sd X / sd Y) Y.
ChromResult estimate_chrom_detail(const VideoClip& chunk);
Eigen::VectorXd estimate_chrom(const VideoClip& chunk);

/// Plane-orthogonal-to-skin method with 1.6 s sliding windows overlap-added.
Eigen::VectorXd estimate_pos(const VideoClip& chunk);

/// Zero mean, unit variance; a constant input maps to zeros.
Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& values);

/// Chunk starts 0, stride, 2*stride, ... while start + chunk_len <= T; each
/// chunk's output is standardized. Tail frames past the last chunk are not
/// predicted.
std::vector<ChunkPrediction> run_chunked(const Estimator& estimator, const VideoClip& clip);

/// Predictions file: {chunk_len, stride, fps, chunks: [{start, values}]}.
struct PredictionSet {
  Index chunk_len = 136;
  Index stride = 68;
  double fps = 30.0;
  std::vector<ChunkPrediction> chunks;
  std::vector<std::string> warnings;

  /// One past the last predicted frame.
  Index covered_length() const;
};

void save_predictions(const std::filesystem::path& path, const PredictionSet& set);

/// Load and validate external predictions; chunks come back ordered by start.
/// Wrong-length chunks are errors; starts off the stride grid are accepted
/// with a warning.
PredictionSet load_external_predictions(const std::filesystem::path& path,
                                        const std::string& session_id = "");

}  // namespace rppg
