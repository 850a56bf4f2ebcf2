#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rppg/estimate.hpp"
#include "rppg/metrics.hpp"
#include "rppg/postprocess.hpp"

namespace rppg {

/// Postprocessing variant: 10 s or 30 s sliding STFT, or one transform over
/// the whole session.
enum class Variant { W10, W30, Full };

Variant parse_variant(const std::string& name);
const char* to_string(Variant v);

struct EvalConfig {
  Variant variant = Variant::W10;
  double bin_hz = 0.001;
  Band band;
  Index stride_frames = 1;
  /// Per-second GT HR change that invalidates a segment; infinity disables.
  double unstable_threshold = std::numeric_limits<double>::infinity();
  double unstable_segment_s = 10.0;
  /// Lag search for r_wave: 0 within a dataset, 1 s across datasets.
  double max_lag_s = 0.0;
  MeMode me_mode = MeMode::Signed;

  StftConfig stft() const;
  nlohmann::json to_json() const;
};

struct EvalInput {
  std::string session_id;
  PredictionSet predictions;
  Waveform gt;  // any rate; resampled to the prediction fps
};

struct SessionEvaluation {
  SessionMetrics metrics;
  HrSeries pred_hr;
  HrSeries gt_hr;
};

/// Overlap-add the chunks, align the ground truth, extract HR under the
/// variant and score the session.
SessionEvaluation evaluate_session(const EvalInput& input, const EvalConfig& config);

struct DatasetEvaluation {
  MetricsReport report;
  std::vector<std::string> failures;  // "<session>: <message>"
};

/// Sessions are evaluated on up to `jobs` threads; the report does not depend
/// on `jobs`. A failing session throws unless `keep_going`, in which case it
/// is listed in `failures` and left out of the report.
DatasetEvaluation evaluate_dataset(const std::vector<EvalInput>& inputs, const EvalConfig& config,
                                   int jobs = 1, bool keep_going = false);

/// Chunked estimation over a preprocessed clip.
PredictionSet estimate_clip(const Estimator& estimator, const VideoClip& clip);

/// Run fn(i) for i in [0, count) on up to `jobs` threads. The first exception
/// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rppg
