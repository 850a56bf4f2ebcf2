#include "rppg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "rppg/core.hpp"

namespace rppg {

Variant parse_variant(const std::string& name) {
  if (name == "w10") return Variant::W10;
  if (name == "w30") return Variant::W30;
  if (name == "wfull") return Variant::Full;
  fail(ErrorCode::Validation, "unknown postprocess variant '" + name + "' (w10, w30, wfull)");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::W10: return "w10";
    case Variant::W30: return "w30";
    case Variant::Full: return "wfull";
  }
  return "w10";
}

StftConfig EvalConfig::stft() const {
  StftConfig c = variant == Variant::W30 ? StftConfig::w30() : StftConfig::w10();
  c.bin_hz = bin_hz;
  c.band = band;
  c.stride_frames = stride_frames;
  return c;
}

nlohmann::json EvalConfig::to_json() const {
  const StftConfig c = stft();
  return {{"variant", to_string(variant)},
          {"window_s", variant == Variant::Full ? nlohmann::json(nullptr) : nlohmann::json(c.window_s)},
          {"stride_frames", stride_frames},
          {"bin_hz", bin_hz},
          {"band_hz", {band.lo, band.hi}},
          {"unstable_threshold_bpm_per_s",
           std::isfinite(unstable_threshold) ? nlohmann::json(unstable_threshold) : nlohmann::json(nullptr)},
          {"unstable_segment_s", unstable_segment_s},
          {"max_lag_s", max_lag_s},
          {"me_mode", me_mode == MeMode::Signed ? "signed" : "absolute"}};
}

SessionEvaluation evaluate_session(const EvalInput& input, const EvalConfig& config) {
  const PredictionSet& preds = input.predictions;
  require(!preds.chunks.empty(), ErrorCode::Validation, "no prediction chunks");
  const Waveform pred_full = overlap_add(preds.chunks, preds.chunk_len, preds.covered_length(), preds.fps);
  const Waveform gt_full = resample_waveform(input.gt, preds.fps);
  const auto [gt, pred] = truncate_to_match(gt_full, pred_full);

  SessionEvaluation out;
  if (config.variant == Variant::Full) {
    out.pred_hr = HrSeries::from_values(Eigen::VectorXd::Constant(1, hr_full(pred, config.stft())), pred.fs());
    out.gt_hr = HrSeries::from_values(Eigen::VectorXd::Constant(1, hr_full(gt, config.stft())), gt.fs());
  } else {
    const StftConfig cfg = config.stft();
    out.pred_hr = hr_series(pred, cfg);
    out.gt_hr = mask_unstable_gt(hr_series(gt, cfg), config.unstable_threshold, config.unstable_segment_s);
  }
  const HrErrors e = hr_errors(out.pred_hr, out.gt_hr);
  const LagCorrelation lc = r_wave(pred, gt, config.max_lag_s);
  out.metrics = SessionMetrics{input.session_id, e.me, e.mae, e.rmse, lc.r, e.n_windows, lc.lag};
  return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<int>(jobs, 1, 256));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

DatasetEvaluation evaluate_dataset(const std::vector<EvalInput>& inputs, const EvalConfig& config,
                                   int jobs, bool keep_going) {
  require(!inputs.empty(), ErrorCode::Validation, "evaluation dataset has no sessions");
  std::vector<std::optional<SessionEvaluation>> results(inputs.size());
  std::vector<std::string> errors(inputs.size());
  std::vector<ErrorCode> codes(inputs.size(), ErrorCode::Validation);
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    try {
      results[i] = evaluate_session(inputs[i], config);
    } catch (const Error& e) {
      errors[i] = e.what();
      codes[i] = e.code();
    }
  });

  DatasetEvaluation out;
  std::vector<SessionMetrics> metrics;
  std::vector<std::pair<HrSeries, HrSeries>> pooled;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!results[i]) {
      const std::string msg = inputs[i].session_id + ": " + errors[i];
      if (!keep_going) fail(codes[i], msg);
      out.failures.push_back(msg);
      continue;
    }
    metrics.push_back(results[i]->metrics);
    pooled.emplace_back(results[i]->pred_hr, results[i]->gt_hr);
  }
  require(!metrics.empty(), ErrorCode::Degenerate, "every session failed evaluation");
  out.report = aggregate(std::move(metrics), config.me_mode);
  if (config.variant == Variant::Full) out.report.pooled_rmse = pooled_rmse(pooled);
  out.report.config = config.to_json();
  return out;
}

PredictionSet estimate_clip(const Estimator& estimator, const VideoClip& clip) {
  PredictionSet set;
  set.chunk_len = estimator.chunk_len;
  set.stride = estimator.stride;
  set.fps = clip.fps();
  set.chunks = run_chunked(estimator, clip);
  return set;
}

}  // namespace rppg
