#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "rppg/summary.hpp"
#include "rppg/types.hpp"

namespace rppg {

/// Heart-rate error statistics over jointly valid STFT windows.
struct HrErrors {
  double me = 0;
  double mae = 0;
  double rmse = 0;
  Index n_windows = 0;
};

/// ME, MAE and RMSE of `pred` against `gt`. Both series are truncated to the
/// shorter length; only windows valid in both (and inside both window-center
/// ranges) count.
HrErrors hr_errors(const HrSeries& pred, const HrSeries& gt);

double mean_error(const HrSeries& pred, const HrSeries& gt);
double mean_absolute_error(const HrSeries& pred, const HrSeries& gt);
double rmse(const HrSeries& pred, const HrSeries& gt);

/// Pearson r over paired samples.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b);

struct LagCorrelation {
  double r = 0;
  Index lag = 0;
};

/// Pearson r between pred[i + lag] and gt[i], maximized over integer lags in
/// [-floor(max_lag_s * fs), +floor(max_lag_s * fs)]. Masked samples are dropped
/// pairwise. Ties go to the smaller |lag|, then to the positive lag.
LagCorrelation r_wave(const Waveform& pred, const Waveform& gt, double max_lag_s);

/// -r(pred, target).
double neg_pearson_loss(const Eigen::Ref<const Eigen::VectorXd>& pred,
                        const Eigen::Ref<const Eigen::VectorXd>& target);

/// Errors of a constant predictor, computed per session and averaged.
HrErrors zero_effort(const std::vector<HrSeries>& gt_sessions, double constant_bpm);

struct SessionMetrics {
  std::string session_id;
  double me = 0;
  double mae = 0;
  double rmse = 0;
  double r_wave = 0;
  Index n_windows = 0;
  Index lag_used = 0;
};

enum class MeMode { Signed, Absolute };

struct MetricsReport {
  std::vector<SessionMetrics> sessions;
  MeanCi me;
  MeanCi mae;
  MeanCi rmse;
  MeanCi r_wave;
  MeMode me_mode = MeMode::Signed;
  /// RMSE over all sessions' windows pooled together, when requested.
  std::optional<double> pooled_rmse;
  nlohmann::json config = nlohmann::json::object();
};

/// Per-metric mean over sessions with 95% intervals. Sessions are ordered by
/// id so the result does not depend on completion order.
MetricsReport aggregate(std::vector<SessionMetrics> sessions, MeMode mode = MeMode::Signed);

/// sqrt of the mean squared error over every session's windows together.
double pooled_rmse(const std::vector<std::pair<HrSeries, HrSeries>>& pred_gt_pairs);

nlohmann::json to_json(const MetricsReport& report);
std::string to_csv(const MetricsReport& report);

/// Box plot of per-session |ME| and MAE.
std::string box_plot_svg(const MetricsReport& report);

}  // namespace rppg
