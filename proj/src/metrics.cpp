#include "rppg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace rppg {

MeanCi mean_ci(std::span<const double> values) {
  require(!values.empty(), ErrorCode::Validation, "mean_ci of an empty set");
  const auto n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, kCiZ * std::sqrt(ss / (n - 1)) / std::sqrt(n)};
}

namespace {

// Indices valid in both series after truncating to the shorter one.
std::vector<Index> joint_windows(const HrSeries& pred, const HrSeries& gt) {
  const Index n = std::min(pred.size(), gt.size());
  const Index lo = std::max<Index>({0, pred.first_window, gt.first_window});
  const Index hi = std::min<Index>({n - 1, pred.last_window, gt.last_window});
  std::vector<Index> out;
  for (Index i = lo; i <= hi; ++i) {
    if (pred.valid[i] && gt.valid[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

HrErrors hr_errors(const HrSeries& pred, const HrSeries& gt) {
  const auto idx = joint_windows(pred, gt);
  require(!idx.empty(), ErrorCode::Degenerate, "no jointly valid HR windows");
  double sum = 0;
  double sum_abs = 0;
  double sum_sq = 0;
  for (Index i : idx) {
    const double e = pred.bpm[i] - gt.bpm[i];
    sum += e;
    sum_abs += std::abs(e);
    sum_sq += e * e;
  }
  const auto n = static_cast<double>(idx.size());
  return {sum / n, sum_abs / n, std::sqrt(sum_sq / n), static_cast<Index>(idx.size())};
}

double mean_error(const HrSeries& pred, const HrSeries& gt) { return hr_errors(pred, gt).me; }
double mean_absolute_error(const HrSeries& pred, const HrSeries& gt) {
  return hr_errors(pred, gt).mae;
}
double rmse(const HrSeries& pred, const HrSeries& gt) { return hr_errors(pred, gt).rmse; }

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::VectorXd>& b) {
  require(a.size() == b.size() && a.size() >= 2, ErrorCode::Validation,
          "pearson needs two equal-length sequences of at least 2 samples");
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = da.square().sum();
  const double sbb = db.square().sum();
  require(saa > 0 && sbb > 0, ErrorCode::Degenerate, "pearson of a zero-variance sequence");
  return std::clamp((da * db).sum() / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::optional<double> lagged_pearson(const Waveform& pred, const Waveform& gt, Index lag) {
  const Index n = std::min(pred.size(), gt.size());
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index i = std::max<Index>(0, -lag); i < n && i + lag < n; ++i) {
    if (!pred.valid(i + lag) || !gt.valid(i)) continue;
    xs.push_back(pred[i + lag]);
    ys.push_back(gt[i]);
  }
  if (xs.size() < 2) return std::nullopt;
  const Eigen::Map<const Eigen::VectorXd> x(xs.data(), static_cast<Index>(xs.size()));
  const Eigen::Map<const Eigen::VectorXd> y(ys.data(), static_cast<Index>(ys.size()));
  const double vx = (x.array() - x.mean()).square().sum();
  const double vy = (y.array() - y.mean()).square().sum();
  if (!(vx > 0 && vy > 0)) return std::nullopt;
  return pearson(x, y);
}

bool has_variance(const Waveform& w) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < w.size(); ++i) {
    if (!w.valid(i)) continue;
    lo = std::min(lo, w[i]);
    hi = std::max(hi, w[i]);
  }
  return hi > lo;
}

}  // namespace

LagCorrelation r_wave(const Waveform& pred, const Waveform& gt, double max_lag_s) {
  require(pred.fs() == gt.fs(), ErrorCode::Validation, "r_wave needs equal sample rates");
  require(max_lag_s >= 0, ErrorCode::Validation, "max lag must be non-negative");
  require(has_variance(pred) && has_variance(gt), ErrorCode::Degenerate,
          "r_wave of a zero-variance waveform");
  const auto max_lag = static_cast<Index>(std::floor(max_lag_s * pred.fs() + 1e-9));
  std::optional<LagCorrelation> best;
  for (Index mag = 0; mag <= max_lag; ++mag) {
    for (Index lag : {mag, -mag}) {
      if (mag == 0 && lag != 0) continue;
      const auto r = lagged_pearson(pred, gt, lag);
      if (r && (!best || *r > best->r)) best = LagCorrelation{*r, lag};
    }
  }
  require(best.has_value(), ErrorCode::Degenerate, "no lag leaves 2 overlapping valid samples");
  return *best;
}

double neg_pearson_loss(const Eigen::Ref<const Eigen::VectorXd>& pred,
                        const Eigen::Ref<const Eigen::VectorXd>& target) {
  return -pearson(pred, target);
}

HrErrors zero_effort(const std::vector<HrSeries>& gt_sessions, double constant_bpm) {
  require(!gt_sessions.empty(), ErrorCode::Validation, "zero_effort needs at least one session");
  HrErrors out;
  for (const auto& gt : gt_sessions) {
    HrSeries constant = gt;
    constant.bpm.setConstant(constant_bpm);
    constant.valid.setConstant(true);
    const HrErrors e = hr_errors(constant, gt);
    out.me += e.me;
    out.mae += e.mae;
    out.rmse += e.rmse;
    out.n_windows += e.n_windows;
  }
  const auto n = static_cast<double>(gt_sessions.size());
  out.me /= n;
  out.mae /= n;
  out.rmse /= n;
  return out;
}

MetricsReport aggregate(std::vector<SessionMetrics> sessions, MeMode mode) {
  require(!sessions.empty(), ErrorCode::Validation, "aggregate needs at least one session");
  std::sort(sessions.begin(), sessions.end(),
            [](const SessionMetrics& a, const SessionMetrics& b) { return a.session_id < b.session_id; });
  std::vector<double> me;
  std::vector<double> mae;
  std::vector<double> rm;
  std::vector<double> rw;
  for (const auto& s : sessions) {
    me.push_back(mode == MeMode::Absolute ? std::abs(s.me) : s.me);
    mae.push_back(s.mae);
    rm.push_back(s.rmse);
    rw.push_back(s.r_wave);
  }
  MetricsReport report;
  report.me = mean_ci(me);
  report.mae = mean_ci(mae);
  report.rmse = mean_ci(rm);
  report.r_wave = mean_ci(rw);
  report.me_mode = mode;
  report.sessions = std::move(sessions);
  return report;
}

double pooled_rmse(const std::vector<std::pair<HrSeries, HrSeries>>& pairs) {
  double sum_sq = 0;
  Index count = 0;
  for (const auto& [pred, gt] : pairs) {
    for (Index i : joint_windows(pred, gt)) {
      const double e = pred.bpm[i] - gt.bpm[i];
      sum_sq += e * e;
      ++count;
    }
  }
  require(count > 0, ErrorCode::Degenerate, "no jointly valid HR windows");
  return std::sqrt(sum_sq / static_cast<double>(count));
}

nlohmann::json to_json(const MetricsReport& report) {
  using nlohmann::json;
  auto summary = [](const MeanCi& m) { return json{{"mean", m.mean}, {"ci95", m.ci95}}; };
  json sessions = json::array();
  for (const auto& s : report.sessions) {
    sessions.push_back({{"session_id", s.session_id},
                        {"me", s.me},
                        {"mae", s.mae},
                        {"rmse", s.rmse},
                        {"r_wave", s.r_wave},
                        {"n_windows", s.n_windows},
                        {"lag_used", s.lag_used}});
  }
  json aggregate = {{report.me_mode == MeMode::Absolute ? "abs_me" : "me", summary(report.me)},
                    {"mae", summary(report.mae)},
                    {"rmse", summary(report.rmse)},
                    {"r_wave", summary(report.r_wave)},
                    {"n_sessions", report.sessions.size()}};
  if (report.pooled_rmse) aggregate["pooled_rmse"] = *report.pooled_rmse;
  return json{{"config", report.config}, {"aggregate", aggregate}, {"sessions", sessions}};
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "session_id,me,mae,rmse,r_wave,n_windows,lag_used\n";
  for (const auto& s : report.sessions) {
    out << s.session_id << ',' << num(s.me) << ',' << num(s.mae) << ',' << num(s.rmse) << ','
        << num(s.r_wave) << ',' << s.n_windows << ',' << s.lag_used << '\n';
  }
  const char* me_label = report.me_mode == MeMode::Absolute ? "mean_abs" : "mean";
  out << me_label << ',' << num(report.me.mean) << ',' << num(report.mae.mean) << ','
      << num(report.rmse.mean) << ',' << num(report.r_wave.mean) << ",,\n";
  out << "ci95," << num(report.me.ci95) << ',' << num(report.mae.ci95) << ','
      << num(report.rmse.ci95) << ',' << num(report.r_wave.ci95) << ",,\n";
  return out.str();
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

}  // namespace

std::string box_plot_svg(const MetricsReport& report) {
  require(!report.sessions.empty(), ErrorCode::Validation, "box plot of an empty report");
  std::vector<double> abs_me;
  std::vector<double> mae;
  for (const auto& s : report.sessions) {
    abs_me.push_back(std::abs(s.me));
    mae.push_back(s.mae);
  }
  const double top = std::max(1.0, std::max(*std::max_element(abs_me.begin(), abs_me.end()),
                                            *std::max_element(mae.begin(), mae.end())) * 1.1);
  constexpr double kWidth = 360;
  constexpr double kHeight = 300;
  constexpr double kPlotTop = 20;
  constexpr double kPlotBottom = 260;
  auto y = [&](double v) { return kPlotBottom - (kPlotBottom - kPlotTop) * v / top; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<line x1=\"50\" y1=\"" << kPlotTop << "\" x2=\"50\" y2=\"" << kPlotBottom
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"46\" y=\"" << y(top) + 4 << "\" text-anchor=\"end\">" << num(top).substr(0, 6)
      << "</text>\n<text x=\"46\" y=\"" << kPlotBottom + 4 << "\" text-anchor=\"end\">0</text>\n";
  const std::vector<std::pair<std::string, std::vector<double>>> groups = {{"|ME| (BPM)", abs_me},
                                                                           {"MAE (BPM)", mae}};
  double x = 110;
  for (const auto& [label, values] : groups) {
    const double q1 = quantile(values, 0.25);
    const double q2 = quantile(values, 0.5);
    const double q3 = quantile(values, 0.75);
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    svg << "<line x1=\"" << x << "\" y1=\"" << y(lo) << "\" x2=\"" << x << "\" y2=\"" << y(hi)
        << "\" stroke=\"black\"/>\n";
    svg << "<rect x=\"" << x - 30 << "\" y=\"" << y(q3) << "\" width=\"60\" height=\""
        << std::max(0.5, y(q1) - y(q3)) << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << x - 30 << "\" y1=\"" << y(q2) << "\" x2=\"" << x + 30 << "\" y2=\""
        << y(q2) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    for (double v : values) {
      svg << "<circle cx=\"" << x << "\" cy=\"" << y(v) << "\" r=\"2\"/>\n";
    }
    svg << "<text x=\"" << x << "\" y=\"" << kPlotBottom + 20 << "\" text-anchor=\"middle\">"
        << label << "</text>\n";
    x += 140;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace rppg
