#include "rppg/estimate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "rppg/io.hpp"

namespace rppg {

using nlohmann::json;

void Estimator::validate() const {
  require(chunk_len >= 1 && stride >= 1 && stride <= chunk_len, ErrorCode::Validation,
          "estimator needs 1 <= stride <= chunk_len");
  require(static_cast<bool>(extract), ErrorCode::Validation, "estimator has no extractor");
}

Estimator make_estimator(const std::string& name, Index chunk_len, Index stride) {
  PulseExtractor fn;
  if (name == "green") {
    fn = estimate_green;
  } else if (name == "chrom") {
    fn = estimate_chrom;
  } else if (name == "pos") {
    fn = estimate_pos;
  } else {
    fail(ErrorCode::Validation, "unknown estimator '" + name + "' (green, chrom, pos)");
  }
  Estimator e{name, chunk_len, stride, std::move(fn)};
  e.validate();
  return e;
}

Eigen::VectorXd estimate_green(const VideoClip& chunk) {
  Eigen::VectorXd g = chunk.mean_rgb().col(1);
  return g.array() - g.mean();
}

namespace {

double stddev(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::sqrt((v.array() - v.mean()).square().mean());
}

// Each channel divided by its temporal mean.
Eigen::MatrixX3d temporally_normalized(const Eigen::Ref<const Eigen::MatrixX3d>& rgb) {
  const Eigen::RowVector3d mean = rgb.colwise().mean().cwiseMax(1e-12);
  return rgb.array().rowwise() / mean.array();
}

}  // namespace

ChromResult estimate_chrom_detail(const VideoClip& chunk) {
  const Eigen::MatrixX3d rgb = temporally_normalized(chunk.mean_rgb());
  const Eigen::VectorXd x = 3.0 * rgb.col(0) - 2.0 * rgb.col(1);
  const Eigen::VectorXd y = 1.5 * rgb.col(0) + rgb.col(1) - 1.5 * rgb.col(2);
  const double sx = stddev(x);
  const double sy = stddev(y);

  ChromResult out;
  if (sy > 1e-12) {
    const Eigen::VectorXd s = x - (sx / sy) * y;
    if (stddev(s) > 1e-6 * sx) {
      out.values = s.array() - s.mean();
      return out;
    }
  }
  out.values = x.array() - x.mean();
  out.used_fallback = true;
  return out;
}

Eigen::VectorXd estimate_chrom(const VideoClip& chunk) { return estimate_chrom_detail(chunk).values; }

Eigen::VectorXd estimate_pos(const VideoClip& chunk) {
  const auto window = static_cast<Index>(std::llround(1.6 * chunk.fps()));
  const Index n = chunk.frames();
  require(window >= 2, ErrorCode::Validation, "POS window shorter than 2 frames");
  require(n >= window, ErrorCode::Validation,
          "chunk of " + std::to_string(n) + " frames is shorter than the POS window (" +
              std::to_string(window) + ")");
  const Eigen::MatrixX3d rgb = chunk.mean_rgb();
  Eigen::Matrix<double, 2, 3> projection;
  projection << 0, 1, -1, -2, 1, 1;

  Eigen::VectorXd pulse = Eigen::VectorXd::Zero(n);
  for (Index m = 0; m + window <= n; ++m) {
    const Eigen::MatrixX3d cn = temporally_normalized(rgb.middleRows(m, window));
    const Eigen::Matrix<double, Eigen::Dynamic, 2> s = cn * projection.transpose();
    const double s1 = stddev(s.col(0));
    const double s2 = stddev(s.col(1));
    const double alpha = s2 > 1e-12 ? s1 / s2 : 0.0;
    const Eigen::VectorXd h = s.col(0) + alpha * s.col(1);
    pulse.segment(m, window).array() += h.array() - h.mean();
  }
  return pulse.array() - pulse.mean();
}

Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& values) {
  const Eigen::ArrayXd centered = values.array() - values.mean();
  const double sd = std::sqrt(centered.square().mean());
  if (!(sd > 1e-12)) return Eigen::VectorXd::Zero(values.size());
  return centered / sd;
}

std::vector<ChunkPrediction> run_chunked(const Estimator& estimator, const VideoClip& clip) {
  estimator.validate();
  require(clip.frames() >= estimator.chunk_len, ErrorCode::Validation,
          "clip of " + std::to_string(clip.frames()) + " frames is shorter than one chunk (" +
              std::to_string(estimator.chunk_len) + ")");
  std::vector<ChunkPrediction> out;
  for (Index start = 0; start + estimator.chunk_len <= clip.frames(); start += estimator.stride) {
    const Eigen::VectorXd raw = estimator.extract(clip.slice(start, estimator.chunk_len));
    require(raw.size() == estimator.chunk_len && raw.allFinite(), ErrorCode::Validation,
            "estimator " + estimator.name + " produced a malformed chunk");
    out.push_back({start, standardize(raw)});
  }
  return out;
}

Index PredictionSet::covered_length() const {
  Index end = 0;
  for (const auto& c : chunks) end = std::max(end, c.start + chunk_len);
  return end;
}

void save_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  json chunks = json::array();
  for (const auto& c : set.chunks) {
    chunks.push_back({{"start", c.start},
                      {"values", std::vector<double>(c.values.data(), c.values.data() + c.values.size())}});
  }
  const json j = {{"chunk_len", set.chunk_len},
                  {"stride", set.stride},
                  {"fps", set.fps},
                  {"chunks", std::move(chunks)}};
  io::write_text(path, j.dump() + "\n");
}

PredictionSet load_external_predictions(const std::filesystem::path& path,
                                        const std::string& session_id) {
  const std::string where = session_id.empty() ? path.string() : session_id + " (" + path.string() + ")";
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, where + ": invalid predictions JSON: " + e.what());
  }
  auto get = [&](const json& obj, const char* key) -> const json& {
    require(obj.is_object() && obj.contains(key), ErrorCode::Schema,
            where + ": predictions missing field '" + key + "'");
    return obj.at(key);
  };

  PredictionSet set;
  try {
    set.chunk_len = get(j, "chunk_len").get<Index>();
    set.stride = get(j, "stride").get<Index>();
    set.fps = get(j, "fps").get<double>();
  } catch (const json::type_error&) {
    fail(ErrorCode::Schema, where + ": chunk_len, stride and fps must be numbers");
  }
  require(set.chunk_len >= 1 && set.stride >= 1 && set.fps > 0, ErrorCode::Schema,
          where + ": chunk_len, stride and fps must be positive");
  const json& chunks = get(j, "chunks");
  require(chunks.is_array() && !chunks.empty(), ErrorCode::Schema, where + ": 'chunks' must be a non-empty array");

  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const json& c = chunks[k];
    const std::string name = where + ": chunk " + std::to_string(k);
    ChunkPrediction chunk;
    std::vector<double> values;
    try {
      chunk.start = get(c, "start").get<Index>();
      values = get(c, "values").get<std::vector<double>>();
    } catch (const json::type_error&) {
      fail(ErrorCode::Schema, name + " has a malformed start or values");
    }
    require(chunk.start >= 0, ErrorCode::Schema, name + " has a negative start");
    require(static_cast<Index>(values.size()) == set.chunk_len, ErrorCode::Validation,
            name + " (start " + std::to_string(chunk.start) + ") has " +
                std::to_string(values.size()) + " values, expected " + std::to_string(set.chunk_len));
    chunk.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
    require(chunk.values.allFinite(), ErrorCode::Validation, name + " has non-finite values");
    if (chunk.start % set.stride != 0) {
      set.warnings.push_back(name + " starts at " + std::to_string(chunk.start) +
                             ", off the stride grid");
    }
    set.chunks.push_back(std::move(chunk));
  }
  std::stable_sort(set.chunks.begin(), set.chunks.end(),
                   [](const ChunkPrediction& a, const ChunkPrediction& b) { return a.start < b.start; });
  for (std::size_t k = 1; k < set.chunks.size(); ++k) {
    require(set.chunks[k].start != set.chunks[k - 1].start, ErrorCode::Validation,
            where + ": duplicate chunk start " + std::to_string(set.chunks[k].start));
  }
  return set;
}

}  // namespace rppg
