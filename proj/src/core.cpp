#include "rppg/core.hpp"

#include <json.hpp>

#include <cmath>

#include "rppg/interpolate.hpp"
#include "rppg/io.hpp"

namespace rppg {

namespace fs = std::filesystem;
using nlohmann::json;

Waveform resample_waveform(const Waveform& wave, double target_fs) {
  require(std::isfinite(target_fs) && target_fs > 0, ErrorCode::Validation,
          "resample target rate must be positive");
  if (target_fs == wave.fs()) return wave;
  const auto out_len = static_cast<Index>(
      std::llround(static_cast<double>(wave.size()) * target_fs / wave.fs()));
  require(out_len >= 1, ErrorCode::Validation,
          "resampled waveform would be empty");
  const double step = wave.fs() / target_fs;
  const Eigen::VectorXd positions =
      Eigen::VectorXd::LinSpaced(out_len, 0.0, static_cast<double>(out_len - 1)) * step;
  return interpolate_waveform(wave, positions, target_fs);
}

std::pair<Waveform, Waveform> truncate_to_match(const Waveform& gt,
                                                const Waveform& pred) {
  require(gt.fs() == pred.fs(), ErrorCode::Validation,
          "truncate_to_match needs equal sample rates");
  const Index n = std::min(gt.size(), pred.size());
  return {gt.head(n), pred.head(n)};
}

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorCode::Schema, std::string("manifest missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::Schema, std::string("manifest field '") + name + "' has the wrong type");
  }
}

}  // namespace

SessionManifest load_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, "manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  require(j.is_object(), ErrorCode::Schema, "manifest " + path.string() + " is not an object");

  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };

  SessionManifest m;
  m.session_id = field<std::string>(j, "session_id");
  m.subject_id = field<std::string>(j, "subject_id");
  m.frames_dir = resolve(field<std::string>(j, "frames_dir"));
  m.fps = field<double>(j, "fps");
  m.gt_waveform = resolve(field<std::string>(j, "gt_waveform"));
  m.gt_fs = field<double>(j, "gt_fs");
  if (j.contains("landmarks") && !j.at("landmarks").is_null()) {
    m.landmarks = resolve(field<std::string>(j, "landmarks"));
  }
  require(m.fps > 0, ErrorCode::Schema, "manifest field 'fps' must be positive");
  require(m.gt_fs > 0, ErrorCode::Schema, "manifest field 'gt_fs' must be positive");
  return m;
}

void save_manifest(const fs::path& path, const SessionManifest& m) {
  const fs::path base = path.parent_path();
  auto relative = [&](const fs::path& p) {
    return fs::relative(p, base.empty() ? fs::path(".") : base).generic_string();
  };
  json j = {
      {"session_id", m.session_id},
      {"subject_id", m.subject_id},
      {"frames_dir", relative(m.frames_dir)},
      {"fps", m.fps},
      {"gt_waveform", relative(m.gt_waveform)},
      {"gt_fs", m.gt_fs},
      {"landmarks", m.landmarks ? json(relative(*m.landmarks)) : json(nullptr)},
  };
  io::write_text(path, j.dump(2) + "\n");
}

Session load_session(const SessionManifest& m) {
  require(fs::is_directory(m.frames_dir), ErrorCode::Io,
          "frames directory not found: " + m.frames_dir.string());
  require(fs::is_regular_file(m.gt_waveform), ErrorCode::Io,
          "ground-truth waveform not found: " + m.gt_waveform.string());

  VideoClip video = io::read_frames_dir(m.frames_dir, m.fps);
  Waveform gt = io::read_waveform_csv(m.gt_waveform, m.gt_fs);

  std::optional<LandmarkTrack> landmarks;
  if (m.landmarks) {
    require(fs::is_regular_file(*m.landmarks), ErrorCode::Io,
            "landmarks file not found: " + m.landmarks->string());
    landmarks = io::read_landmarks_json(*m.landmarks);
    require(landmarks->size() == video.frames(), ErrorCode::Validation,
            "session " + m.session_id + ": landmarks have " +
                std::to_string(landmarks->size()) + " frames but video has " +
                std::to_string(video.frames()));
  }
  return Session{std::move(video), std::move(gt), std::move(landmarks)};
}

}  // namespace rppg
