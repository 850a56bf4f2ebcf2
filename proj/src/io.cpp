#include "rppg/io.hpp"

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rppg::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::Io, "write failed for " + path.string());
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace

Waveform read_waveform_csv(const fs::path& path, double fs_hz) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::vector<bool> valid;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (values.empty() && line_no == 1 && line == "value") continue;
    std::string lowered = line;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(), ::tolower);
    if (lowered == "nan") {
      values.push_back(0.0);
      valid.push_back(false);
      continue;
    }
    double v = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    require(ec == std::errc() && ptr == line.data() + line.size() && std::isfinite(v),
            ErrorCode::Schema,
            path.string() + ":" + std::to_string(line_no) + ": not a number: '" + line + "'");
    values.push_back(v);
    valid.push_back(true);
  }
  require(!values.empty(), ErrorCode::Schema, path.string() + ": waveform has no samples");
  Eigen::VectorXd samples = Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  Mask mask;
  if (std::find(valid.begin(), valid.end(), false) != valid.end()) {
    mask.resize(static_cast<Index>(valid.size()));
    for (std::size_t i = 0; i < valid.size(); ++i) mask[static_cast<Index>(i)] = valid[i];
  }
  return Waveform(std::move(samples), fs_hz, std::move(mask));
}

void write_waveform_csv(const fs::path& path, const Waveform& wave) {
  std::string text = "value\n";
  for (Index i = 0; i < wave.size(); ++i) {
    text += wave.valid(i) ? format_double(wave[i]) : std::string("nan");
    text += '\n';
  }
  write_text(path, text);
}

namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  static const std::array<const char*, 8> kExts = {".png", ".jpg", ".jpeg", ".bmp",
                                                   ".ppm", ".pgm", ".tif", ".tiff"};
  return std::any_of(kExts.begin(), kExts.end(), [&](const char* e) { return ext == e; });
}

}  // namespace

VideoClip read_frames_dir(const fs::path& dir, double fps) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), ErrorCode::Io, "no frame images in " + dir.string());

  FrameMatrix<float> frames;
  Index height = 0;
  Index width = 0;
  for (std::size_t t = 0; t < files.size(); ++t) {
    cv::Mat img = cv::imread(files[t].string(), cv::IMREAD_COLOR | cv::IMREAD_ANYDEPTH);
    require(!img.empty(), ErrorCode::Io,
            "frame " + std::to_string(t) + " (" + files[t].filename().string() +
                ") could not be decoded");
    if (t == 0) {
      height = img.rows;
      width = img.cols;
      frames.resize(static_cast<Index>(files.size()), height * width * 3);
    }
    require(img.rows == height && img.cols == width, ErrorCode::Validation,
            "frame " + std::to_string(t) + " has a different size than frame 0");
    const double scale = img.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
    cv::Mat rgb;
    img.convertTo(rgb, CV_32FC3, scale);
    float* row = frames.row(static_cast<Index>(t)).data();
    for (int y = 0; y < height; ++y) {
      const auto* src = rgb.ptr<cv::Vec3f>(y);
      for (int x = 0; x < width; ++x) {
        float* px = row + (static_cast<Index>(y) * width + x) * 3;
        px[0] = src[x][2];
        px[1] = src[x][1];
        px[2] = src[x][0];
      }
    }
  }
  return VideoClip(std::move(frames), height, width, fps);
}

void write_frames_dir(const fs::path& dir, const VideoClip& clip) {
  fs::create_directories(dir);
  const int digits = std::max<int>(6, static_cast<int>(std::to_string(clip.frames()).size()));
  cv::Mat img(static_cast<int>(clip.height()), static_cast<int>(clip.width()), CV_8UC3);
  for (Index t = 0; t < clip.frames(); ++t) {
    for (Index y = 0; y < clip.height(); ++y) {
      auto* dst = img.ptr<cv::Vec3b>(static_cast<int>(y));
      for (Index x = 0; x < clip.width(); ++x) {
        for (int c = 0; c < 3; ++c) {
          const float v = clip.at(t, y, x, c);
          dst[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
      }
    }
    std::string name = std::to_string(t);
    name.insert(0, static_cast<std::size_t>(digits) - name.size(), '0');
    const fs::path file = dir / (name + ".png");
    require(cv::imwrite(file.string(), img), ErrorCode::Io, "cannot write " + file.string());
  }
}

LandmarkTrack read_landmarks_json(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, path.string() + ": invalid landmarks JSON: " + e.what());
  }
  require(j.is_array(), ErrorCode::Schema, path.string() + ": landmarks must be an array per frame");
  LandmarkTrack track;
  track.frames.reserve(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    const json& frame = j[t];
    const std::string where = path.string() + ": frame " + std::to_string(t);
    require(frame.is_array(), ErrorCode::Schema, where + " is not an array");
    std::vector<Eigen::Vector2d> points;
    auto finite = [&](double v) {
      require(std::isfinite(v), ErrorCode::Schema, where + " has a non-finite coordinate");
      return v;
    };
    if (frame.size() == 4 && frame[0].is_number()) {
      points.emplace_back(finite(frame[0].get<double>()), finite(frame[1].get<double>()));
      points.emplace_back(finite(frame[2].get<double>()), finite(frame[3].get<double>()));
    } else {
      for (const json& p : frame) {
        require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(),
                ErrorCode::Schema, where + " has a malformed [x,y] point");
        points.emplace_back(finite(p[0].get<double>()), finite(p[1].get<double>()));
      }
    }
    track.frames.push_back(std::move(points));
  }
  return track;
}

void write_landmarks_json(const fs::path& path, const LandmarkTrack& track) {
  json j = json::array();
  for (const auto& frame : track.frames) {
    json points = json::array();
    for (const auto& p : frame) points.push_back({p.x(), p.y()});
    j.push_back(std::move(points));
  }
  write_text(path, j.dump() + "\n");
}

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void write_tensor(const fs::path& path, const VideoClip& clip) {
  require(clip.frames() <= 0xffffffffLL && clip.height() <= 0xffff && clip.width() <= 0xffff,
          ErrorCode::Validation, "clip too large for the tensor format");
  std::string out = "RPPG";
  put_le<std::uint8_t>(out, kTensorVersion);
  put_le<std::uint8_t>(out, kTensorFloat32);
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.frames()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(clip.height()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(clip.width()));
  const auto& data = clip.data();
  out.reserve(out.size() + static_cast<std::size_t>(data.size()) * 4);
  for (Index i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    const float v = data.data()[i];
    std::memcpy(&bits, &v, 4);
    put_le<std::uint32_t>(out, bits);
  }
  write_text(path, out);
  write_text(fs::path(path.string() + ".json"), json{{"fps", clip.fps()}}.dump() + "\n");
}

VideoClip read_tensor(const fs::path& path) {
  const std::string bytes = read_text(path);
  require(bytes.size() >= 16 && bytes.compare(0, 4, "RPPG") == 0, ErrorCode::Schema,
          path.string() + ": not an RPPG tensor file");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  require(p[4] == kTensorVersion, ErrorCode::Schema, path.string() + ": unsupported tensor version");
  require(p[5] == kTensorFloat32, ErrorCode::Schema, path.string() + ": unsupported tensor dtype");
  const auto frames = static_cast<Index>(get_le<std::uint32_t>(p + 8));
  const auto height = static_cast<Index>(get_le<std::uint16_t>(p + 12));
  const auto width = static_cast<Index>(get_le<std::uint16_t>(p + 14));
  const Index count = frames * height * width * 3;
  require(bytes.size() == 16 + static_cast<std::size_t>(count) * 4, ErrorCode::Schema,
          path.string() + ": tensor payload size does not match header");

  json sidecar;
  try {
    sidecar = json::parse(read_text(fs::path(path.string() + ".json")));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Schema, path.string() + ".json: " + e.what());
  }
  require(sidecar.contains("fps") && sidecar["fps"].is_number(), ErrorCode::Schema,
          path.string() + ".json: missing field 'fps'");

  FrameMatrix<float> data(frames, height * width * 3);
  for (Index i = 0; i < count; ++i) {
    const std::uint32_t bits = get_le<std::uint32_t>(p + 16 + 4 * i);
    float v = 0;
    std::memcpy(&v, &bits, 4);
    data.data()[i] = v;
  }
  return VideoClip(std::move(data), height, width, sidecar["fps"].get<double>());
}

void write_hr_series_csv(const fs::path& path, const HrSeries& series) {
  std::string text = "frame_index,bpm,valid\n";
  for (Index i = 0; i < series.size(); ++i) {
    text += std::to_string(i) + "," + format_double(series.bpm[i]) + "," +
            (series.valid[i] ? "1" : "0") + "\n";
  }
  write_text(path, text);
}

}  // namespace rppg::io
