#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "rppg/types.hpp"

namespace rppg::io {

// Waveform CSV: one sample per line, optional "value" header. Masked samples
// are written as "nan" and read back as invalid.
Waveform read_waveform_csv(const std::filesystem::path& path, double fs);
void write_waveform_csv(const std::filesystem::path& path, const Waveform& wave);

// Frame directory: zero-padded numbered images, lexicographic order = time.
VideoClip read_frames_dir(const std::filesystem::path& dir, double fps);
void write_frames_dir(const std::filesystem::path& dir, const VideoClip& clip);

// Landmarks JSON: one array per frame, either [[x,y],...] points or a
// [x0,y0,x1,y1] box.
LandmarkTrack read_landmarks_json(const std::filesystem::path& path);
void write_landmarks_json(const std::filesystem::path& path, const LandmarkTrack& track);

/// Raw clip cache. 16-byte little-endian header
///   "RPPG" | u8 version | u8 dtype | u16 reserved | u32 T | u16 H | u16 W
/// followed by float32 frame data, frame-major (T, H, W, 3). The fps lives in
/// a JSON sidecar at "<path>.json".
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kTensorFloat32 = 1;

void write_tensor(const std::filesystem::path& path, const VideoClip& clip);
VideoClip read_tensor(const std::filesystem::path& path);

/// HrSeries CSV: frame_index,bpm,valid.
void write_hr_series_csv(const std::filesystem::path& path, const HrSeries& series);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rppg::io
