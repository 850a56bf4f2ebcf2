#pragma once

#include <filesystem>
#include <utility>

#include "rppg/types.hpp"

namespace rppg {

/// Resample to `target_fs` by linear interpolation with end clamping. Output
/// length is round(len * target_fs / fs). A resampled sample is invalid when
/// either flanking input sample is invalid.
Waveform resample_waveform(const Waveform& wave, double target_fs);

/// Trim the longer wave from its end so both have the same length.
std::pair<Waveform, Waveform> truncate_to_match(const Waveform& gt,
                                                const Waveform& pred);

/// Parse a manifest file. Relative paths resolve against the manifest's
/// directory.
SessionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const SessionManifest& manifest);

/// Load frames, the ground-truth waveform at its native rate, and landmarks.
/// Landmark frame count must match the video; the waveform length need not.
Session load_session(const SessionManifest& manifest);

}  // namespace rppg
