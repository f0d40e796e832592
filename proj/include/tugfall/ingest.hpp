#pragma once

#include "tugfall/errors.hpp"
#include "tugfall/segmentation.hpp"
#include "tugfall/signal.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <string>

namespace tugfall {

/// Reads a recording CSV with header `x,y,z` or `t,x,y,z` (units g). A `t`
/// column is only checked for strictly increasing values; sample spacing
/// always comes from `sampling_rate_hz`.
RawRecording<double> read_recording(const std::filesystem::path& path, std::string subject_id,
                                    double sampling_rate_hz);

void write_recording(const std::filesystem::path& path, const RawRecording<double>& rec);

using OverrideMap = std::map<std::string, std::array<BoundaryPair, 3>>;

/// Override sidecar: `subject_id,start1_s,end1_s,start2_s,end2_s,start3_s,end3_s`.
OverrideMap read_overrides(const std::filesystem::path& path);

}  // namespace tugfall
