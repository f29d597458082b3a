#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ctxens/core.hpp"

namespace ctxens::io {

/// Header row required; the column named `y` is the target and every other
/// column becomes side information. Row order is time order.
TimeSeriesFrame read_frame_csv(const std::filesystem::path& path);
TimeSeriesFrame parse_frame_csv(std::string_view text);
std::string format_frame_csv(const TimeSeriesFrame& frame);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace ctxens::io
