#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "somn/ihr.hpp"

namespace somn {

// Windows file: "SOMN", u16 version, u16 context seconds, u32 count, then
// per window: u16 subject-id length + bytes, u32 epoch index, u8 stage,
// context*4 little-endian f64 samples.
inline constexpr std::uint16_t kWindowsFormatVersion = 1;

struct WindowsFile {
  int context_seconds = 300;
  std::vector<ContextWindow> windows;
};

std::vector<std::uint8_t> encode_windows(const WindowsFile& file);
WindowsFile decode_windows(std::span<const std::uint8_t> bytes);

void save_windows(const std::string& path, const WindowsFile& file);
WindowsFile load_windows(const std::string& path);

}  // namespace somn
