#include "somn/windows_io.hpp"

#include <fstream>

#include "somn/byte_io.hpp"
#include "somn/errors.hpp"

namespace somn {

namespace io {

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

}  // namespace io

std::vector<std::uint8_t> encode_windows(const WindowsFile& file) {
  if (!valid_context_seconds(file.context_seconds))
    throw FormatError("windows file context must be 30, 120, 300 or 600 seconds");
  const auto len = static_cast<std::size_t>(file.context_seconds) * 4;
  io::ByteWriter w;
  w.raw("SOMN", 4);
  w.le(kWindowsFormatVersion);
  w.le(static_cast<std::uint16_t>(file.context_seconds));
  w.le(static_cast<std::uint32_t>(file.windows.size()));
  for (const auto& win : file.windows) {
    if (win.input.size() != len) throw FormatError("window length disagrees with file context");
    w.str16(win.subject_id);
    w.le(win.epoch_index);
    w.le(static_cast<std::uint8_t>(win.label));
    w.f64s(win.input);
  }
  return w.bytes();
}

WindowsFile decode_windows(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.fixed(4) != "SOMN") throw FormatError("not a windows file (bad magic)");
  if (const auto v = r.le<std::uint16_t>(); v != kWindowsFormatVersion)
    throw FormatError("unsupported windows file version " + std::to_string(v));
  WindowsFile f;
  f.context_seconds = r.le<std::uint16_t>();
  if (!valid_context_seconds(f.context_seconds))
    throw FormatError("windows file declares invalid context " + std::to_string(f.context_seconds));
  const auto count = r.le<std::uint32_t>();
  const auto len = static_cast<std::size_t>(f.context_seconds) * 4;
  f.windows.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ContextWindow win;
    win.subject_id = r.str16();
    win.epoch_index = r.le<std::uint32_t>();
    const auto stage = r.le<std::uint8_t>();
    if (stage > static_cast<std::uint8_t>(Stage::Unknown))
      throw FormatError("invalid stage code " + std::to_string(stage));
    win.label = static_cast<Stage>(stage);
    win.input.resize(len);
    r.f64s(win.input);
    f.windows.push_back(std::move(win));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last window");
  return f;
}

void save_windows(const std::string& path, const WindowsFile& file) {
  io::write_file(path, encode_windows(file));
}

WindowsFile load_windows(const std::string& path) {
  return decode_windows(read_file_bytes(path));
}

}  // namespace somn
