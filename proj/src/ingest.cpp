#include "somn/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "somn/errors.hpp"

namespace somn {

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Wake: return "WAKE";
    case Stage::Rem: return "REM";
    case Stage::N1: return "N1";
    case Stage::N2: return "N2";
    case Stage::N3: return "N3";
    case Stage::Unknown: return "UNKNOWN";
  }
  return "UNKNOWN";
}

const Channel* Recording::find(std::string_view label) const {
  for (const auto& c : channels)
    if (c.label == label) return &c;
  return nullptr;
}

LabelVocabulary LabelVocabulary::standard() {
  LabelVocabulary v;
  for (auto s : {"W", "Wake", "WAKE"}) v.set(s, Stage::Wake);
  for (auto s : {"R", "REM"}) v.set(s, Stage::Rem);
  for (auto s : {"1", "N1", "S1"}) v.set(s, Stage::N1);
  for (auto s : {"2", "N2", "S2"}) v.set(s, Stage::N2);
  for (auto s : {"3", "4", "N3", "N4", "S3", "S4"}) v.set(s, Stage::N3);
  return v;
}

Stage LabelVocabulary::lookup(std::string_view spelling) const {
  auto it = map_.find(spelling);
  return it == map_.end() ? Stage::Unknown : it->second;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

class EdfHeaderReader {
 public:
  explicit EdfHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string text(std::size_t offset, std::size_t len) const {
    if (offset + len > bytes_.size())
      throw ParseError("EDF header truncated at byte offset " + std::to_string(offset));
    std::string s(reinterpret_cast<const char*>(bytes_.data() + offset), len);
    for (std::size_t i = 0; i < len; ++i) {
      const auto c = static_cast<unsigned char>(s[i]);
      if (c < 0x20 || c > 0x7e)
        throw ParseError("non-ASCII byte in EDF header at byte offset " +
                         std::to_string(offset + i));
    }
    return std::string(trim(s));
  }

  double real(std::size_t offset, std::size_t len, const char* field) const {
    double v = 0.0;
    if (!parse_number(text(offset, len), v))
      throw ParseError(std::string("malformed numeric EDF field '") + field +
                       "' at byte offset " + std::to_string(offset));
    return v;
  }

  long integer(std::size_t offset, std::size_t len, const char* field) const {
    long v = 0;
    if (!parse_number(text(offset, len), v))
      throw ParseError(std::string("malformed integer EDF field '") + field +
                       "' at byte offset " + std::to_string(offset));
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
};

struct EdfSignalHeader {
  std::string label;
  std::string unit;
  double physical_min, physical_max;
  double digital_min, digital_max;
  long samples_per_record;
};

}  // namespace

double edf_physical(std::int32_t digital, double digital_min, double digital_max,
                    double physical_min, double physical_max) {
  // std::lerp is exact at both ends and monotone in between
  const double t = (static_cast<double>(digital) - digital_min) / (digital_max - digital_min);
  return std::lerp(physical_min, physical_max, t);
}

Recording parse_edf(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kFixed = 256;
  if (bytes.size() < kFixed)
    throw ParseError("EDF file shorter than the 256-byte header (" +
                     std::to_string(bytes.size()) + " bytes)");
  EdfHeaderReader h(bytes);

  Recording rec;
  const std::string patient = h.text(8, 80);
  rec.subject_id = patient.substr(0, patient.find(' '));
  rec.start_time = h.text(168, 8) + " " + h.text(176, 8);

  const long header_bytes = h.integer(184, 8, "header bytes");
  const std::string reserved = h.text(192, 44);
  if (reserved.rfind("EDF+D", 0) == 0)
    throw ParseError("discontinuous EDF+D recordings are not supported");
  long n_records = h.integer(236, 8, "number of data records");
  const double record_seconds = h.real(244, 8, "data record duration");
  const long ns = h.integer(252, 4, "number of signals");
  if (ns <= 0) throw ParseError("EDF declares no signals (byte offset 252)");
  if (record_seconds <= 0.0)
    throw ParseError("EDF data record duration must be positive (byte offset 244)");
  const auto n_sig = static_cast<std::size_t>(ns);
  if (header_bytes != static_cast<long>(kFixed * (n_sig + 1)))
    throw ParseError("EDF header byte count " + std::to_string(header_bytes) +
                     " disagrees with " + std::to_string(ns) + " signals (byte offset 184)");

  // Per-signal fields are stored field-major: all labels, then all
  // transducers, and so on.
  std::vector<EdfSignalHeader> sig(n_sig);
  std::size_t off = kFixed;
  auto field = [&](std::size_t width, auto&& fn) {
    for (std::size_t s = 0; s < n_sig; ++s) fn(sig[s], off + s * width);
    off += width * n_sig;
  };
  field(16, [&](EdfSignalHeader& s, std::size_t o) { s.label = h.text(o, 16); });
  field(80, [&](EdfSignalHeader&, std::size_t o) { (void)h.text(o, 80); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) { s.unit = h.text(o, 8); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) { s.physical_min = h.real(o, 8, "physical minimum"); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) { s.physical_max = h.real(o, 8, "physical maximum"); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) { s.digital_min = h.real(o, 8, "digital minimum"); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) { s.digital_max = h.real(o, 8, "digital maximum"); });
  field(80, [&](EdfSignalHeader&, std::size_t o) { (void)h.text(o, 80); });
  field(8, [&](EdfSignalHeader& s, std::size_t o) {
    s.samples_per_record = h.integer(o, 8, "samples per record");
    if (s.samples_per_record <= 0)
      throw ParseError("samples per record must be positive at byte offset " + std::to_string(o));
  });
  field(32, [&](EdfSignalHeader&, std::size_t) {});

  std::size_t record_bytes = 0;
  for (std::size_t s = 0; s < n_sig; ++s) {
    if (sig[s].digital_max == sig[s].digital_min)
      throw ParseError("signal '" + sig[s].label + "' has digital maximum equal to digital minimum");
    record_bytes += 2 * static_cast<std::size_t>(sig[s].samples_per_record);
  }

  const std::size_t data_bytes = bytes.size() - static_cast<std::size_t>(header_bytes);
  if (n_records < 0) n_records = static_cast<long>(data_bytes / record_bytes);
  const std::size_t expected = static_cast<std::size_t>(n_records) * record_bytes;
  if (data_bytes < expected) {
    const std::size_t bad = data_bytes / record_bytes;
    throw ParseError("truncated EDF data record " + std::to_string(bad) + ": expected " +
                     std::to_string(expected) + " data bytes, got " + std::to_string(data_bytes));
  }

  std::vector<std::size_t> keep;
  for (std::size_t s = 0; s < n_sig; ++s)
    if (sig[s].label != "EDF Annotations") keep.push_back(s);

  std::set<std::string> seen;
  for (std::size_t s : keep) {
    if (!seen.insert(sig[s].label).second)
      throw ParseError("duplicate EDF channel label '" + sig[s].label + "'");
    Channel c;
    c.label = sig[s].label;
    c.physical_unit = sig[s].unit;
    c.sampling_rate = static_cast<double>(sig[s].samples_per_record) / record_seconds;
    c.samples.reserve(static_cast<std::size_t>(n_records * sig[s].samples_per_record));
    rec.channels.push_back(std::move(c));
  }
  if (rec.channels.empty()) throw ParseError("EDF file holds only annotation signals");

  const std::uint8_t* p = bytes.data() + header_bytes;
  for (long r = 0; r < n_records; ++r) {
    std::size_t k = 0;
    for (std::size_t s = 0; s < n_sig; ++s) {
      const auto n = static_cast<std::size_t>(sig[s].samples_per_record);
      const bool kept = k < keep.size() && keep[k] == s;
      if (kept) {
        auto& out = rec.channels[k].samples;
        for (std::size_t i = 0; i < n; ++i) {
          const auto raw = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
          const auto digital = static_cast<std::int16_t>(raw);
          out.push_back(edf_physical(digital, sig[s].digital_min, sig[s].digital_max,
                                     sig[s].physical_min, sig[s].physical_max));
        }
        ++k;
      }
      p += 2 * n;
    }
  }
  for (const auto& c : rec.channels)
    if (c.samples.empty()) throw ParseError("EDF channel '" + c.label + "' holds no samples");
  return rec;
}

Recording parse_csv_signal(std::string_view text, std::string label, double sampling_rate) {
  if (!(sampling_rate > 0.0)) throw ParseError("sampling rate must be positive");
  auto lines = split_lines(text);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  Channel c;
  c.label = std::move(label);
  c.sampling_rate = sampling_rate;
  c.samples.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    double v = 0.0;
    if (!parse_number(lines[i], v))
      throw ParseError("non-numeric value on line " + std::to_string(i + 1));
    c.samples.push_back(v);
  }
  if (c.samples.empty()) throw ParseError("signal file holds no samples");
  Recording rec;
  rec.channels.push_back(std::move(c));
  return rec;
}

Hypnogram parse_hypnogram(std::string_view text, const LabelVocabulary& vocab) {
  std::map<long, Stage> rows;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw ParseError("hypnogram line " + std::to_string(i + 1) + " lacks a comma");
    long idx = 0;
    if (!parse_number(line.substr(0, comma), idx)) {
      if (rows.empty() && i == 0) continue;  // header
      throw ParseError("bad epoch index on hypnogram line " + std::to_string(i + 1));
    }
    if (idx < 0)
      throw ParseError("negative epoch index on hypnogram line " + std::to_string(i + 1));
    if (!rows.emplace(idx, vocab.lookup(trim(line.substr(comma + 1)))).second)
      throw ParseError("duplicate epoch index " + std::to_string(idx) + " on hypnogram line " +
                       std::to_string(i + 1));
  }
  Hypnogram hyp;
  if (rows.empty()) return hyp;
  hyp.labels.assign(static_cast<std::size_t>(rows.rbegin()->first) + 1, Stage::Unknown);
  for (const auto& [idx, stage] : rows) hyp.labels[static_cast<std::size_t>(idx)] = stage;
  return hyp;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace somn
