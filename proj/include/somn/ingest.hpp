#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace somn {

// Technologist stage labels. Values are stable: they are written as u8 into
// windows files.
enum class Stage : std::uint8_t { Wake = 0, Rem = 1, N1 = 2, N2 = 3, N3 = 4, Unknown = 5 };

std::string_view stage_name(Stage s);

struct Channel {
  std::string label;
  double sampling_rate = 0.0;  // Hz
  std::vector<double> samples;  // physical units
  std::string physical_unit;

  double duration() const {
    return static_cast<double>(samples.size()) / sampling_rate;
  }
};

struct Recording {
  std::string subject_id;
  std::vector<Channel> channels;
  std::optional<std::string> start_time;  // "dd.mm.yy hh.mm.ss" as in EDF

  /// Channel by label; nullptr if absent.
  const Channel* find(std::string_view label) const;
};

struct Hypnogram {
  static constexpr double kEpochSeconds = 30.0;

  std::string subject_id;
  std::vector<Stage> labels;

  double epoch_start(std::size_t i) const { return kEpochSeconds * static_cast<double>(i); }
  double epoch_end(std::size_t i) const { return kEpochSeconds * static_cast<double>(i + 1); }
};

enum class Sex : std::uint8_t { Female, Male };

struct SubjectMeta {
  std::string subject_id;
  std::optional<double> ahi;
  std::optional<double> bmi;
  std::optional<double> age;
  std::optional<Sex> sex;
};

/// Maps database-specific label spellings onto Stage. Anything not listed
/// becomes Stage::Unknown.
class LabelVocabulary {
 public:
  /// W/Wake, R/REM, 1/N1/S1, 2/N2/S2, 3/4/N3/N4/S3/S4.
  static LabelVocabulary standard();

  void set(std::string spelling, Stage stage) { map_[std::move(spelling)] = stage; }
  Stage lookup(std::string_view spelling) const;
  const std::map<std::string, Stage, std::less<>>& entries() const { return map_; }

 private:
  std::map<std::string, Stage, std::less<>> map_;
};

/// Parses an EDF or continuous EDF+ file (16-bit samples). Annotation
/// signals are skipped; EDF+D is rejected.
Recording parse_edf(std::span<const std::uint8_t> bytes);

/// Digital-to-physical affine map used by parse_edf.
double edf_physical(std::int32_t digital, double digital_min, double digital_max,
                    double physical_min, double physical_max);

/// One numeric value per line.
Recording parse_csv_signal(std::string_view text, std::string label, double sampling_rate);

/// Rows of `epoch_index,label`; header line optional. Gaps are filled with
/// Stage::Unknown.
Hypnogram parse_hypnogram(std::string_view text,
                          const LabelVocabulary& vocab = LabelVocabulary::standard());

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);

}  // namespace somn
