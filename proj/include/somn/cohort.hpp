#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "somn/ihr.hpp"
#include "somn/ingest.hpp"

namespace somn {

enum class Task : std::uint8_t { WakeVsSleep, RemVsNrem };
enum class CohortRole : std::uint8_t { Training, Validation };
enum class Remapped : std::uint8_t { Positive, Negative, Exclude };

std::string_view task_name(Task t);  // "wake" / "rem"
Task parse_task(std::string_view s);

/// WAKE_VS_SLEEP: wake positive, any sleep stage negative.
/// REM_VS_NREM: REM positive, N1-N3 negative, wake excluded.
/// Unknown is always excluded.
Remapped remap_label(Stage stage, Task task);

struct Example {
  std::vector<double> input;  // raw bpm
  std::uint32_t epoch_index = 0;
  Stage stage = Stage::Unknown;
  bool positive = false;
  std::string subject_id;
};

namespace reject_reason {
inline constexpr const char* kExcludedByTask = "excluded by task";
}

struct Cohort {
  Task task = Task::WakeVsSleep;
  CohortRole role = CohortRole::Training;
  int context_seconds = 300;
  std::vector<Example> examples;
  std::map<std::string, std::vector<std::size_t>> by_subject;
  std::map<std::string, SubjectMeta> meta;
  std::map<std::string, RejectionLedger> ledger;  // per subject

  std::size_t positives() const;
  std::size_t negatives() const { return examples.size() - positives(); }
  std::vector<std::string> subject_ids() const;
  void reindex();
};

/// Remaps window labels for `task`; windows whose label the task excludes
/// are counted in the ledger.
Cohort build_cohort(std::span<const ContextWindow> windows, Task task, CohortRole role,
                    int context_seconds);

struct SubjectRule {
  enum class Kind : std::uint8_t { None, MinWakeFraction, MinRemRatio } kind = Kind::None;
  double threshold = 0.10;

  static SubjectRule none() { return {}; }
  static SubjectRule min_wake_fraction(double t = 0.10) { return {Kind::MinWakeFraction, t}; }
  static SubjectRule min_rem_ratio(double t = 0.10) { return {Kind::MinRemRatio, t}; }
};

std::string describe(const SubjectRule& rule);
SubjectRule parse_subject_rule(std::string_view name, double threshold);

/// Drops whole subjects failing the rule. Fractions count the subject's
/// scored epochs present in the cohort. Validation cohorts pass through
/// unchanged. Throws CohortError when nothing is left.
Cohort filter_subjects(const Cohort& cohort, const SubjectRule& rule);

struct ClassStats {
  std::size_t total = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double positive_fraction = 0.0;                        // [0, 1]
  std::map<std::string, double> subject_positive_percent;  // w, in percent

  /// Fraction rounded to three decimals, as reported.
  double positive_fraction_3dp() const;
};

ClassStats class_stats(const Cohort& cohort);

/// Throws CohortError if any subject appears in both cohorts.
void assert_disjoint_subjects(const Cohort& training, const Cohort& validation);

// --- manifest --------------------------------------------------------------

nlohmann::json meta_to_json(const SubjectMeta& m);
/// ConfigError on a negative AHI.
SubjectMeta meta_from_json(const std::string& id, const nlohmann::json& j);

struct ManifestSubject {
  std::string id;
  std::string windows_path;  // relative to the manifest directory, or absolute
  SubjectMeta meta;
  RejectionLedger ledger;
};

struct Manifest {
  Task task = Task::WakeVsSleep;
  CohortRole role = CohortRole::Training;
  int context_seconds = 300;
  SubjectRule filter;
  std::vector<ManifestSubject> subjects;
  std::string config_hash;
};

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

/// Loads every windows file referenced by the manifest at `path`, builds the
/// cohort for its task and applies its subject filter.
Cohort load_cohort(const std::string& path);

}  // namespace somn
