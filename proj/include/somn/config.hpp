#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "somn/beat_detect.hpp"
#include "somn/cohort.hpp"
#include "somn/ingest.hpp"
#include "somn/nn/train.hpp"
#include "somn/scattering.hpp"
#include "somn/st_head.hpp"

namespace somn {

struct SubjectSource {
  std::string id;
  std::string signal;     // EDF or CSV path
  std::string hypnogram;  // one label per 30 s epoch
  std::string channel;    // EDF signal label; empty picks by modality
  std::optional<double> sampling_rate;  // required for CSV signals
  SubjectMeta meta;
};

/// Everything a pipeline run depends on. Loaded from one JSON file and then
/// overridden by command-line flags.
struct RunConfig {
  Task task = Task::WakeVsSleep;
  int context_seconds = 300;
  BeatSource modality = BeatSource::Ecg;
  std::optional<std::uint64_t> seed;
  CohortRole role = CohortRole::Training;
  SubjectRule filter;
  nlohmann::json detector_overrides = nlohmann::json::object();
  ArtifactRule artifact;
  nn::TrainConfig train;
  std::map<std::string, std::string> vocabulary;  // extra label spellings -> stage name
  std::vector<SubjectSource> subjects;
  std::size_t scattering_scale = 128;
  std::size_t st_iterations = 200;
  std::size_t interpret_t = 18;  // 1-based output sample
  std::size_t interpret_k = 400;
  double stage_threshold = 3.0;
  // not part of the hash: they do not change any output
  std::string output_dir = "out";
  int threads = 0;

  DetectorParams detector() const;
  LabelVocabulary label_vocabulary() const;
  std::uint64_t require_seed() const;  // ConfigError when absent

  /// Canonical form of every output-affecting field.
  nlohmann::json to_json() const;
  /// 16 hex digits of FNV-1a over the canonical JSON.
  std::string hash() const;
  void validate() const;
};

/// ConfigError on unknown keys, wrong types or invalid values.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// "30s", "2m", "5m", "10m" or a plain number of seconds.
int parse_context(const std::string& text);
std::string context_label(int seconds);
BeatSource parse_modality(const std::string& text);
std::string_view modality_name(BeatSource s);
Stage parse_stage_name(const std::string& text);

}  // namespace somn
