#pragma once

#include <string>
#include <string_view>

#include "somn/beat_detect.hpp"
#include "somn/cohort.hpp"
#include "somn/config.hpp"
#include "somn/ihr.hpp"
#include "somn/nn/train.hpp"

namespace somn {

/// EDF when the path ends in .edf (any case), otherwise one sample per line
/// at subject.sampling_rate (ConfigError when that is missing).
Recording load_signal(const SubjectSource& subject);

/// The named channel, or the first one whose label mentions the modality
/// (ECG/EKG, PPG/PLETH), or the only channel. ParseError otherwise.
const Channel& pick_channel(const Recording& rec, const std::string& label, BeatSource modality);

struct SubjectRun {
  CleanedBeats cleaned;
  IhrSeries ihr;
  CutResult cut;
};

/// Signal -> beats -> cleaned beats -> 4 Hz IHR -> labelled windows.
SubjectRun process_subject(const SubjectSource& subject, const RunConfig& cfg);

/// Runs process_subject for every configured subject, writes one windows
/// file per subject plus manifest.json into `out_dir`, and returns the
/// manifest.
Manifest ingest_subjects(const RunConfig& cfg, const std::string& out_dir);

/// Median-normalized network inputs with their labels.
nn::TrainingSet training_set(const Cohort& cohort);

/// `time_s,gap_before`; times print in their shortest exact form.
std::string beats_to_csv(const BeatSeries& beats);
BeatSeries beats_from_csv(std::string_view text, BeatSource source);

/// `t,bpm` on the 4 Hz grid.
std::string ihr_to_csv(const IhrSeries& series);
IhrSeries ihr_from_csv(std::string_view text);

}  // namespace somn
