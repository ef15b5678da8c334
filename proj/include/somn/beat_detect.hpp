#pragma once

#include <cstddef>
#include <vector>

#include "somn/ingest.hpp"

namespace somn {

enum class BeatSource : std::uint8_t { Ecg, Ppg };

/// Detected beats in seconds from recording start.
///
/// `gap_before[i]` marks a beat whose interval to beat i-1 is not a valid
/// RR interval (the cleaner found it too long: a missed beat or a pause).
/// Such beats stay in the series as anchors but contribute no IHR knot.
struct BeatSeries {
  std::vector<double> times;
  std::vector<bool> gap_before;
  BeatSource source = BeatSource::Ecg;
  bool flat_signal = false;

  std::size_t size() const { return times.size(); }
};

/// Parameters of the two-moving-average event detector.
struct DetectorParams {
  double low_hz;
  double high_hz;
  double short_window_s;  // QRS / systolic-peak scale
  double long_window_s;   // beat scale
  double beta;            // offset as a fraction of mean(energy)
  bool clip_negative;     // PPG: keep only the positive lobe before squaring

  static DetectorParams ecg() { return {8.0, 20.0, 0.097, 0.611, 0.08, false}; }
  static DetectorParams ppg() { return {0.5, 8.0, 0.111, 0.667, 0.02, true}; }
};

BeatSeries detect_r_peaks(const Channel& ecg, const DetectorParams& params = DetectorParams::ecg());
BeatSeries detect_ppg_peaks(const Channel& ppg, const DetectorParams& params = DetectorParams::ppg());

/// Shared implementation behind both detectors.
BeatSeries detect_beats(const Channel& channel, const DetectorParams& params, BeatSource source);

struct ArtifactRule {
  double low_ratio = 0.7;
  double high_ratio = 1.3;
  double min_rri_s = 0.3;
  double max_rri_s = 2.0;
};

struct CleaningReport {
  std::size_t input_beats = 0;
  std::size_t removed_too_close = 0;
  std::size_t flagged_too_far = 0;
  std::size_t passes = 0;
};

struct CleanedBeats {
  BeatSeries beats;
  CleaningReport report;
};

/// 5-beat median artifact rejection.
///
/// A pass walks the beats left to right. Each beat's interval is measured
/// from the last beat kept so far and compared against the median of the
/// five valid intervals centred on it. Too-short intervals drop the beat;
/// too-long ones mark it with gap_before. Passes repeat until nothing
/// changes, so the result is a fixed point and cleaning is idempotent.
CleanedBeats clean_beats_report(const BeatSeries& beats, const ArtifactRule& rule = {});

inline BeatSeries clean_beats(const BeatSeries& beats, const ArtifactRule& rule = {}) {
  return clean_beats_report(beats, rule).beats;
}

}  // namespace somn
