#pragma once

#include <map>
#include <string>
#include <vector>

#include "somn/beat_detect.hpp"
#include "somn/ingest.hpp"

namespace somn {

struct IhrKnot {
  double time;  // seconds
  double bpm;
};

/// Uniformly sampled instantaneous heart rate. Sample k sits at
/// t0 + k / rate seconds.
struct IhrSeries {
  static constexpr double kRate = 4.0;

  std::vector<double> values;
  double t0 = 0.0;
  BeatSource source = BeatSource::Ecg;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) / kRate; }
};

/// 60 / (r_i - r_{i-1}) at every beat i >= 2 whose interval is valid (beats
/// flagged gap_before contribute no knot).
std::vector<IhrKnot> ihr_knots(const BeatSeries& beats);

/// Evaluates the shape-preserving cubic through `knots` on the grid of
/// multiples of 1/rate seconds lying within [first knot, last knot].
IhrSeries pchip_resample(const std::vector<IhrKnot>& knots, double grid_rate = IhrSeries::kRate);

/// Context lengths supported by the network (seconds).
bool valid_context_seconds(int seconds);

struct ContextWindow {
  std::vector<double> input;  // raw bpm, context_seconds * 4 samples
  std::uint32_t epoch_index = 0;
  Stage label = Stage::Unknown;
  std::string subject_id;
};

namespace reject_reason {
inline constexpr const char* kUnknownLabel = "unknown or artifact label";
inline constexpr const char* kFewBeats = "fewer than five R peaks";
inline constexpr const char* kNoContext = "insufficient context";
}  // namespace reject_reason

/// Per-reason counts of excluded epochs.
struct RejectionLedger {
  std::map<std::string, std::size_t> counts;

  void add(const std::string& reason, std::size_t n = 1) { counts[reason] += n; }
  std::size_t total() const;
  void merge(const RejectionLedger& other);
};

struct CutResult {
  std::vector<ContextWindow> windows;
  RejectionLedger ledger;
};

/// One window per usable hypnogram epoch, ending at the epoch's end.
/// windows + ledger entries always equal the hypnogram length.
CutResult cut_windows(const IhrSeries& series, const Hypnogram& hypnogram, int context_seconds,
                      const BeatSeries& beats);

/// Subtracts the median (mean of the two central values for even lengths).
std::vector<double> normalize_window(const std::vector<double>& input);

}  // namespace somn
