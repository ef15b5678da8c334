#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "somn/ihr.hpp"
#include "somn/ingest.hpp"
#include "somn/rng.hpp"

namespace synth {

struct EdfSignal {
  std::string label;
  double sampling_rate;  // must make record_seconds * rate an integer
  std::vector<double> samples;
  double physical_min;
  double physical_max;
  int digital_min = -32768;
  int digital_max = 32767;
  std::string unit = "mV";
};

/// Minimal EDF writer; the digital values are the rounded inverse of the
/// physical mapping.
std::vector<std::uint8_t> write_edf(const std::string& patient, const std::vector<EdfSignal>& signals,
                                    double record_seconds = 1.0, const std::string& reserved = "");

/// Beat times with a slowly wandering rate plus small beat-to-beat jitter.
std::vector<double> beat_train(double duration_s, double mean_bpm, somn::Rng& rng, double start_s = 0.3);

struct Waveform {
  std::vector<double> samples;
  std::vector<double> peaks;  // ground-truth R peaks or systolic peaks (s)
};

/// Sum-of-Gaussians PQRST complexes at the given beats, white noise at
/// `snr_db` relative to the clean signal power.
Waveform ecg(const std::vector<double>& beats, double duration_s, double fs, double snr_db, somn::Rng& rng);

/// Systolic pulse plus dicrotic wave; the peak is the maximum of the pulse.
Waveform ppg(const std::vector<double>& beats, double duration_s, double fs, double snr_db, somn::Rng& rng);

/// Matches detections to truth within `tolerance_s`, one-to-one.
struct Match {
  std::size_t true_positive = 0, false_positive = 0, false_negative = 0;
  double recall() const;
  double precision() const;
};
Match match_peaks(const std::vector<double>& truth, const std::vector<double>& detected, double tolerance_s);

/// Separable toy cohort: positives carry a 0.25 Hz, +-15 bpm burst,
/// negatives are flat around 60 bpm. Raw bpm, length `n`.
std::vector<double> burst_window(std::size_t n, somn::Rng& rng);
std::vector<double> flat_window(std::size_t n, somn::Rng& rng);

/// Hypnogram CSV `epoch,label` with a header line.
std::string hypnogram_text(const std::vector<std::string>& labels);

}  // namespace synth
