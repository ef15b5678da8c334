#include "somn/beat_detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "somn/errors.hpp"
#include "somn/filter.hpp"

namespace somn {

BeatSeries detect_beats(const Channel& channel, const DetectorParams& params, BeatSource source) {
  const double fs = channel.sampling_rate;
  if (fs < 100.0)
    throw DetectError("beat detection needs a sampling rate of at least 100 Hz");
  const auto w_short = static_cast<std::size_t>(std::lround(params.short_window_s * fs));
  const auto w_long = static_cast<std::size_t>(std::lround(params.long_window_s * fs));
  if (w_short < 1 || w_long <= w_short)
    throw DetectError("detector windows must satisfy 0 < short < long");
  if (channel.samples.size() < w_long)
    throw DetectError("signal shorter than the long averaging window");

  BeatSeries out;
  out.source = source;

  const auto& x = channel.samples;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  const bool flat = std::all_of(x.begin(), x.end(), [&](double v) { return v == mean; });
  if (flat) {
    out.flat_signal = true;
    return out;
  }

  std::vector<double> energy = dsp::bandpass_filtfilt(x, fs, params.low_hz, params.high_hz);
  for (double& v : energy) {
    if (params.clip_negative && v < 0.0) v = 0.0;
    v *= v;
  }
  const double offset = params.beta * std::accumulate(energy.begin(), energy.end(), 0.0) /
                        static_cast<double>(energy.size());
  const auto ma_event = dsp::moving_average(energy, w_short);
  const auto ma_beat = dsp::moving_average(energy, w_long);

  const std::size_t n = energy.size();
  std::size_t i = 0;
  while (i < n) {
    if (!(ma_event[i] > ma_beat[i] + offset)) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n && ma_event[i] > ma_beat[i] + offset) ++i;
    if (i - start >= w_short) {
      const auto peak = std::max_element(energy.begin() + static_cast<std::ptrdiff_t>(start),
                                         energy.begin() + static_cast<std::ptrdiff_t>(i));
      const auto idx = static_cast<std::size_t>(peak - energy.begin());
      if (*peak > 0.0) out.times.push_back(static_cast<double>(idx) / fs);
    }
  }
  out.gap_before.assign(out.times.size(), false);
  return out;
}

BeatSeries detect_r_peaks(const Channel& ecg, const DetectorParams& params) {
  return detect_beats(ecg, params, BeatSource::Ecg);
}

BeatSeries detect_ppg_peaks(const Channel& ppg, const DetectorParams& params) {
  return detect_beats(ppg, params, BeatSource::Ppg);
}

namespace {

// Reference interval for each beat: median of the five valid intervals
// nearest to it (its own included), shifted inward at the series ends.
std::vector<double> reference_intervals(const BeatSeries& b) {
  std::vector<double> valid;
  std::vector<std::size_t> pos(b.size(), 0);
  for (std::size_t i = 1; i < b.size(); ++i) {
    pos[i] = valid.size();
    if (!b.gap_before[i]) valid.push_back(b.times[i] - b.times[i - 1]);
  }
  std::vector<double> ref(b.size(), 0.0);
  if (valid.empty()) return ref;
  const std::size_t m = valid.size();
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (b.gap_before[i]) continue;
    const std::size_t p = pos[i];
    std::size_t lo = p >= 2 ? p - 2 : 0;
    std::size_t hi = std::min(m, lo + 5);
    lo = hi >= 5 ? hi - 5 : 0;
    ref[i] = dsp::median({valid.begin() + static_cast<std::ptrdiff_t>(lo),
                          valid.begin() + static_cast<std::ptrdiff_t>(hi)});
  }
  return ref;
}

}  // namespace

CleanedBeats clean_beats_report(const BeatSeries& beats, const ArtifactRule& rule) {
  if (beats.size() < 5)
    throw ArtifactError("artifact rejection needs at least 5 beats, got " +
                        std::to_string(beats.size()));
  CleanedBeats result;
  result.report.input_beats = beats.size();
  BeatSeries cur = beats;
  if (cur.gap_before.size() != cur.times.size()) cur.gap_before.assign(cur.times.size(), false);

  for (;;) {
    ++result.report.passes;
    const auto ref = reference_intervals(cur);
    BeatSeries next;
    next.source = cur.source;
    next.flat_signal = cur.flat_signal;
    next.times.push_back(cur.times[0]);
    next.gap_before.push_back(cur.gap_before[0]);
    bool changed = false;
    for (std::size_t i = 1; i < cur.size(); ++i) {
      const double rri = cur.times[i] - next.times.back();
      bool gap = cur.gap_before[i];
      if (!gap) {
        if (rri < rule.low_ratio * ref[i] || rri < rule.min_rri_s) {
          ++result.report.removed_too_close;
          changed = true;
          continue;
        }
        if (rri > rule.high_ratio * ref[i] || rri > rule.max_rri_s) {
          ++result.report.flagged_too_far;
          gap = true;
          changed = true;
        }
      }
      next.times.push_back(cur.times[i]);
      next.gap_before.push_back(gap);
    }
    cur = std::move(next);
    if (!changed) break;
  }
  result.beats = std::move(cur);
  return result;
}

}  // namespace somn
