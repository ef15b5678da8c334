#include "somn/ihr.hpp"

#include <algorithm>
#include <cmath>

#include "somn/errors.hpp"
#include "somn/filter.hpp"
#include "somn/pchip.hpp"

namespace somn {

std::vector<IhrKnot> ihr_knots(const BeatSeries& beats) {
  if (beats.size() < 2) throw DomainError("IHR needs at least two beats");
  std::vector<IhrKnot> knots;
  knots.reserve(beats.size() - 1);
  for (std::size_t i = 1; i < beats.size(); ++i) {
    const double rri = beats.times[i] - beats.times[i - 1];
    if (!(rri > 0.0)) throw DomainError("beat times must be strictly increasing");
    if (!beats.gap_before.empty() && beats.gap_before[i]) continue;
    knots.push_back({beats.times[i], 60.0 / rri});
  }
  return knots;
}

IhrSeries pchip_resample(const std::vector<IhrKnot>& knots, double grid_rate) {
  if (knots.size() < 2) throw DomainError("resampling needs at least two IHR knots");
  std::vector<double> x, y;
  x.reserve(knots.size());
  y.reserve(knots.size());
  for (const auto& k : knots) {
    x.push_back(k.time);
    y.push_back(k.bpm);
  }
  const Pchip interp(std::move(x), std::move(y));

  IhrSeries out;
  const double first = std::ceil(interp.front() * grid_rate);
  const double last = std::floor(interp.back() * grid_rate);
  out.t0 = first / grid_rate;
  if (last < first) return out;
  const auto n = static_cast<std::size_t>(last - first) + 1;
  out.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.values[k] = interp((first + static_cast<double>(k)) / grid_rate);
  return out;
}

bool valid_context_seconds(int seconds) {
  return seconds == 30 || seconds == 120 || seconds == 300 || seconds == 600;
}

std::size_t RejectionLedger::total() const {
  std::size_t t = 0;
  for (const auto& [reason, n] : counts) t += n;
  return t;
}

void RejectionLedger::merge(const RejectionLedger& other) {
  for (const auto& [reason, n] : other.counts) counts[reason] += n;
}

CutResult cut_windows(const IhrSeries& series, const Hypnogram& hypnogram, int context_seconds,
                      const BeatSeries& beats) {
  if (!valid_context_seconds(context_seconds))
    throw DomainError("context must be 30, 120, 300 or 600 seconds");
  const double rate = IhrSeries::kRate;
  const auto len = static_cast<std::size_t>(context_seconds * static_cast<int>(rate));

  CutResult out;
  for (std::size_t e = 0; e < hypnogram.labels.size(); ++e) {
    const Stage label = hypnogram.labels[e];
    if (label == Stage::Unknown) {
      out.ledger.add(reject_reason::kUnknownLabel);
      continue;
    }
    const double ep_start = hypnogram.epoch_start(e);
    const double ep_end = hypnogram.epoch_end(e);
    const auto lo = std::lower_bound(beats.times.begin(), beats.times.end(), ep_start);
    const auto hi = std::lower_bound(beats.times.begin(), beats.times.end(), ep_end);
    if (hi - lo < 5) {
      out.ledger.add(reject_reason::kFewBeats);
      continue;
    }
    // Snap the window start onto the nearest grid sample.
    const double start_t = ep_end - static_cast<double>(context_seconds);
    const double offset = std::round((start_t - series.t0) * rate);
    if (offset < 0.0 || static_cast<std::size_t>(offset) + len > series.values.size()) {
      out.ledger.add(reject_reason::kNoContext);
      continue;
    }
    const auto first = series.values.begin() + static_cast<std::ptrdiff_t>(offset);
    ContextWindow w;
    w.input.assign(first, first + static_cast<std::ptrdiff_t>(len));
    w.epoch_index = static_cast<std::uint32_t>(e);
    w.label = label;
    w.subject_id = hypnogram.subject_id;
    out.windows.push_back(std::move(w));
  }
  return out;
}

std::vector<double> normalize_window(const std::vector<double>& input) {
  if (input.empty()) throw DomainError("cannot normalize an empty window");
  const double m = dsp::median(input);
  std::vector<double> out(input.size());
  std::transform(input.begin(), input.end(), out.begin(), [m](double v) { return v - m; });
  return out;
}

}  // namespace somn
