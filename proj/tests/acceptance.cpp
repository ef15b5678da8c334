// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "somn/beat_detect.hpp"
#include "somn/cohort.hpp"
#include "somn/evaluate.hpp"
#include "somn/ihr.hpp"
#include "somn/interpret.hpp"
#include "somn/metrics.hpp"
#include "somn/nn/model_io.hpp"
#include "somn/nn/train.hpp"
#include "somn/pchip.hpp"
#include "somn/scattering.hpp"
#include "synth.hpp"

using namespace somn;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double s = seconds_since(t0);
  std::printf("%s criterion %d (%s) %.2fs%s%s\n", o.pass ? "PASS" : "FAIL", id, name, s,
              o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// --- shared fixture: 50 oscillation-burst windows, 50 flat ones --------------

constexpr std::uint64_t kSeed = 7;

std::vector<ContextWindow> separable_windows(std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "fixture");
  std::vector<ContextWindow> w;
  for (std::uint32_t i = 0; i < 50; ++i) w.push_back({synth::burst_window(1200, rng), i, Stage::Wake, "burst"});
  for (std::uint32_t i = 0; i < 50; ++i) w.push_back({synth::flat_window(1200, rng), i, Stage::N2, "flat"});
  return w;
}

nn::TrainingSet as_training_set(const Cohort& c) {
  nn::TrainingSet s;
  for (const auto& e : c.examples) {
    s.inputs.push_back(normalize_window(e.input));
    s.positive.push_back(e.positive);
  }
  return s;
}

const Cohort& fixture_cohort() {
  static const Cohort c = [] {
    const auto w = separable_windows(kSeed);
    return build_cohort(w, Task::WakeVsSleep, CohortRole::Training, 300);
  }();
  return c;
}

// Trained once by criterion 4 and reused by criterion 11.
std::optional<nn::TrainResult> trained;

// --- 1 ----------------------------------------------------------------------

Outcome metric_oracle() {
  Outcome o;
  auto near = [&](const std::optional<double>& v, double want, double tol, const char* name) {
    o.require(v.has_value() && std::abs(*v - want) <= tol,
              std::string(name) + (v ? fmt(" = %.5f, want %.5f", *v, want) : " undefined"));
  };
  const auto val = metrics::summary({1800, 1763, 14906, 1633});
  near(val.sensitivity, 0.524, 0.0005, "validation SE");
  near(val.specificity, 0.894, 0.0005, "validation SP");
  near(val.accuracy, 0.831, 0.0005, "validation ACC");
  near(val.precision, 0.505, 0.0005, "validation PR");
  near(val.f1, 0.51, 0.005, "validation F1");
  near(val.kappa, 0.41, 0.005, "validation kappa");
  const auto tr = metrics::summary({4464, 2143, 31550, 3315});
  near(tr.sensitivity, 0.574, 0.0005, "training SE");
  near(tr.specificity, 0.936, 0.0005, "training SP");
  near(tr.accuracy, 0.868, 0.0005, "training ACC");
  near(tr.kappa, 0.54, 0.005, "training kappa");
  return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome shape_cascade() {
  Outcome o;
  const std::size_t lens[] = {120, 480, 1200, 2400}, blocks[] = {3, 4, 5, 6}, out[] = {15, 30, 38, 38};
  for (int i = 0; i < 4; ++i) {
    const auto spec = nn::ArchitectureSpec::for_input(lens[i]);
    o.require(spec.n_blocks == blocks[i], "block count for " + std::to_string(lens[i]));
    o.require(spec.final_length() == out[i], "final length for " + std::to_string(lens[i]));
    const auto model = nn::CnnModel::initialize(spec, 1);
    const auto y = nn::conv_features(model, std::vector<double>(lens[i], 0.5));
    o.require(y.size() == out[i] * 10, "conv output size for " + std::to_string(lens[i]) + ": " +
                                           std::to_string(y.size()));
  }
  return o;
}

// --- 3 ----------------------------------------------------------------------

Outcome gradient_check() {
  Outcome o;
  auto spec = nn::ArchitectureSpec::for_input(1200);
  spec.dropout_p = 0.0;
  const auto model = nn::CnnModel::initialize(spec, 2024);
  Rng rng(99);
  const auto x = normalize_window(synth::burst_window(1200, rng));
  const auto t0 = Clock::now();
  const auto g = synth::check_gradient(model, x, true);
  const double s = seconds_since(t0);
  o.detail = fmt("max relative error %.3g over %.0f parameters", g.max_rel_error, double(g.checked));
  if (g.skipped_kinks) o.detail += ", " + std::to_string(g.skipped_kinks) + " ReLU kinks skipped";
  o.require(g.checked + g.skipped_kinks == nn::ParamLayout(spec).total, "not every parameter was visited");
  o.require(g.skipped_kinks == 0, o.detail);
  o.require(g.max_rel_error < 1e-5, o.detail);
  o.require(s < 60.0, fmt("took %.1f s", s));
  return o;
}

// --- 4 ----------------------------------------------------------------------

Outcome trainability() {
  Outcome o;
  const auto data = as_training_set(fixture_cohort());
  nn::TrainConfig cfg;  // lr 1e-3, batch 24, 180 epochs
  cfg.seed = kSeed;
  const auto t0 = Clock::now();
  trained = nn::train(nn::CnnModel::initialize(nn::ArchitectureSpec::for_input(1200), kSeed), data, cfg);
  const double s = seconds_since(t0);
  const double acc = trained->log.back().train_accuracy;
  o.detail = fmt("training accuracy %.1f%% after 180 epochs, loss %.4f", 100.0 * acc, trained->log.back().mean_loss);
  o.require(trained->log.size() == 180, "epoch count");
  o.require(acc >= 0.95, o.detail);
  o.require(s < 600.0, fmt("took %.0f s", s));
  return o;
}

// --- 5 ----------------------------------------------------------------------

struct RunBytes {
  std::vector<std::uint8_t> model;
  std::string metrics;
};

RunBytes run_once(int threads) {
  omp_set_num_threads(threads);
  const Cohort& c = fixture_cohort();
  nn::TrainConfig cfg;
  cfg.epochs = 6;
  cfg.seed = kSeed;
  const auto r = nn::train(nn::CnnModel::initialize(nn::ArchitectureSpec::for_input(1200), kSeed),
                           as_training_set(c), cfg);
  const auto preds = eval::predict_cohort(r.model, c);
  const auto e = eval::evaluate(preds, c, true);
  return {nn::encode_model(r.model), eval::evaluation_json(e, c, "fixed").dump(2)};
}

Outcome determinism() {
  Outcome o;
  const int before = omp_get_max_threads();
  const auto a = run_once(1), b = run_once(1), c = run_once(4);
  omp_set_num_threads(before);
  o.require(a.model == b.model, "model bytes differ between two single-thread runs");
  o.require(a.metrics == b.metrics, "metrics JSON differs between two single-thread runs");
  o.require(a.model == c.model, "model bytes differ between 1 and 4 workers");
  o.require(a.metrics == c.metrics, "metrics JSON differs between 1 and 4 workers");
  return o;
}

// --- 6 ----------------------------------------------------------------------

Outcome auc_oracle() {
  Outcome o;
  Rng rng(6);
  std::vector<double> scores(200);
  std::vector<bool> pos(200);
  for (std::size_t i = 0; i < 200; ++i) {
    // coarse grid so ties occur
    scores[i] = std::round(rng.uniform() * 40.0) / 40.0;
    pos[i] = rng.uniform() < 0.4 + 0.3 * scores[i];
  }
  double credit = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t k = 0; k < 200; ++k)
      if (pos[i] && !pos[k]) {
        pairs += 1.0;
        credit += scores[i] > scores[k] ? 1.0 : scores[i] == scores[k] ? 0.5 : 0.0;
      }
  const double auc = metrics::roc_auc(scores, pos).auc;
  o.require(std::abs(auc - credit / pairs) <= 1e-12, fmt("trapezoid %.15f vs pairs %.15f", auc, credit / pairs));

  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    const double shift = rng.uniform(0.0, 2.0);
    for (double& v : a) v = rng.normal() + shift;
    for (double& v : b) v = rng.normal();
    worst = std::max(worst, std::abs(metrics::rank_sum_exact(a, b).p_value - metrics::rank_sum_normal(a, b).p_value));
  }
  o.require(worst <= 0.01, fmt("exact vs normal differ by %.4f", worst));
  if (o.pass) o.detail = fmt("largest exact vs normal gap %.4f", worst);
  return o;
}

// --- 7 ----------------------------------------------------------------------

Outcome pchip_suite() {
  Outcome o;
  Rng rng(7);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const std::size_t n = 2 + rng.below(12);
    std::vector<double> x{rng.uniform(0.0, 5.0)}, y{rng.uniform(40.0, 120.0)};
    for (std::size_t i = 1; i < n; ++i) {
      x.push_back(x.back() + rng.uniform(0.05, 2.0));
      y.push_back(rng.uniform() < 0.2 ? y.back() : y.back() + rng.uniform(-30.0, 30.0));
    }
    const Pchip p(x, y);
    for (std::size_t i = 0; i < n; ++i) o.require(p(x[i]) == y[i], "knot value not reproduced");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double prev = y[i];
      for (int s = 1; s <= 25; ++s) {
        const double v = p(x[i] + (x[i + 1] - x[i]) * s / 25.0);
        if (y[i + 1] > y[i]) o.require(v >= prev, "increasing segment decreased");
        if (y[i + 1] < y[i]) o.require(v <= prev, "decreasing segment increased");
        if (y[i + 1] == y[i]) o.require(v == y[i], "flat segment moved");
        prev = v;
      }
    }
  }
  // linear data on a grid where every value is exactly representable
  std::vector<double> x, y;
  for (int i = 0; i <= 40; ++i) {
    x.push_back(0.25 * i);
    y.push_back(60.0 + 2.0 * x.back());
  }
  const Pchip line(x, y);
  for (int k = 0; k <= 160; ++k) {
    const double t = k / 16.0;
    o.require(line(t) == 60.0 + 2.0 * t, fmt("linear data not reproduced at t = %.4f", t));
  }
  return o;
}

// --- 8 ----------------------------------------------------------------------

Channel channel(std::vector<double> samples, double fs, const char* label) {
  Channel c;
  c.label = label;
  c.sampling_rate = fs;
  c.samples = std::move(samples);
  return c;
}

Outcome beat_detection() {
  Outcome o;
  double worst = 1.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    const auto beats = synth::beat_train(300.0, 65.0, rng);
    const auto ecg = synth::ecg(beats, 300.0, 200.0, 20.0, rng);
    const auto m = synth::match_peaks(ecg.peaks, detect_r_peaks(channel(ecg.samples, 200.0, "ECG")).times, 0.05);
    const auto ppg = synth::ppg(beats, 300.0, 125.0, 20.0, rng);
    const auto q = synth::match_peaks(ppg.peaks, detect_ppg_peaks(channel(ppg.samples, 125.0, "PPG")).times, 0.1);
    worst = std::min({worst, m.recall(), m.precision(), q.recall(), q.precision()});
  }
  o.detail = fmt("worst recall/precision %.4f", worst);
  o.require(worst >= 0.99, o.detail);

  Rng rng(11);
  const auto beats = synth::beat_train(120.0, 70.0, rng);
  const auto ecg = synth::ecg(beats, 120.0, 250.0, 20.0, rng);
  const auto ppg = synth::ppg(beats, 120.0, 125.0, 20.0, rng);
  const auto base_e = detect_r_peaks(channel(ecg.samples, 250.0, "ECG")).times;
  const auto base_p = detect_ppg_peaks(channel(ppg.samples, 125.0, "PPG")).times;
  for (double a : {0.25, 3.7, 1000.0, 1e-3}) {
    auto e = ecg.samples, p = ppg.samples;
    for (double& v : e) v *= a;
    for (double& v : p) v *= a;
    o.require(detect_r_peaks(channel(e, 250.0, "ECG")).times == base_e, fmt("ECG beats changed at scale %g", a));
    o.require(detect_ppg_peaks(channel(p, 125.0, "PPG")).times == base_p, fmt("PPG beats changed at scale %g", a));
  }
  return o;
}

// --- 9 ----------------------------------------------------------------------

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Outcome scattering_suite() {
  Outcome o;
  const scattering::ScatteringConfig cfg;
  const scattering::FilterBank bank(cfg);
  const std::size_t order0 = cfg.positions();

  double worst = 0.0;
  for (double c : {1.0, 60.0, -3.5}) {
    const auto s = scattering::scatter(bank, std::vector<double>(1200, c));
    for (std::size_t i = order0; i < s.size(); ++i) worst = std::max(worst, std::abs(s[i]));
  }
  o.require(worst < 1e-10, fmt("constant input leaves %.3g in order >= 1", worst));

  Rng rng(9);
  double ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1200), y(1200);
    const double sd = rng.uniform(0.1, 20.0);
    for (double& v : x) v = 60.0 + sd * rng.normal();
    for (std::size_t i = 0; i < 1200; ++i) y[i] = trial % 2 ? x[i] + 0.1 * sd * rng.normal() : 60.0 + sd * rng.normal();
    ratio = std::max(ratio, norm_diff(scattering::scatter(bank, x), scattering::scatter(bank, y)) / norm_diff(x, y));
  }
  o.require(ratio <= 1.0, fmt("expansive pair: ratio %.6f", ratio));

  double lp = 0.0;
  for (std::size_t t : {16, 64, 128, 256}) {
    scattering::ScatteringConfig c;
    c.averaging_scale = t;
    lp = std::max(lp, scattering::FilterBank(c).littlewood_paley_max());
  }
  o.require(lp <= 1.0 + 1e-6, fmt("Littlewood-Paley maximum %.9f", lp));
  if (o.pass) o.detail = fmt("largest distance ratio %.4f, Littlewood-Paley max %.6f", ratio, lp);
  return o;
}

// --- 10 ---------------------------------------------------------------------

// Trains with the standard recipe on the manifest's cohort and evaluates on
// the same cohort.
Outcome public_data(const std::string& manifest) {
  Outcome o;
  const Cohort c = load_cohort(manifest);
  nn::TrainConfig cfg;
  cfg.seed = kSeed;
  const auto spec = nn::ArchitectureSpec::for_input(static_cast<std::size_t>(c.context_seconds) * 4);
  const auto r = nn::train(nn::CnnModel::initialize(spec, kSeed), as_training_set(c), cfg);
  const auto e = eval::evaluate(eval::predict_cohort(r.model, c), c, true);
  const double acc = e.overall.summary.accuracy.value_or(0.0), auc = e.roc.auc;
  o.detail = fmt("ACC %.1f%%, AUC %.3f", 100.0 * acc, auc);
  if (e.overall.summary.kappa) o.detail += fmt(", kappa %.2f", *e.overall.summary.kappa);
  o.require(std::abs(acc - 0.851) <= 0.05 && std::abs(auc - 0.87) <= 0.05, o.detail);
  return o;
}

// --- 11 ---------------------------------------------------------------------

Outcome interpretability() {
  Outcome o;
  if (!trained) throw std::runtime_error("criterion 4 produced no model");
  const auto& model = trained->model;
  const auto data = as_training_set(fixture_cohort());
  auto acts = interpret::last_block_activations(model, data.inputs);
  o.require(acts.t_out == 38 && acts.filters == 10, "activations are not 38 x 10");

  // k = 1 returns exactly the argmax window, for every (t, j)
  for (std::size_t t = 0; t < acts.t_out; ++t)
    for (std::size_t j = 0; j < acts.filters; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < acts.n; ++i)
        if (acts.at(i, t, j) > acts.at(best, t, j)) best = i;
      if (interpret::extract_atlas(acts, data.inputs, t, j, 1) != data.inputs[best])
        o.require(false, "k = 1 atlas is not the argmax window at t = " + std::to_string(t + 1));
    }

  // label swap exchanges the two matrices exactly
  const auto m = interpret::feature_stage_tests(acts, data.positive);
  std::vector<bool> swapped(data.positive.size());
  for (std::size_t i = 0; i < swapped.size(); ++i) swapped[i] = !data.positive[i];
  const auto s = interpret::feature_stage_tests(acts, swapped);
  o.require(s.wake_logp == m.sleep_logp && s.sleep_logp == m.wake_logp, "label swap is not exact");

  // Planted fixture on the trained model's activations: pair positive i with
  // negative i + 50 and give both the same values everywhere, then lift
  // channels 2 and 7 for positives and channel 4 for negatives over the
  // final quarter.
  auto planted = acts;
  const std::size_t half = acts.n / 2;
  auto cell = [&](std::size_t i, std::size_t t, std::size_t j) -> double& {
    return planted.values[(i * acts.t_out + t) * acts.filters + j];
  };
  for (std::size_t i = 0; i < half; ++i)
    for (std::size_t t = 0; t < acts.t_out; ++t)
      for (std::size_t j = 0; j < acts.filters; ++j) cell(i + half, t, j) = cell(i, t, j);
  double spread = 0.0;
  for (double v : acts.values) spread = std::max(spread, v);
  const std::size_t from = acts.t_out - acts.t_out / 4;
  for (std::size_t i = 0; i < acts.n; ++i)
    for (std::size_t t = from; t < acts.t_out; ++t) {
      const bool positive = data.positive[i];
      for (std::size_t j : {2u, 7u})
        if (positive) cell(i, t, j) += spread + 1.0 + 0.01 * static_cast<double>(i);
      if (!positive) cell(i, t, 4) += spread + 1.0 + 0.01 * static_cast<double>(i);
    }
  const auto sets = interpret::assign_stage_sets(interpret::feature_stage_tests(planted, data.positive));
  o.require(sets.wake == std::vector<std::size_t>{2, 7}, "planted wake channels not recovered");
  o.require(sets.sleep == std::vector<std::size_t>{4}, "planted sleep channel not recovered");

  const auto real = interpret::assign_stage_sets(m);
  o.detail = "trained model: " + std::to_string(real.wake.size()) + " wake-indicative, " +
             std::to_string(real.sleep.size()) + " sleep-indicative channels";
  return o;
}

}  // namespace

int main() {
  std::printf("acceptance: %d OpenMP threads\n", omp_get_max_threads());
  report(1, "metric oracle", metric_oracle);
  report(2, "shape cascade", shape_cascade);
  report(3, "gradient correctness", gradient_check);
  report(4, "trainability", trainability);
  report(5, "determinism", determinism);
  report(6, "AUC oracle", auc_oracle);
  report(7, "PCHIP suite", pchip_suite);
  report(8, "beat detection", beat_detection);
  report(9, "scattering suite", scattering_suite);
  if (const char* manifest = std::getenv("SOMN_PUBLIC_MANIFEST"); manifest && *manifest)
    report(10, "public data, in-sample", [manifest] { return public_data(manifest); });
  else
    std::printf("SKIP criterion 10 (public data): SOMN_PUBLIC_MANIFEST is not set\n");
  report(11, "interpretability", interpretability);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
