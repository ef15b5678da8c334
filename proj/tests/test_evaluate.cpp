#include <doctest.h>

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "somn/errors.hpp"
#include "somn/evaluate.hpp"
#include "somn/pipeline.hpp"
#include "synth.hpp"

using namespace somn;
using namespace somn::eval;

namespace {

std::vector<Prediction> eight() {
  // subject, truth, predicted, score
  struct R {
    const char* id;
    bool truth, pred;
    double score;
  };
  const R rows[] = {{"A", true, true, 0.9},   {"A", true, false, 0.4},  {"A", false, false, 0.3},
                    {"A", false, false, 0.1}, {"B", true, true, 0.8},   {"B", false, true, 0.6},
                    {"B", false, false, 0.2}, {"B", false, false, 0.45}};
  std::vector<Prediction> out;
  std::uint32_t e = 0;
  for (const auto& r : rows) out.push_back({r.id, e++, r.truth ? Stage::Wake : Stage::N2, r.truth, r.score, r.pred});
  return out;
}

}  // namespace

TEST_CASE("evaluation of a hand-built eight-example fixture") {
  Cohort cohort;
  cohort.meta["A"].ahi = 5.0;
  const auto e = evaluate(eight(), cohort, true);
  const auto j = evaluation_json(e, cohort, "0123456789abcdef");
  CHECK(j["TP"] == 2);
  CHECK(j["FP"] == 1);
  CHECK(j["TN"] == 4);
  CHECK(j["FN"] == 1);
  CHECK(j["SE"].get<double>() == doctest::Approx(200.0 / 3.0));
  CHECK(j["SP"].get<double>() == doctest::Approx(80.0));
  CHECK(j["ACC"].get<double>() == doctest::Approx(75.0));
  CHECK(j["PR"].get<double>() == doctest::Approx(200.0 / 3.0));
  CHECK(j["F1"].get<double>() == doctest::Approx(2.0 / 3.0));
  CHECK(j["Kappa"].get<double>() == doctest::Approx(7.0 / 15.0));
  CHECK(j["AUC"].get<double>() == doctest::Approx(13.0 / 15.0));
  CHECK(j["in_sample"] == true);
  CHECK(j["subjects"] == 2);
  CHECK(j["config_hash"] == "0123456789abcdef");
  CHECK(j["regression"]["f1_vs_positive_percent"].is_null());  // two subjects only

  REQUIRE(e.subjects.size() == 2);
  const auto& a = e.subjects[0];
  CHECK(a.subject_id == "A");
  CHECK(a.report.cm == metrics::ConfusionMatrix{1, 0, 2, 1});
  CHECK(*a.report.summary.kappa == doctest::Approx(0.5));
  CHECK(*a.report.auc == 1.0);
  CHECK(a.positive_percent == 50.0);
  CHECK(*a.ahi == 5.0);
  const auto& b = e.subjects[1];
  CHECK(b.report.cm == metrics::ConfusionMatrix{1, 1, 2, 0});
  CHECK(*b.report.summary.precision == 0.5);
  CHECK(b.positive_percent == 25.0);
  CHECK_FALSE(b.ahi.has_value());

  const auto csv = subjects_csv(e.subjects);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("\nB,4,1,1,2,0,100,") != std::string::npos);
  CHECK(roc_csv(e.roc).rfind("fpr,tpr\n0,0\n", 0) == 0);
}

TEST_CASE("single-class subjects report AUC as undefined") {
  auto preds = eight();
  for (auto& p : preds)
    if (p.subject_id == "B") p.truth = false;
  const auto rows = per_subject_report(preds, Cohort{});
  CHECK_FALSE(rows[1].report.auc.has_value());
  CHECK_FALSE(rows[1].report.summary.sensitivity.has_value());
  CHECK(rows[1].positive_percent == 0.0);
  CHECK(subjects_csv(rows).find("\nB,4,0,2,2,0,,") != std::string::npos);
}

TEST_CASE("F1 regression over subjects") {
  std::vector<Prediction> preds;
  std::uint32_t e = 0;
  // subject k has k+1 positives of 6, all classified correctly except one negative
  for (int k = 0; k < 4; ++k) {
    const std::string id = "S" + std::to_string(k);
    for (int i = 0; i < 6; ++i) {
      const bool truth = i <= k;
      preds.push_back({id, e++, Stage::Wake, truth, truth ? 0.9 : 0.1, truth || i == 5});
    }
  }
  const auto ev = evaluate(preds, Cohort{}, false);
  REQUIRE(ev.f1_vs_positive_percent.has_value());
  CHECK(ev.f1_vs_positive_percent->n == 4);
  CHECK(ev.f1_vs_positive_percent->slope > 0.0);
  CHECK_FALSE(ev.f1_vs_ahi.has_value());
}

TEST_CASE("beats and IHR CSV round trips") {
  BeatSeries b;
  b.times = {0.5, 1.25, 2.0000004, 3.5};
  b.gap_before = {false, false, false, true};
  const auto csv = beats_to_csv(b);
  CHECK(csv == "time_s,gap_before\n0.5,0\n1.25,0\n2.0000004,0\n3.5,1\n");
  const auto back = beats_from_csv(csv, BeatSource::Ppg);
  CHECK(back.times == b.times);
  CHECK(back.gap_before == b.gap_before);
  CHECK(back.source == BeatSource::Ppg);
  CHECK_THROWS_AS(beats_from_csv("1.0,0\n0.5,0\n", BeatSource::Ecg), ParseError);
  CHECK_THROWS_AS(beats_from_csv("1.0,2\n", BeatSource::Ecg), ParseError);

  IhrSeries s;
  s.t0 = 0.75;
  s.values = {60.0, 61.5, 63.25, 1.0 / 3.0};
  const auto ihr = ihr_from_csv(ihr_to_csv(s));
  CHECK(ihr.t0 == 0.75);
  CHECK(ihr.values == s.values);
  CHECK_THROWS_AS(ihr_from_csv("t,bpm\n0,60\n0.3,61\n"), ParseError);
  CHECK_THROWS_AS(ihr_from_csv("t,bpm\n0,abc\n"), ParseError);
}

TEST_CASE("channel selection") {
  Recording rec;
  rec.channels.push_back({"EEG C3", 100, {}, "uV"});
  rec.channels.push_back({"ECG II", 256, {}, "mV"});
  rec.channels.push_back({"Pleth", 64, {}, ""});
  CHECK(pick_channel(rec, "", BeatSource::Ecg).label == "ECG II");
  CHECK(pick_channel(rec, "", BeatSource::Ppg).label == "Pleth");
  CHECK(pick_channel(rec, "EEG C3", BeatSource::Ecg).label == "EEG C3");
  CHECK_THROWS_AS(pick_channel(rec, "EMG", BeatSource::Ecg), ParseError);
  rec.channels.erase(rec.channels.begin() + 1, rec.channels.end());
  CHECK(pick_channel(rec, "", BeatSource::Ecg).label == "EEG C3");
  rec.channels.push_back({"EOG", 100, {}, ""});
  CHECK_THROWS_AS(pick_channel(rec, "", BeatSource::Ecg), ParseError);
}

TEST_CASE("ingest of a synthetic recording") {
  Rng rng(71);
  const double dur = 600.0, fs = 256.0;
  const auto beats = synth::beat_train(dur, 66.0, rng);
  const auto w = synth::ecg(beats, dur, fs, 25.0, rng);
  const auto dir = std::filesystem::temp_directory_path() / "somn_ingest_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto edf = synth::write_edf("X", {{"ECG", fs, w.samples, -5.0, 5.0}});
  {
    std::ofstream f(dir / "x.edf", std::ios::binary);
    f.write(reinterpret_cast<const char*>(edf.data()), static_cast<std::streamsize>(edf.size()));
  }
  std::vector<std::string> labels;
  for (int e = 0; e < 20; ++e) labels.push_back(e % 4 == 0 ? "W" : (e % 4 == 1 ? "R" : "2"));
  labels[3] = "?";
  std::ofstream(dir / "x.txt") << synth::hypnogram_text(labels);

  RunConfig cfg;
  cfg.context_seconds = 120;
  cfg.subjects.push_back({"x", (dir / "x.edf").string(), (dir / "x.txt").string(), "", std::nullopt, {}});
  const auto m = ingest_subjects(cfg, (dir / "out").string());
  REQUIRE(m.subjects.size() == 1);
  CHECK(m.config_hash == cfg.hash());
  const auto cohort = load_cohort((dir / "out" / "manifest.json").string());
  // epochs 0..2 lack two minutes of history; epoch 3 is unscored
  std::size_t windows = cohort.examples.size();
  CHECK(windows + m.subjects[0].ledger.total() == 20);
  CHECK(m.subjects[0].ledger.counts.at(reject_reason::kUnknownLabel) == 1);
  CHECK(windows >= 15);
  CHECK(cohort.examples.front().input.size() == 480);

  cfg.subjects[0].hypnogram = (dir / "missing.txt").string();
  CHECK_THROWS_AS(ingest_subjects(cfg, (dir / "out2").string()), ParseError);
  std::filesystem::remove_all(dir);
}
