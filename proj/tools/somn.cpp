#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "somn/byte_io.hpp"
#include "somn/cohort.hpp"
#include "somn/config.hpp"
#include "somn/errors.hpp"
#include "somn/evaluate.hpp"
#include "somn/interpret.hpp"
#include "somn/nn/model_io.hpp"
#include "somn/pipeline.hpp"
#include "somn/scattering.hpp"
#include "somn/st_head.hpp"
#include "somn/windows_io.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace somn;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitConfig = 4;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string context, task, modality, filter;
  std::optional<double> filter_threshold;
  std::optional<int> threads;
  std::string out;

  std::optional<double> lr;
  std::optional<std::size_t> batch_size, epochs;
  std::optional<std::size_t> scale, iterations, t, k;
  std::optional<double> threshold;
  bool clamp_k = false;
  std::size_t traces = 1;

  // single-file inputs
  std::string signal, hypnogram, id, channel, beats, ihr, manifest, model, features;
  std::optional<double> sampling_rate, ahi;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Seed for every random stream");
  sub->add_option("--context", o.context, "Context length")->check(CLI::IsMember({"30s", "2m", "5m", "10m"}));
  sub->add_option("--task", o.task, "Classification task")->check(CLI::IsMember({"wake", "rem"}));
  sub->add_option("--modality", o.modality, "Cardiac signal type")->check(CLI::IsMember({"ecg", "ppg"}));
  sub->add_option("--threads", o.threads, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  sub->add_option("--out", o.out, "Output file or directory");
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? config_from_json(json::object()) : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.context.empty()) cfg.context_seconds = parse_context(o.context);
  if (!o.task.empty()) cfg.task = parse_task(o.task);
  if (!o.modality.empty()) cfg.modality = parse_modality(o.modality);
  if (!o.filter.empty()) cfg.filter = parse_subject_rule(o.filter, o.filter_threshold.value_or(cfg.filter.threshold));
  else if (o.filter_threshold) cfg.filter.threshold = *o.filter_threshold;
  if (o.threads) cfg.threads = *o.threads;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.scale) cfg.scattering_scale = *o.scale;
  if (o.iterations) cfg.st_iterations = *o.iterations;
  if (o.t) cfg.interpret_t = *o.t;
  if (o.k) cfg.interpret_k = *o.k;
  if (o.threshold) cfg.stage_threshold = *o.threshold;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  return cfg;
}

std::string in_dir(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return (fs::path(cfg.output_dir) / name).string();
}

// For single-file commands --out names the file itself.
std::string out_file(const Options& o, const RunConfig& cfg, const std::string& fallback) {
  if (o.out.empty()) return in_dir(cfg, fallback);
  const fs::path p(o.out);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return o.out;
}

void write_sidecar(const std::string& output, const std::string& command, const RunConfig& cfg, json extra) {
  extra["command"] = command;
  extra["config_hash"] = cfg.hash();
  extra["config"] = cfg.to_json();
  io::write_text(output + ".json", extra.dump(2) + "\n");
}

std::string ledger_line(const RejectionLedger& l) {
  std::string s;
  for (const auto& [reason, n] : l.counts) s += (s.empty() ? "" : ", ") + reason + " " + std::to_string(n);
  return s.empty() ? "none" : s;
}

// A flag that disagrees with the manifest is a configuration error; absent
// flags follow the manifest.
void adopt_manifest(RunConfig& cfg, const Options& o, const Manifest& m) {
  if (!o.context.empty() && parse_context(o.context) != m.context_seconds)
    throw ConfigError("--context " + o.context + " disagrees with the manifest (" +
                      context_label(m.context_seconds) + ")");
  if (!o.task.empty() && parse_task(o.task) != m.task)
    throw ConfigError("--task " + o.task + " disagrees with the manifest (" + std::string(task_name(m.task)) + ")");
  cfg.context_seconds = m.context_seconds;
  cfg.task = m.task;
}

Cohort require_cohort(const std::string& manifest) {
  if (manifest.empty()) throw ConfigError("--manifest is required");
  Cohort c = load_cohort(manifest);
  if (c.examples.empty()) throw CohortError("cohort " + manifest + " holds no windows");
  return c;
}

std::size_t input_length(const RunConfig& cfg) { return static_cast<std::size_t>(cfg.context_seconds) * 4; }

// --- commands ---------------------------------------------------------------

int cmd_ingest(const Options& o) {
  RunConfig cfg = resolve(o);
  if (!o.signal.empty()) {
    SubjectSource s;
    s.id = o.id.empty() ? fs::path(o.signal).stem().string() : o.id;
    s.signal = o.signal;
    s.hypnogram = o.hypnogram;
    s.channel = o.channel;
    s.sampling_rate = o.sampling_rate;
    s.meta.subject_id = s.id;
    s.meta.ahi = o.ahi;
    if (s.hypnogram.empty()) throw ConfigError("--signal needs --hypnogram");
    cfg.subjects.push_back(std::move(s));
    cfg.validate();
  }
  const Manifest m = ingest_subjects(cfg, cfg.output_dir);
  std::size_t kept = 0, rejected = 0;
  for (const auto& s : m.subjects) {
    const auto f = load_windows((fs::path(cfg.output_dir) / s.windows_path).string());
    kept += f.windows.size();
    rejected += s.ledger.total();
    std::cout << "subject " << s.id << ": " << f.windows.size() << " windows kept; rejected: " << ledger_line(s.ledger)
              << '\n';
  }
  std::cout << "manifest " << (fs::path(cfg.output_dir) / "manifest.json").string() << ": " << m.subjects.size()
            << " subjects, " << kept << " windows kept, " << rejected << " epochs rejected (config " << cfg.hash()
            << ")\n";
  return kExitOk;
}

SubjectSource single_subject(const Options& o) {
  if (o.signal.empty()) throw ConfigError("--signal is required");
  SubjectSource s;
  s.id = o.id.empty() ? fs::path(o.signal).stem().string() : o.id;
  s.signal = o.signal;
  s.channel = o.channel;
  s.sampling_rate = o.sampling_rate;
  return s;
}

int cmd_detect_beats(const Options& o) {
  const RunConfig cfg = resolve(o);
  const SubjectSource s = single_subject(o);
  const Recording rec = load_signal(s);
  const Channel& ch = pick_channel(rec, s.channel, cfg.modality);
  const BeatSeries raw = detect_beats(ch, cfg.detector(), cfg.modality);
  const CleanedBeats cleaned = clean_beats_report(raw, cfg.artifact);
  const std::string out = out_file(o, cfg, s.id + ".beats.csv");
  io::write_text(out, beats_to_csv(cleaned.beats));
  const auto& r = cleaned.report;
  write_sidecar(out, "detect-beats", cfg,
                {{"channel", ch.label},
                 {"sampling_rate", ch.sampling_rate},
                 {"flat_signal", raw.flat_signal},
                 {"detected", r.input_beats},
                 {"kept", cleaned.beats.size()},
                 {"rejected", {{"too_close", r.removed_too_close}, {"too_far_flagged", r.flagged_too_far}}},
                 {"passes", r.passes}});
  std::cout << out << ": " << cleaned.beats.size() << " beats (" << r.removed_too_close << " removed as too close, "
            << r.flagged_too_far << " flagged after a gap)\n";
  return kExitOk;
}

int cmd_ihr(const Options& o) {
  const RunConfig cfg = resolve(o);
  if (o.beats.empty()) throw ConfigError("--beats is required");
  const BeatSeries beats = beats_from_csv(read_file_text(o.beats), cfg.modality);
  const auto knots = ihr_knots(beats);
  const IhrSeries series = pchip_resample(knots);
  const std::string out = out_file(o, cfg, fs::path(o.beats).stem().string() + ".ihr.csv");
  io::write_text(out, ihr_to_csv(series));
  write_sidecar(out, "ihr", cfg, {{"beats", o.beats}, {"knots", knots.size()}, {"samples", series.values.size()}});
  std::cout << out << ": " << series.values.size() << " samples at 4 Hz from " << knots.size() << " knots\n";
  return kExitOk;
}

int cmd_cut(const Options& o) {
  const RunConfig cfg = resolve(o);
  if (o.ihr.empty() || o.beats.empty() || o.hypnogram.empty())
    throw ConfigError("cut needs --ihr, --beats and --hypnogram");
  const IhrSeries series = ihr_from_csv(read_file_text(o.ihr));
  const BeatSeries beats = beats_from_csv(read_file_text(o.beats), cfg.modality);
  Hypnogram hyp = parse_hypnogram(read_file_text(o.hypnogram), cfg.label_vocabulary());
  const std::string id = o.id.empty() ? fs::path(o.hypnogram).stem().string() : o.id;
  hyp.subject_id = id;
  CutResult cut = cut_windows(series, hyp, cfg.context_seconds, beats);
  const std::string out = out_file(o, cfg, id + ".windows");
  const std::size_t kept = cut.windows.size();
  save_windows(out, WindowsFile{cfg.context_seconds, std::move(cut.windows)});
  write_sidecar(out, "cut", cfg, {{"subject", id}, {"windows", kept}, {"ledger", cut.ledger.counts}});
  std::cout << out << ": " << kept << " windows kept; rejected: " << ledger_line(cut.ledger) << '\n';
  return kExitOk;
}

int cmd_train(const Options& o) {
  RunConfig cfg = resolve(o);
  const Manifest m = load_manifest(o.manifest.empty() ? throw ConfigError("--manifest is required") : o.manifest);
  adopt_manifest(cfg, o, m);
  const std::uint64_t seed = cfg.require_seed();
  const Cohort cohort = require_cohort(o.manifest);
  const auto data = training_set(cohort);

  nn::TrainConfig tc = cfg.train;
  tc.seed = seed;
  const auto spec = nn::ArchitectureSpec::for_input(input_length(cfg));
  const auto result = nn::train(nn::CnnModel::initialize(spec, seed), data, tc);

  const std::string out = out_file(o, cfg, "model.smnn");
  nn::save_model(out, result.model);
  io::write_text(out + ".log.csv", nn::log_to_csv(result.log));
  const auto& last = result.log.back();
  write_sidecar(out, "train", cfg,
                {{"manifest", o.manifest},
                 {"training_subjects", cohort.subject_ids()},
                 {"examples", data.size()},
                 {"positives", cohort.positives()},
                 {"final_loss", last.mean_loss},
                 {"final_train_accuracy", last.train_accuracy}});
  std::printf("%s: %zu epochs on %zu windows, final loss %.4f, training accuracy %.1f%%\n", out.c_str(),
              result.log.size(), data.size(), last.mean_loss, 100.0 * last.train_accuracy);
  return kExitOk;
}

bool trained_on_any(const std::string& model_path, const Cohort& cohort) {
  const std::string sidecar = model_path + ".json";
  if (!fs::exists(sidecar)) return false;
  const auto j = json::parse(read_file_text(sidecar), nullptr, false);
  if (j.is_discarded() || !j.contains("training_subjects")) return false;
  for (const auto& id : j["training_subjects"])
    if (id.is_string() && cohort.by_subject.count(id.get<std::string>())) return true;
  return false;
}

int cmd_evaluate(const Options& o) {
  RunConfig cfg = resolve(o);
  if (o.model.empty()) throw ConfigError("--model is required");
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  adopt_manifest(cfg, o, load_manifest(o.manifest));
  const Cohort cohort = require_cohort(o.manifest);
  const auto model = nn::load_model(o.model, input_length(cfg));
  const auto preds = eval::predict_cohort(model, cohort);
  const auto e = eval::evaluate(preds, cohort, trained_on_any(o.model, cohort));
  auto j = eval::evaluation_json(e, cohort, cfg.hash());
  j["model"] = o.model;
  j["manifest"] = o.manifest;
  io::write_text(in_dir(cfg, "metrics.json"), j.dump(2) + "\n");
  io::write_text(in_dir(cfg, "subjects.csv"), eval::subjects_csv(e.subjects));
  io::write_text(in_dir(cfg, "roc.csv"), eval::roc_csv(e.roc));
  const auto fmt = [](const json& v, double scale = 1.0) {
    char buf[32];
    if (v.is_null()) return std::string("undefined");
    std::snprintf(buf, sizeof buf, "%.3f", v.get<double>() * scale);
    return std::string(buf);
  };
  std::cout << "n=" << e.overall.n << " ACC=" << fmt(j["ACC"]) << "% SE=" << fmt(j["SE"]) << "% SP=" << fmt(j["SP"])
            << "% AUC=" << fmt(j["AUC"]) << " kappa=" << fmt(j["Kappa"]) << (e.in_sample ? " (in-sample)" : "")
            << '\n';
  return kExitOk;
}

int cmd_interpret(const Options& o) {
  RunConfig cfg = resolve(o);
  if (o.model.empty()) throw ConfigError("--model is required");
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  adopt_manifest(cfg, o, load_manifest(o.manifest));
  const Cohort cohort = require_cohort(o.manifest);
  const auto model = nn::load_model(o.model, input_length(cfg));
  const auto data = training_set(cohort);

  const auto acts = interpret::last_block_activations(model, data.inputs);
  if (cfg.interpret_t > acts.t_out)
    throw AtlasError("--t " + std::to_string(cfg.interpret_t) + " exceeds the " + std::to_string(acts.t_out) +
                     " output samples");
  std::size_t k = cfg.interpret_k;
  if (k > acts.n) {
    if (!o.clamp_k)
      throw AtlasError("k = " + std::to_string(k) + " exceeds the " + std::to_string(acts.n) +
                       " windows (pass --clamp-k to use them all)");
    k = acts.n;
  }
  const std::size_t t = cfg.interpret_t - 1;
  const std::string ts = std::to_string(cfg.interpret_t);
  for (std::size_t j = 0; j < acts.filters; ++j)
    io::write_text(in_dir(cfg, "atlas_j" + std::to_string(j + 1) + "_t" + ts + ".csv"),
                   interpret::atlas_csv(interpret::extract_atlas(acts, data.inputs, t, j, k)));

  const auto m = interpret::feature_stage_tests(acts, data.positive);
  io::write_text(in_dir(cfg, "wake_logp.csv"), interpret::matrix_csv(m.wake_logp, m.filters, m.t_out));
  io::write_text(in_dir(cfg, "sleep_logp.csv"), interpret::matrix_csv(m.sleep_logp, m.filters, m.t_out));
  const auto sets = interpret::assign_stage_sets(m, cfg.stage_threshold);

  json traces = json::array();
  if (!sets.wake.empty() && !sets.sleep.empty()) {
    // the first `traces` windows of each class
    std::size_t want_pos = o.traces, want_neg = o.traces;
    for (std::size_t i = 0; i < acts.n && (want_pos || want_neg); ++i) {
      std::size_t& want = data.positive[i] ? want_pos : want_neg;
      if (!want) continue;
      --want;
      const auto& ex = cohort.examples[i];
      const std::string name = "traces_" + ex.subject_id + "_" + std::to_string(ex.epoch_index) + ".csv";
      const auto tr = interpret::sigma_traces(acts.window(i), acts.t_out, acts.filters, sets);
      io::write_text(in_dir(cfg, name), interpret::traces_csv(tr, data.positive[i]));
      traces.push_back(name);
    }
  }

  std::vector<Stage> stages;
  for (const auto& e : cohort.examples) stages.push_back(e.stage);
  const auto pca = interpret::dense_pca_export(model, data.inputs, stages, data.positive);
  io::write_text(in_dir(cfg, "pca.csv"), interpret::pca_csv(pca));

  const auto one_based = [](const std::vector<std::size_t>& v) {
    std::vector<std::size_t> out;
    for (auto j : v) out.push_back(j + 1);
    return out;
  };
  const json summary{{"command", "interpret"},
                     {"config_hash", cfg.hash()},
                     {"config", cfg.to_json()},
                     {"model", o.model},
                     {"manifest", o.manifest},
                     {"t", cfg.interpret_t},
                     {"k", k},
                     {"threshold", cfg.stage_threshold},
                     {"wake_set", one_based(sets.wake)},
                     {"sleep_set", one_based(sets.sleep)},
                     {"traces", traces},
                     {"pca_explained_fraction", pca.pca.explained_fraction}};
  io::write_text(in_dir(cfg, "interpret.json"), summary.dump(2) + "\n");
  std::cout << "atlas at t=" << cfg.interpret_t << " from top " << k << " of " << acts.n << " windows; "
            << sets.wake.size() << " wake-indicative and " << sets.sleep.size() << " sleep-indicative channels\n";
  if (traces.empty()) std::cout << "traces skipped: a stage set is empty\n";
  return kExitOk;
}

int cmd_scatter(const Options& o) {
  RunConfig cfg = resolve(o);
  if (o.manifest.empty()) throw ConfigError("--manifest is required");
  adopt_manifest(cfg, o, load_manifest(o.manifest));
  const Cohort cohort = require_cohort(o.manifest);
  scattering::ScatteringConfig sc;
  sc.averaging_scale = cfg.scattering_scale;
  sc.input_length = input_length(cfg);
  const scattering::FilterBank bank(sc);

  std::vector<std::vector<double>> rows;
  for (const auto& e : cohort.examples) rows.push_back(e.input);  // raw bpm keeps every coefficient >= 0
  const auto flat = scattering::scatter_batch(bank, rows);
  scattering::FeatureSet set;
  set.config = sc;
  const std::size_t len = sc.feature_length();
  for (std::size_t i = 0; i < cohort.examples.size(); ++i) {
    const auto& e = cohort.examples[i];
    set.records.push_back({e.subject_id, e.epoch_index, e.stage,
                           std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i * len),
                                               flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * len))});
  }
  const std::string out = out_file(o, cfg, "features.smst");
  scattering::save_features(out, set);
  auto index = scattering::path_index_json(sc);
  index["config_hash"] = cfg.hash();
  index["manifest"] = o.manifest;
  io::write_text(out + ".paths.json", index.dump(2) + "\n");
  std::cout << out << ": " << set.records.size() << " windows x " << len << " coefficients (" << sc.path_count()
            << " paths x " << sc.positions() << " positions)\n";
  return kExitOk;
}

int cmd_train_st(const Options& o) {
  RunConfig cfg = resolve(o);
  if (o.features.empty()) throw ConfigError("--features is required");
  const std::uint64_t seed = cfg.require_seed();
  const auto set = scattering::load_features(o.features);
  const std::size_t d = set.config.feature_length();
  std::vector<double> x;
  std::vector<bool> positive;
  for (const auto& r : set.records) {
    const Remapped lab = remap_label(r.stage, cfg.task);
    if (lab == Remapped::Exclude) continue;
    x.insert(x.end(), r.values.begin(), r.values.end());
    positive.push_back(lab == Remapped::Positive);
  }
  if (positive.empty()) throw CohortError("no feature rows are labelled for task " + std::string(task_name(cfg.task)));
  scattering::ScgConfig sc;
  sc.iterations = cfg.st_iterations;
  sc.seed = seed;
  const auto r = scattering::train_st_head(x, d, positive, sc);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < positive.size(); ++i)
    hits += scattering::st_predict_positive(r.head, std::span<const double>(x).subspan(i * d, d)) == positive[i];
  const double acc = static_cast<double>(hits) / static_cast<double>(positive.size());

  const std::string out = out_file(o, cfg, "st_head.json");
  io::write_text(out, scattering::st_head_to_json(r.head, cfg.hash()) + "\n");
  std::string log = "iteration,loss,lambda,success\n";
  for (const auto& l : r.log) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", l.iteration, l.loss, l.lambda, l.success ? 1 : 0);
    log += buf;
  }
  io::write_text(out + ".log.csv", log);
  std::printf("%s: %zu rows, %zu iterations, training accuracy %.1f%%%s\n", out.c_str(), positive.size(), r.log.size(),
              100.0 * acc, r.symmetry_broken ? " (symmetric start re-seeded)" : "");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sleep staging from heart-rate variability"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Signals and hypnograms to windows files plus a cohort manifest");
  add_common(ingest, o);
  ingest->add_option("--signal", o.signal, "EDF or CSV signal (adds one subject)");
  ingest->add_option("--hypnogram", o.hypnogram, "Hypnogram CSV for --signal");
  ingest->add_option("--id", o.id, "Subject id for --signal");
  ingest->add_option("--channel", o.channel, "Channel label");
  ingest->add_option("--sampling-rate", o.sampling_rate, "Sampling rate of a CSV signal (Hz)");
  ingest->add_option("--ahi", o.ahi, "Apnea-hypopnea index of the subject");
  ingest->add_option("--filter", o.filter, "Subject rule")
      ->check(CLI::IsMember({"none", "min_wake_fraction", "min_rem_ratio"}));
  ingest->add_option("--filter-threshold", o.filter_threshold, "Subject rule threshold");

  auto* detect = app.add_subcommand("detect-beats", "Detect and clean R peaks or PPG pulse peaks");
  add_common(detect, o);
  detect->add_option("--signal", o.signal, "EDF or CSV signal")->required();
  detect->add_option("--channel", o.channel, "Channel label");
  detect->add_option("--sampling-rate", o.sampling_rate, "Sampling rate of a CSV signal (Hz)");
  detect->add_option("--id", o.id, "Name used for the default output file");

  auto* ihr = app.add_subcommand("ihr", "Beats CSV to the 4 Hz instantaneous heart rate");
  add_common(ihr, o);
  ihr->add_option("--beats", o.beats, "Beats CSV from detect-beats")->required();

  auto* cut = app.add_subcommand("cut", "Cut labelled context windows from an IHR series");
  add_common(cut, o);
  cut->add_option("--ihr", o.ihr, "IHR CSV")->required();
  cut->add_option("--beats", o.beats, "Beats CSV")->required();
  cut->add_option("--hypnogram", o.hypnogram, "Hypnogram CSV")->required();
  cut->add_option("--id", o.id, "Subject id");

  auto* train = app.add_subcommand("train", "Train the CNN on a cohort manifest");
  add_common(train, o);
  train->add_option("--manifest", o.manifest, "Cohort manifest")->required();
  train->add_option("--lr", o.lr, "Learning rate");
  train->add_option("--batch-size", o.batch_size, "Mini-batch size");
  train->add_option("--epochs", o.epochs, "Epochs");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics JSON, per-subject CSV and ROC CSV");
  add_common(evaluate, o);
  evaluate->add_option("--model", o.model, "Model file")->required();
  evaluate->add_option("--manifest", o.manifest, "Cohort manifest")->required();

  auto* interp = app.add_subcommand("interpret", "Feature atlas, stage matrices, traces and PCA");
  add_common(interp, o);
  interp->add_option("--model", o.model, "Model file")->required();
  interp->add_option("--manifest", o.manifest, "Cohort manifest")->required();
  interp->add_option("--t", o.t, "Output sample (1-based)");
  interp->add_option("--k", o.k, "Windows per atlas entry");
  interp->add_flag("--clamp-k", o.clamp_k, "Use all windows when the cohort has fewer than k");
  interp->add_option("--threshold", o.threshold, "-log p threshold for the stage sets");
  interp->add_option("--traces", o.traces, "Trace files per class");

  auto* scatter = app.add_subcommand("scatter", "Order-2 scattering features of a cohort");
  add_common(scatter, o);
  scatter->add_option("--manifest", o.manifest, "Cohort manifest")->required();
  scatter->add_option("--scale", o.scale, "Averaging scale T (power of two)");

  auto* train_st = app.add_subcommand("train-st", "Train the scattering classifier head");
  add_common(train_st, o);
  train_st->add_option("--features", o.features, "Features file from scatter")->required();
  train_st->add_option("--iterations", o.iterations, "Scaled conjugate gradient iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*detect) return cmd_detect_beats(o);
    if (*ihr) return cmd_ihr(o);
    if (*cut) return cmd_cut(o);
    if (*train) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*interp) return cmd_interpret(o);
    if (*scatter) return cmd_scatter(o);
    if (*train_st) return cmd_train_st(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TrainError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DomainError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    // parse, format, shape, cohort, atlas, detection and artifact errors
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
