#include "somn/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "somn/byte_io.hpp"
#include "somn/errors.hpp"
#include "somn/windows_io.hpp"

namespace somn {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with_edf(const std::string& path) {
  const auto u = upper(path);
  return u.size() >= 4 && u.compare(u.size() - 4, 4, ".EDF") == 0;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

double parse_double(std::string_view field, std::size_t line_no, const char* what) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ParseError(std::string(what) + ": malformed number '" + std::string(field) + "' on line " +
                     std::to_string(line_no));
  return v;
}

}  // namespace

Recording load_signal(const SubjectSource& subject) {
  if (ends_with_edf(subject.signal)) return parse_edf(read_file_bytes(subject.signal));
  if (!subject.sampling_rate)
    throw ConfigError("subject '" + subject.id + "': CSV signal " + subject.signal + " needs sampling_rate");
  return parse_csv_signal(read_file_text(subject.signal), subject.channel.empty() ? "signal" : subject.channel,
                          *subject.sampling_rate);
}

const Channel& pick_channel(const Recording& rec, const std::string& label, BeatSource modality) {
  if (!label.empty()) {
    if (const Channel* c = rec.find(label)) return *c;
    throw ParseError("recording has no channel labelled '" + label + "'");
  }
  const std::vector<std::string> keys = modality == BeatSource::Ecg ? std::vector<std::string>{"ECG", "EKG"}
                                                                    : std::vector<std::string>{"PPG", "PLETH"};
  for (const auto& c : rec.channels) {
    const auto u = upper(c.label);
    for (const auto& k : keys)
      if (u.find(k) != std::string::npos) return c;
  }
  if (rec.channels.size() == 1) return rec.channels.front();
  throw ParseError("cannot tell which channel holds the " + std::string(modality == BeatSource::Ecg ? "ECG" : "PPG") +
                   "; set the subject's channel");
}

SubjectRun process_subject(const SubjectSource& subject, const RunConfig& cfg) {
  const Recording rec = load_signal(subject);
  const Channel& ch = pick_channel(rec, subject.channel, cfg.modality);
  Hypnogram hyp = parse_hypnogram(read_file_text(subject.hypnogram), cfg.label_vocabulary());
  hyp.subject_id = subject.id;

  SubjectRun run;
  const BeatSeries raw = detect_beats(ch, cfg.detector(), cfg.modality);
  run.cleaned = clean_beats_report(raw, cfg.artifact);
  // too few beats leaves the series empty; cut_windows then rejects every epoch
  if (run.cleaned.beats.size() >= 2) {
    const auto knots = ihr_knots(run.cleaned.beats);
    if (knots.size() >= 2) run.ihr = pchip_resample(knots);
  }
  run.ihr.source = cfg.modality;
  run.cut = cut_windows(run.ihr, hyp, cfg.context_seconds, run.cleaned.beats);
  for (auto& w : run.cut.windows) w.subject_id = subject.id;
  return run;
}

Manifest ingest_subjects(const RunConfig& cfg, const std::string& out_dir) {
  if (cfg.subjects.empty()) throw ConfigError("no subjects configured for ingest");
  std::filesystem::create_directories(out_dir);
  Manifest m;
  m.task = cfg.task;
  m.role = cfg.role;
  m.context_seconds = cfg.context_seconds;
  m.filter = cfg.filter;
  m.config_hash = cfg.hash();
  for (const auto& s : cfg.subjects) {
    SubjectRun run = process_subject(s, cfg);
    const std::string file = s.id + ".windows";
    save_windows((std::filesystem::path(out_dir) / file).string(),
                 WindowsFile{cfg.context_seconds, std::move(run.cut.windows)});
    ManifestSubject ms;
    ms.id = s.id;
    ms.windows_path = file;
    ms.meta = s.meta;
    ms.meta.subject_id = s.id;
    ms.ledger = run.cut.ledger;
    m.subjects.push_back(std::move(ms));
  }
  save_manifest((std::filesystem::path(out_dir) / "manifest.json").string(), m);
  return m;
}

nn::TrainingSet training_set(const Cohort& cohort) {
  nn::TrainingSet set;
  set.inputs.reserve(cohort.examples.size());
  for (const auto& e : cohort.examples) {
    set.inputs.push_back(normalize_window(e.input));
    set.positive.push_back(e.positive);
  }
  return set;
}

std::string beats_to_csv(const BeatSeries& beats) {
  std::string out = "time_s,gap_before\n";
  char buf[64];
  for (std::size_t i = 0; i < beats.size(); ++i) {
    // shortest form that reads back to the same double
    const auto r = std::to_chars(buf, buf + sizeof buf, beats.times[i]);
    out.append(buf, r.ptr);
    out += beats.gap_before[i] ? ",1\n" : ",0\n";
  }
  return out;
}

BeatSeries beats_from_csv(std::string_view text, BeatSource source) {
  BeatSeries b;
  b.source = source;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty() || (i == 0 && !std::isdigit(static_cast<unsigned char>(line.front())))) continue;
    const auto comma = line.find(',');
    b.times.push_back(parse_double(line.substr(0, comma), i + 1, "beats CSV"));
    bool gap = false;
    if (comma != std::string_view::npos) {
      const auto flag = line.substr(comma + 1);
      if (flag != "0" && flag != "1")
        throw ParseError("beats CSV: gap flag must be 0 or 1 on line " + std::to_string(i + 1));
      gap = flag == "1";
    }
    b.gap_before.push_back(gap);
    if (b.times.size() > 1 && !(b.times.back() > b.times[b.times.size() - 2]))
      throw ParseError("beats CSV: times must increase (line " + std::to_string(i + 1) + ")");
  }
  return b;
}

std::string ihr_to_csv(const IhrSeries& series) {
  std::ostringstream os;
  os.precision(17);
  os << "t,bpm\n";
  for (std::size_t k = 0; k < series.values.size(); ++k) os << series.time(k) << ',' << series.values[k] << '\n';
  return os.str();
}

IhrSeries ihr_from_csv(std::string_view text) {
  IhrSeries s;
  const auto lines = split_lines(text);
  std::size_t rows = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty() || (i == 0 && !std::isdigit(static_cast<unsigned char>(line.front())) && line.front() != '-'))
      continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("IHR CSV: expected t,bpm on line " + std::to_string(i + 1));
    const double t = parse_double(line.substr(0, comma), i + 1, "IHR CSV");
    const double v = parse_double(line.substr(comma + 1), i + 1, "IHR CSV");
    if (rows == 0) s.t0 = t;
    else if (std::abs(t - s.time(rows)) > 1e-6)
      throw ParseError("IHR CSV: samples are not on the 4 Hz grid (line " + std::to_string(i + 1) + ")");
    s.values.push_back(v);
    ++rows;
  }
  return s;
}

}  // namespace somn
