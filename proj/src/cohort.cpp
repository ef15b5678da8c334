#include "somn/cohort.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "somn/byte_io.hpp"
#include "somn/errors.hpp"
#include "somn/windows_io.hpp"

namespace somn {

using nlohmann::json;

std::string_view task_name(Task t) { return t == Task::WakeVsSleep ? "wake" : "rem"; }

Task parse_task(std::string_view s) {
  if (s == "wake") return Task::WakeVsSleep;
  if (s == "rem") return Task::RemVsNrem;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected wake or rem)");
}

Remapped remap_label(Stage stage, Task task) {
  switch (stage) {
    case Stage::Unknown: return Remapped::Exclude;
    case Stage::Wake: return task == Task::WakeVsSleep ? Remapped::Positive : Remapped::Exclude;
    case Stage::Rem: return task == Task::RemVsNrem ? Remapped::Positive : Remapped::Negative;
    case Stage::N1:
    case Stage::N2:
    case Stage::N3: return Remapped::Negative;
  }
  return Remapped::Exclude;
}

std::size_t Cohort::positives() const {
  std::size_t n = 0;
  for (const auto& e : examples) n += e.positive ? 1 : 0;
  return n;
}

std::vector<std::string> Cohort::subject_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, idx] : by_subject) ids.push_back(id);
  return ids;
}

void Cohort::reindex() {
  by_subject.clear();
  for (std::size_t i = 0; i < examples.size(); ++i) by_subject[examples[i].subject_id].push_back(i);
}

Cohort build_cohort(std::span<const ContextWindow> windows, Task task, CohortRole role,
                    int context_seconds) {
  Cohort c;
  c.task = task;
  c.role = role;
  c.context_seconds = context_seconds;
  for (const auto& w : windows) {
    const Remapped r = remap_label(w.label, task);
    if (r == Remapped::Exclude) {
      c.ledger[w.subject_id].add(w.label == Stage::Unknown ? reject_reason::kUnknownLabel
                                                           : reject_reason::kExcludedByTask);
      continue;
    }
    c.examples.push_back({w.input, w.epoch_index, w.label, r == Remapped::Positive, w.subject_id});
  }
  c.reindex();
  return c;
}

std::string describe(const SubjectRule& rule) {
  switch (rule.kind) {
    case SubjectRule::Kind::None: return "none";
    case SubjectRule::Kind::MinWakeFraction: return "min_wake_fraction";
    case SubjectRule::Kind::MinRemRatio: return "min_rem_ratio";
  }
  return "none";
}

SubjectRule parse_subject_rule(std::string_view name, double threshold) {
  if (name == "none") return SubjectRule::none();
  if (name == "min_wake_fraction") return SubjectRule::min_wake_fraction(threshold);
  if (name == "min_rem_ratio") return SubjectRule::min_rem_ratio(threshold);
  throw ConfigError("unknown subject rule '" + std::string(name) + "'");
}

Cohort filter_subjects(const Cohort& cohort, const SubjectRule& rule) {
  if (rule.kind == SubjectRule::Kind::None || cohort.role == CohortRole::Validation) return cohort;

  std::set<std::string> keep;
  for (const auto& [id, idx] : cohort.by_subject) {
    std::size_t wake = 0, rem = 0, nrem = 0;
    for (std::size_t i : idx) {
      switch (cohort.examples[i].stage) {
        case Stage::Wake: ++wake; break;
        case Stage::Rem: ++rem; break;
        case Stage::N1:
        case Stage::N2:
        case Stage::N3: ++nrem; break;
        case Stage::Unknown: break;
      }
    }
    bool ok = false;
    if (rule.kind == SubjectRule::Kind::MinWakeFraction) {
      const std::size_t scored = wake + rem + nrem;
      ok = scored > 0 && static_cast<double>(wake) >= rule.threshold * static_cast<double>(scored);
    } else {
      ok = nrem > 0 && static_cast<double>(rem) >= rule.threshold * static_cast<double>(nrem);
    }
    if (ok) keep.insert(id);
  }
  if (keep.empty()) throw CohortError("subject filter '" + describe(rule) + "' removed every subject");

  Cohort out;
  out.task = cohort.task;
  out.role = cohort.role;
  out.context_seconds = cohort.context_seconds;
  for (const auto& e : cohort.examples)
    if (keep.count(e.subject_id)) out.examples.push_back(e);
  for (const auto& [id, m] : cohort.meta)
    if (keep.count(id)) out.meta[id] = m;
  for (const auto& [id, l] : cohort.ledger)
    if (keep.count(id)) out.ledger[id] = l;
  out.reindex();
  return out;
}

double ClassStats::positive_fraction_3dp() const {
  return std::round(positive_fraction * 1000.0) / 1000.0;
}

ClassStats class_stats(const Cohort& cohort) {
  if (cohort.examples.empty()) throw CohortError("class statistics of an empty cohort");
  ClassStats s;
  s.total = cohort.examples.size();
  s.positives = cohort.positives();
  s.negatives = s.total - s.positives;
  s.positive_fraction = static_cast<double>(s.positives) / static_cast<double>(s.total);
  for (const auto& [id, idx] : cohort.by_subject) {
    std::size_t p = 0;
    for (std::size_t i : idx) p += cohort.examples[i].positive ? 1 : 0;
    s.subject_positive_percent[id] = 100.0 * static_cast<double>(p) / static_cast<double>(idx.size());
  }
  return s;
}

void assert_disjoint_subjects(const Cohort& training, const Cohort& validation) {
  for (const auto& [id, idx] : validation.by_subject)
    if (training.by_subject.count(id))
      throw CohortError("subject '" + id + "' appears in both training and validation cohorts");
}

// --- manifest --------------------------------------------------------------

json meta_to_json(const SubjectMeta& m) {
  json j = json::object();
  if (m.ahi) j["ahi"] = *m.ahi;
  if (m.bmi) j["bmi"] = *m.bmi;
  if (m.age) j["age"] = *m.age;
  if (m.sex) j["sex"] = *m.sex == Sex::Female ? "F" : "M";
  return j;
}

SubjectMeta meta_from_json(const std::string& id, const json& j) {
  SubjectMeta m;
  m.subject_id = id;
  if (j.contains("ahi")) {
    m.ahi = j.at("ahi").get<double>();
    if (*m.ahi < 0.0) throw ConfigError("AHI must be non-negative for subject " + id);
  }
  if (j.contains("bmi")) m.bmi = j.at("bmi").get<double>();
  if (j.contains("age")) m.age = j.at("age").get<double>();
  if (j.contains("sex")) {
    const auto s = j.at("sex").get<std::string>();
    if (s == "F" || s == "f") m.sex = Sex::Female;
    else if (s == "M" || s == "m") m.sex = Sex::Male;
  }
  return m;
}

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["format"] = "somn-manifest";
  j["version"] = 1;
  j["task"] = std::string(task_name(m.task));
  j["role"] = m.role == CohortRole::Training ? "training" : "validation";
  j["context_seconds"] = m.context_seconds;
  j["filter"] = {{"rule", describe(m.filter)}, {"threshold", m.filter.threshold}};
  j["subjects"] = json::array();
  json ledger = json::object();
  for (const auto& s : m.subjects) {
    j["subjects"].push_back({{"id", s.id}, {"windows", s.windows_path}, {"meta", meta_to_json(s.meta)}});
    ledger[s.id] = s.ledger.counts;
  }
  j["ledger"] = ledger;
  j["config_hash"] = m.config_hash;
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "somn-manifest") throw ParseError("not a cohort manifest");
    Manifest m;
    m.task = parse_task(j.at("task").get<std::string>());
    const auto role = j.value("role", "training");
    m.role = role == "validation" ? CohortRole::Validation : CohortRole::Training;
    m.context_seconds = j.at("context_seconds").get<int>();
    if (!valid_context_seconds(m.context_seconds)) throw ConfigError("manifest context is invalid");
    if (j.contains("filter"))
      m.filter = parse_subject_rule(j["filter"].value("rule", "none"), j["filter"].value("threshold", 0.10));
    const json ledger = j.value("ledger", json::object());
    for (const auto& s : j.at("subjects")) {
      ManifestSubject ms;
      ms.id = s.at("id").get<std::string>();
      ms.windows_path = s.at("windows").get<std::string>();
      ms.meta = meta_from_json(ms.id, s.value("meta", json::object()));
      if (ledger.contains(ms.id))
        ms.ledger.counts = ledger.at(ms.id).get<std::map<std::string, std::size_t>>();
      m.subjects.push_back(std::move(ms));
    }
    m.config_hash = j.value("config_hash", "");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

void save_manifest(const std::string& path, const Manifest& m) {
  io::write_text(path, manifest_to_json(m));
}

Manifest load_manifest(const std::string& path) { return manifest_from_json(read_file_text(path)); }

Cohort load_cohort(const std::string& path) {
  const Manifest m = load_manifest(path);
  const auto dir = std::filesystem::path(path).parent_path();
  std::vector<ContextWindow> all;
  std::map<std::string, SubjectMeta> meta;
  std::map<std::string, RejectionLedger> ledger;
  for (const auto& s : m.subjects) {
    std::filesystem::path wp(s.windows_path);
    if (wp.is_relative()) wp = dir / wp;
    WindowsFile f = load_windows(wp.string());
    if (f.context_seconds != m.context_seconds)
      throw FormatError("windows file " + wp.string() + " has context " +
                        std::to_string(f.context_seconds) + " s, manifest says " +
                        std::to_string(m.context_seconds));
    for (auto& w : f.windows) {
      w.subject_id = s.id;
      all.push_back(std::move(w));
    }
    meta[s.id] = s.meta;
    ledger[s.id] = s.ledger;
  }
  Cohort c = build_cohort(all, m.task, m.role, m.context_seconds);
  c.meta = std::move(meta);
  for (auto& [id, l] : ledger) c.ledger[id].merge(l);
  return filter_subjects(c, m.filter);
}

}  // namespace somn
