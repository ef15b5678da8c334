#include "somn/config.hpp"

#include <cstdio>
#include <set>

#include "somn/errors.hpp"
#include "somn/ihr.hpp"
#include "somn/rng.hpp"

namespace somn {

using nlohmann::json;

int parse_context(const std::string& text) {
  static const std::map<std::string, int> named{{"30s", 30}, {"2m", 120}, {"5m", 300}, {"10m", 600}};
  if (const auto it = named.find(text); it != named.end()) return it->second;
  int seconds = 0;
  try {
    std::size_t used = 0;
    seconds = std::stoi(text, &used);
    if (used != text.size()) seconds = 0;
  } catch (const std::exception&) {
    seconds = 0;
  }
  if (!valid_context_seconds(seconds))
    throw ConfigError("context must be one of 30s, 2m, 5m, 10m (got '" + text + "')");
  return seconds;
}

std::string context_label(int seconds) {
  switch (seconds) {
    case 30: return "30s";
    case 120: return "2m";
    case 300: return "5m";
    case 600: return "10m";
  }
  throw ConfigError("invalid context " + std::to_string(seconds));
}

BeatSource parse_modality(const std::string& text) {
  if (text == "ecg") return BeatSource::Ecg;
  if (text == "ppg") return BeatSource::Ppg;
  throw ConfigError("modality must be ecg or ppg (got '" + text + "')");
}

std::string_view modality_name(BeatSource s) { return s == BeatSource::Ecg ? "ecg" : "ppg"; }

Stage parse_stage_name(const std::string& text) {
  for (Stage s : {Stage::Wake, Stage::Rem, Stage::N1, Stage::N2, Stage::N3, Stage::Unknown})
    if (text == stage_name(s)) return s;
  const Stage s = LabelVocabulary::standard().lookup(text);
  if (s == Stage::Unknown && text != "?" && text != "UNKNOWN")
    throw ConfigError("vocabulary target '" + text + "' is not a sleep stage");
  return s;
}

DetectorParams RunConfig::detector() const {
  DetectorParams p = modality == BeatSource::Ecg ? DetectorParams::ecg() : DetectorParams::ppg();
  const json& o = detector_overrides;
  p.low_hz = o.value("low_hz", p.low_hz);
  p.high_hz = o.value("high_hz", p.high_hz);
  p.short_window_s = o.value("short_window_s", p.short_window_s);
  p.long_window_s = o.value("long_window_s", p.long_window_s);
  p.beta = o.value("beta", p.beta);
  p.clip_negative = o.value("clip_negative", p.clip_negative);
  return p;
}

LabelVocabulary RunConfig::label_vocabulary() const {
  LabelVocabulary v = LabelVocabulary::standard();
  for (const auto& [spelling, stage] : vocabulary) v.set(spelling, parse_stage_name(stage));
  return v;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("this command needs a seed (config \"seed\" or --seed)");
  return *seed;
}

json RunConfig::to_json() const {
  const DetectorParams d = detector();
  json subjects_json = json::array();
  for (const auto& s : subjects) {
    json e{{"id", s.id}, {"signal", s.signal}, {"hypnogram", s.hypnogram}, {"meta", meta_to_json(s.meta)}};
    if (!s.channel.empty()) e["channel"] = s.channel;
    if (s.sampling_rate) e["sampling_rate"] = *s.sampling_rate;
    subjects_json.push_back(std::move(e));
  }
  json j{{"task", task_name(task)},
         {"context", context_label(context_seconds)},
         {"modality", modality_name(modality)},
         {"role", role == CohortRole::Training ? "training" : "validation"},
         {"filter", {{"rule", describe(filter)}, {"threshold", filter.threshold}}},
         {"detector",
          {{"low_hz", d.low_hz},
           {"high_hz", d.high_hz},
           {"short_window_s", d.short_window_s},
           {"long_window_s", d.long_window_s},
           {"beta", d.beta},
           {"clip_negative", d.clip_negative}}},
         {"artifact",
          {{"low_ratio", artifact.low_ratio},
           {"high_ratio", artifact.high_ratio},
           {"min_rri_s", artifact.min_rri_s},
           {"max_rri_s", artifact.max_rri_s}}},
         {"train",
          {{"learning_rate", train.learning_rate}, {"batch_size", train.batch_size}, {"epochs", train.epochs}}},
         {"vocabulary", vocabulary},
         {"subjects", subjects_json},
         {"scattering", {{"averaging_scale", scattering_scale}, {"iterations", st_iterations}}},
         {"interpret", {{"t", interpret_t}, {"k", interpret_k}, {"threshold", stage_threshold}}}};
  j["seed"] = seed ? json(*seed) : json(nullptr);
  return j;
}

std::string RunConfig::hash() const {
  const auto h = fnv1a64(to_json().dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void RunConfig::validate() const {
  if (!valid_context_seconds(context_seconds)) throw ConfigError("invalid context length");
  const DetectorParams d = detector();
  if (!(d.low_hz > 0.0 && d.high_hz > d.low_hz)) throw ConfigError("detector band must satisfy 0 < low < high");
  if (!(d.short_window_s > 0.0 && d.long_window_s > d.short_window_s))
    throw ConfigError("detector windows must satisfy 0 < short < long");
  if (!(d.beta >= 0.0)) throw ConfigError("detector beta must be non-negative");
  if (!(artifact.low_ratio > 0.0 && artifact.low_ratio < 1.0 && artifact.high_ratio > 1.0))
    throw ConfigError("artifact ratios must satisfy 0 < low < 1 < high");
  if (!(artifact.min_rri_s > 0.0 && artifact.max_rri_s > artifact.min_rri_s))
    throw ConfigError("artifact RR bounds must satisfy 0 < min < max");
  try {
    train.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (interpret_t == 0 || interpret_k == 0) throw ConfigError("interpret t and k are 1-based and positive");
  if (st_iterations == 0) throw ConfigError("scattering head needs at least one iteration");
  std::set<std::string> ids;
  for (const auto& s : subjects) {
    if (s.id.empty()) throw ConfigError("subject without an id");
    if (!ids.insert(s.id).second) throw ConfigError("duplicate subject id '" + s.id + "'");
  }
  label_vocabulary();
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j,
               {"task", "context", "modality", "seed", "role", "filter", "detector", "artifact", "train",
                "vocabulary", "subjects", "scattering", "interpret", "output_dir", "threads"},
               "config");
    if (j.contains("task")) c.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("context")) {
      const auto& ctx = j.at("context");
      c.context_seconds = parse_context(ctx.is_number() ? std::to_string(ctx.get<int>()) : ctx.get<std::string>());
    }
    if (j.contains("modality")) c.modality = parse_modality(j.at("modality").get<std::string>());
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("role")) {
      const auto r = j.at("role").get<std::string>();
      if (r == "training") c.role = CohortRole::Training;
      else if (r == "validation") c.role = CohortRole::Validation;
      else throw ConfigError("role must be training or validation");
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      check_keys(f, {"rule", "threshold"}, "filter");
      c.filter = parse_subject_rule(f.value("rule", std::string("none")), f.value("threshold", 0.10));
    }
    if (j.contains("detector")) {
      check_keys(j.at("detector"),
                 {"low_hz", "high_hz", "short_window_s", "long_window_s", "beta", "clip_negative"}, "detector");
      c.detector_overrides = j.at("detector");
    }
    if (j.contains("artifact")) {
      const auto& a = j.at("artifact");
      check_keys(a, {"low_ratio", "high_ratio", "min_rri_s", "max_rri_s"}, "artifact");
      c.artifact.low_ratio = a.value("low_ratio", c.artifact.low_ratio);
      c.artifact.high_ratio = a.value("high_ratio", c.artifact.high_ratio);
      c.artifact.min_rri_s = a.value("min_rri_s", c.artifact.min_rri_s);
      c.artifact.max_rri_s = a.value("max_rri_s", c.artifact.max_rri_s);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      check_keys(t, {"learning_rate", "batch_size", "epochs"}, "train");
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.epochs = t.value("epochs", c.train.epochs);
    }
    if (j.contains("vocabulary")) c.vocabulary = j.at("vocabulary").get<std::map<std::string, std::string>>();
    if (j.contains("subjects")) {
      for (const auto& s : j.at("subjects")) {
        check_keys(s, {"id", "signal", "hypnogram", "channel", "sampling_rate", "meta"}, "subject");
        SubjectSource src;
        src.id = s.at("id").get<std::string>();
        src.signal = s.at("signal").get<std::string>();
        src.hypnogram = s.at("hypnogram").get<std::string>();
        src.channel = s.value("channel", std::string());
        if (s.contains("sampling_rate")) src.sampling_rate = s.at("sampling_rate").get<double>();
        src.meta = meta_from_json(src.id, s.value("meta", json::object()));
        c.subjects.push_back(std::move(src));
      }
    }
    if (j.contains("scattering")) {
      const auto& s = j.at("scattering");
      check_keys(s, {"averaging_scale", "iterations"}, "scattering");
      c.scattering_scale = s.value("averaging_scale", c.scattering_scale);
      c.st_iterations = s.value("iterations", c.st_iterations);
    }
    if (j.contains("interpret")) {
      const auto& s = j.at("interpret");
      check_keys(s, {"t", "k", "threshold"}, "interpret");
      c.interpret_t = s.value("t", c.interpret_t);
      c.interpret_k = s.value("k", c.interpret_k);
      c.stage_threshold = s.value("threshold", c.stage_threshold);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file_text(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace somn
