#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "somn/config.hpp"
#include "somn/errors.hpp"

using namespace somn;
using nlohmann::json;

TEST_CASE("context and modality parsing") {
  CHECK(parse_context("30s") == 30);
  CHECK(parse_context("2m") == 120);
  CHECK(parse_context("5m") == 300);
  CHECK(parse_context("10m") == 600);
  CHECK(parse_context("600") == 600);
  CHECK_THROWS_AS(parse_context("3m"), ConfigError);
  CHECK_THROWS_AS(parse_context("300x"), ConfigError);
  CHECK_THROWS_AS(parse_context("45"), ConfigError);
  for (int s : {30, 120, 300, 600}) CHECK(parse_context(context_label(s)) == s);
  CHECK(parse_modality("ppg") == BeatSource::Ppg);
  CHECK(modality_name(BeatSource::Ecg) == "ecg");
  CHECK_THROWS_AS(parse_modality("eeg"), ConfigError);
}

TEST_CASE("defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.task == Task::WakeVsSleep);
  CHECK(c.context_seconds == 300);
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.train.batch_size == 24);
  CHECK(c.train.epochs == 180);
  CHECK_FALSE(c.seed.has_value());
  CHECK_THROWS_AS(c.require_seed(), ConfigError);
  CHECK(c.hash().size() == 16);
}

TEST_CASE("hash covers output-affecting fields only") {
  const auto base = config_from_json(json{{"seed", 4}});
  auto other_dir = config_from_json(json{{"seed", 4}, {"output_dir", "/elsewhere"}, {"threads", 4}});
  CHECK(base.hash() == other_dir.hash());
  CHECK(base.hash() != config_from_json(json{{"seed", 5}}).hash());
  CHECK(base.hash() != config_from_json(json{{"seed", 4}, {"context", "2m"}}).hash());
  CHECK(base.hash() != config_from_json(json{{"seed", 4}, {"train", {{"epochs", 10}}}}).hash());
  CHECK(base.hash() != config_from_json(json{{"seed", 4}, {"detector", {{"beta", 0.1}}}}).hash());
}

TEST_CASE("canonical JSON round-trips") {
  const json j{{"task", "rem"},
               {"context", "10m"},
               {"modality", "ppg"},
               {"seed", 99},
               {"filter", {{"rule", "min_rem_ratio"}, {"threshold", 0.2}}},
               {"vocabulary", {{"S", "N2"}}},
               {"subjects",
                {{{"id", "a"}, {"signal", "a.edf"}, {"hypnogram", "a.txt"}, {"meta", {{"ahi", 12.5}}}},
                 {{"id", "b"}, {"signal", "b.csv"}, {"hypnogram", "b.txt"}, {"sampling_rate", 128}}}},
               {"interpret", {{"t", 30}, {"k", 50}}}};
  const auto c = config_from_json(j);
  CHECK(c.task == Task::RemVsNrem);
  CHECK(c.modality == BeatSource::Ppg);
  CHECK(c.subjects.size() == 2);
  CHECK(*c.subjects[0].meta.ahi == 12.5);
  CHECK(*c.subjects[1].sampling_rate == 128.0);
  CHECK(c.label_vocabulary().lookup("S") == Stage::N2);
  const auto again = config_from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());
  CHECK(again.hash() == c.hash());
}

TEST_CASE("detector presets and overrides") {
  const auto ecg = config_from_json(json::object()).detector();
  const auto ppg = config_from_json(json{{"modality", "ppg"}}).detector();
  CHECK(ecg.low_hz != ppg.low_hz);
  const auto o = config_from_json(json{{"detector", {{"high_hz", 12.0}}}}).detector();
  CHECK(o.high_hz == 12.0);
  CHECK(o.low_hz == ecg.low_hz);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"train", {{"lr", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"task", "apnea"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"seed", "seven"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"train", {{"batch_size", 0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"detector", {{"low_hz", 20.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"artifact", {{"low_ratio", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"vocabulary", {{"X", "deep"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"subjects", {{{"id", "a"}, {"signal", "x"}, {"hypnogram", "y"}},
                                                        {{"id", "a"}, {"signal", "x"}, {"hypnogram", "y"}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"subjects", {{{"id", "a"}, {"signal", "x"}}}}}), ConfigError);
  CHECK_THROWS_AS(
      config_from_json(json{{"subjects", {{{"id", "a"}, {"signal", "x"}, {"hypnogram", "y"}, {"meta", {{"ahi", -1}}}}}}}),
      ConfigError);

  const auto dir = std::filesystem::temp_directory_path();
  CHECK_THROWS_AS(load_config((dir / "somn_no_such_config.json").string()), ConfigError);
  const auto bad = (dir / "somn_bad_config.json").string();
  std::ofstream(bad) << "{ not json";
  CHECK_THROWS_AS(load_config(bad), ConfigError);
  std::ofstream(bad) << R"({"seed": 3, "context": "30s"})";
  CHECK(load_config(bad).context_seconds == 30);
  std::filesystem::remove(bad);
}
