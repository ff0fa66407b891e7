#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "valuemap/dataset.hpp"
#include "valuemap/gateway.hpp"
#include "valuemap/landscape.hpp"
#include "valuemap/numeric_eval.hpp"
#include "valuemap/survey.hpp"

namespace valuemap {

/// How to reach one model. "mock" providers run in-process:
///   gold   answers every numeric prompt with the sample's gold code and every
///          open prompt with a short stance statement
///   noisy  like gold, but a deterministic share of answers is shifted
///   refuse always declines
///   fixed  always returns `text`
///   script returns the text stored for the request id in a JSONL file
///          of {"request_id", "text"} objects
///   tie    judge verdict with every winner "Tie"
///   first  judge verdict with every winner "A"
/// As a judge, gold and noisy give the value (and overall) win to the
/// response that names the ground-truth stance when only one of them does.
struct ProviderConfig {
  std::string type = "mock";  // mock | openai
  std::string mode = "gold";
  std::string text;
  std::filesystem::path script;
  double accuracy = 0.7;  // noisy mode
  std::string base_url;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  bool require_key = true;
  double timeout_seconds = 120.0;

  /// Stable text used to content-address run logs.
  std::string describe() const;
};

struct RunConfig {
  std::filesystem::path base_dir;  // relative paths resolve against this

  std::filesystem::path codebook;
  std::filesystem::path responses;
  ResponseOptions response_options;
  std::vector<std::string> exclusions;  // ids or ranges like "Q7-Q26"
  bool drop_negative = true;
  int min_n = 30;

  SplitPlan plan = SplitPlan::standard();
  std::vector<Denominator> denominators{Denominator::MinSubgroupsChoices};
  PersonaStyle persona = PersonaStyle::defaults();

  std::map<std::string, ProviderConfig> models;
  std::string judge_model;

  int parallelism = 4;
  double requests_per_minute = 0.0;
  RetryPolicy retry;
  double temperature = kDefaultTemperature;
  int max_tokens = kDefaultMaxTokens;

  std::uint64_t seed = 42;
  int bootstrap_resamples = stats::kDefaultResamples;
  double bootstrap_level = stats::kDefaultLevel;
  AccuracyDenominator accuracy_denominator = AccuracyDenominator::AllSamples;
  bool strict_parsing = false;
  stats::SdConvention sd = stats::SdConvention::Population;

  std::filesystem::path output_dir = "out";

  /// Throws ConfigError (or OverlappingStrata) on the first problem found:
  /// missing files, overlapping or unknown strata, unknown models, bad numbers.
  void validate() const;
  const ProviderConfig& model_config(const std::string& label) const;
  std::vector<std::string> expanded_exclusions() const;
};

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Example configuration pointing at codebook.json / responses.csv next to
/// it, with in-process mock models "base", "tuned" and "judge".
std::string example_config_json();

}  // namespace valuemap
