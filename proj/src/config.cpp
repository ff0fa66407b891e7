#include "valuemap/config.hpp"

#include <set>

#include "json.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"
#include "valuemap/stratify.hpp"

namespace valuemap {

using nlohmann::json;

std::string ProviderConfig::describe() const {
  if (type == "openai") return "openai|" + base_url + "|" + model;
  std::string d = "mock|" + mode;
  if (mode == "fixed") d += "|" + text;
  if (mode == "noisy") d += "|" + io::exact(accuracy);
  if (mode == "script") d += "|" + script.filename().string();
  return d;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Denominator parse_denominator(const std::string& s) {
  if (s == "min_s_c" || s == "min_subgroups_choices") return Denominator::MinSubgroupsChoices;
  if (s == "distinct_modes") return Denominator::DistinctModes;
  throw Error(Errc::ConfigError, "unknown denominator '" + s + "'");
}

ProviderConfig parse_provider(const json& j, const std::filesystem::path& base) {
  ProviderConfig p;
  p.type = j.value("type", p.type);
  p.mode = j.value("mode", p.mode);
  p.text = j.value("text", p.text);
  if (j.contains("script")) p.script = resolve(base, j.at("script").get<std::string>());
  p.accuracy = j.value("accuracy", p.accuracy);
  p.base_url = j.value("base_url", p.base_url);
  p.model = j.value("model", p.model);
  p.api_key_env = j.value("api_key_env", p.api_key_env);
  p.require_key = j.value("require_key", p.require_key);
  p.timeout_seconds = j.value("timeout_seconds", p.timeout_seconds);
  return p;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    json j = json::parse(text);
    const json& survey = j.at("survey");
    c.codebook = resolve(base_dir, survey.at("codebook").get<std::string>());
    c.responses = resolve(base_dir, survey.at("responses").get<std::string>());
    auto& ro = c.response_options;
    std::string delim = survey.value("delimiter", std::string(","));
    if (delim == "\\t" || delim == "tab") delim = "\t";
    if (delim.size() != 1) throw Error(Errc::ConfigError, "delimiter must be a single character");
    ro.delimiter = delim[0];
    ro.id_column = survey.value("id_column", ro.id_column);
    if (survey.contains("axes")) ro.axes = survey.at("axes").get<std::vector<std::string>>();
    if (survey.contains("raw_age_column") && !survey.at("raw_age_column").is_null())
      ro.raw_age_column = survey.at("raw_age_column").get<std::string>();
    ro.unknown_token = survey.value("unknown_token", ro.unknown_token);
    if (survey.contains("ignore_columns")) ro.ignore_columns = survey.at("ignore_columns").get<std::vector<std::string>>();

    if (j.contains("exclusions")) c.exclusions = j.at("exclusions").get<std::vector<std::string>>();
    c.drop_negative = j.value("drop_negative", c.drop_negative);
    c.min_n = j.value("min_n", c.min_n);

    if (j.contains("strata")) {
      const json& s = j.at("strata");
      if (s.contains("train")) c.plan.train_strata = s.at("train").get<std::vector<std::string>>();
      if (s.contains("ood")) c.plan.ood_strata = s.at("ood").get<std::vector<std::string>>();
      if (s.value("train_scope", std::string("whole_subgroup")) == "per_question")
        c.plan.train_scope = ValidityScope::PerQuestion;
      if (s.value("ood_scope", std::string("per_question")) == "whole_subgroup")
        c.plan.ood_scope = ValidityScope::WholeSubgroup;
    }
    if (j.contains("denominators")) {
      c.denominators.clear();
      for (const auto& d : j.at("denominators")) c.denominators.push_back(parse_denominator(d.get<std::string>()));
    }
    if (j.contains("persona")) {
      const json& p = j.at("persona");
      PersonaStyle overrides;
      overrides.nationality = p.value("nationality", std::string());
      if (p.contains("display"))
        overrides.display = p.at("display").get<std::map<std::string, std::map<std::string, std::string>>>();
      c.persona.merge(overrides);
    }
    if (j.contains("models"))
      for (const auto& [label, pj] : j.at("models").items()) c.models[label] = parse_provider(pj, base_dir);
    c.judge_model = j.value("judge", c.judge_model);

    c.parallelism = j.value("parallelism", c.parallelism);
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    if (j.contains("retry")) {
      const json& r = j.at("retry");
      c.retry.max_retries = r.value("max_retries", c.retry.max_retries);
      c.retry.initial_backoff_seconds = r.value("initial_backoff_seconds", c.retry.initial_backoff_seconds);
      c.retry.multiplier = r.value("multiplier", c.retry.multiplier);
      c.retry.max_backoff_seconds = r.value("max_backoff_seconds", c.retry.max_backoff_seconds);
    }
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.seed = j.value("seed", c.seed);
    if (j.contains("bootstrap")) {
      c.bootstrap_resamples = j.at("bootstrap").value("resamples", c.bootstrap_resamples);
      c.bootstrap_level = j.at("bootstrap").value("level", c.bootstrap_level);
    }
    std::string acc = j.value("accuracy_denominator", std::string("all_samples"));
    if (acc == "all_samples") c.accuracy_denominator = AccuracyDenominator::AllSamples;
    else if (acc == "parsable_only") c.accuracy_denominator = AccuracyDenominator::ParsableOnly;
    else throw Error(Errc::ConfigError, "accuracy_denominator must be all_samples or parsable_only");
    c.strict_parsing = j.value("strict_parsing", c.strict_parsing);
    std::string sd = j.value("sd", std::string("population"));
    if (sd == "population") c.sd = stats::SdConvention::Population;
    else if (sd == "sample") c.sd = stats::SdConvention::Sample;
    else throw Error(Errc::ConfigError, "sd must be population or sample");
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::ConfigError, "config not found: " + path.string());
  auto base = std::filesystem::absolute(path).parent_path();
  return parse_config(io::read_file(path), base);
}

void RunConfig::validate() const {
  plan.validate();
  for (const auto& p : {codebook, responses})
    if (!std::filesystem::exists(p)) throw Error(Errc::ConfigError, "file not found: " + p.string());
  if (min_n < 1) throw Error(Errc::ConfigError, "min_n must be >= 1");
  if (parallelism < 1) throw Error(Errc::ConfigError, "parallelism must be >= 1");
  if (temperature < 0) throw Error(Errc::ConfigError, "temperature must be >= 0");
  if (max_tokens < 1) throw Error(Errc::ConfigError, "max_tokens must be >= 1");
  if (bootstrap_resamples < 1) throw Error(Errc::ConfigError, "bootstrap resamples must be >= 1");
  if (!(bootstrap_level > 0 && bootstrap_level < 1)) throw Error(Errc::ConfigError, "bootstrap level must be in (0,1)");
  if (denominators.empty()) throw Error(Errc::ConfigError, "at least one denominator is required");

  std::set<std::string> known;
  for (const auto& s : enumerate_strata(response_options.axes)) known.insert(s.name);
  for (const auto* list : {&plan.train_strata, &plan.ood_strata})
    for (const auto& s : *list)
      if (!known.count(s)) throw Error(Errc::ConfigError, "stratum '" + s + "' is not formed from the survey axes");

  for (const auto& [label, m] : models) {
    if (label.empty() || label.find_first_of("/\\ ") != std::string::npos)
      throw Error(Errc::ConfigError, "model label '" + label + "' must be a plain name");
    if (m.type == "openai") {
      if (m.base_url.empty() || m.model.empty())
        throw Error(Errc::ConfigError, "model '" + label + "' needs base_url and model");
    } else if (m.type == "mock") {
      static const std::set<std::string> modes{"gold", "noisy", "refuse", "fixed", "script", "tie", "first"};
      if (!modes.count(m.mode)) throw Error(Errc::ConfigError, "model '" + label + "': unknown mock mode " + m.mode);
      if (m.mode == "script" && !std::filesystem::exists(m.script))
        throw Error(Errc::ConfigError, "script not found: " + m.script.string());
    } else {
      throw Error(Errc::ConfigError, "model '" + label + "': unknown provider type " + m.type);
    }
  }
  if (!judge_model.empty() && !models.count(judge_model))
    throw Error(Errc::ConfigError, "judge model '" + judge_model + "' is not configured");
}

const ProviderConfig& RunConfig::model_config(const std::string& label) const {
  auto it = models.find(label);
  if (it == models.end()) throw Error(Errc::ConfigError, "model '" + label + "' is not configured");
  return it->second;
}

std::vector<std::string> RunConfig::expanded_exclusions() const {
  std::vector<std::string> out;
  for (const auto& spec : exclusions)
    for (auto& id : expand_question_range(spec)) out.push_back(std::move(id));
  return out;
}

std::string example_config_json() {
  json j;
  j["survey"] = {{"codebook", "codebook.json"},
                 {"responses", "responses.csv"},
                 {"delimiter", ","},
                 {"id_column", "respondent_id"},
                 {"axes", kDefaultAxes}};
  j["exclusions"] = {"Q7-Q26"};
  j["drop_negative"] = true;
  j["min_n"] = 30;
  auto plan = SplitPlan::standard();
  j["strata"] = {{"train", plan.train_strata}, {"ood", plan.ood_strata}};
  j["denominators"] = {"min_s_c", "distinct_modes"};
  j["persona"] = {{"nationality", "Singaporean"}};
  j["models"] = {
      {"base", {{"type", "mock"}, {"mode", "noisy"}, {"accuracy", 0.55}}},
      {"tuned", {{"type", "mock"}, {"mode", "noisy"}, {"accuracy", 0.75}}},
      {"oracle", {{"type", "mock"}, {"mode", "gold"}}},
      {"judge", {{"type", "mock"}, {"mode", "gold"}}},
      {"remote", {{"type", "openai"},
                  {"base_url", "https://api.openai.com/v1"},
                  {"model", "gpt-4.1"},
                  {"api_key_env", "OPENAI_API_KEY"}}}};
  j["judge"] = "judge";
  j["parallelism"] = 4;
  j["requests_per_minute"] = 0;
  j["retry"] = {{"max_retries", 3}, {"initial_backoff_seconds", 1.0}, {"multiplier", 2.0}, {"max_backoff_seconds", 30.0}};
  j["temperature"] = 0.0;
  j["max_tokens"] = 2048;
  j["seed"] = 42;
  j["bootstrap"] = {{"resamples", 2000}, {"level", 0.95}};
  j["accuracy_denominator"] = "all_samples";
  j["strict_parsing"] = false;
  j["output_dir"] = "out";
  return j.dump(2) + "\n";
}

}  // namespace valuemap
