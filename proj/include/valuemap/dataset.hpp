#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "valuemap/stratify.hpp"
#include "valuemap/survey.hpp"

namespace valuemap {

inline constexpr std::string_view kTemplateVersion = "persona-prompts/1";

enum class PromptMode { Numerical, OpenEnded };

struct PromptSet {
  std::string system_prompt;
  std::string user_prompt;
  PromptMode mode = PromptMode::Numerical;

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// Display forms for persona descriptors, keyed by axis then raw value.
struct PersonaStyle {
  std::string nationality = "Singaporean";
  std::map<std::string, std::map<std::string, std::string>> display;

  /// Display forms for the value labels this toolkit produces by default.
  static PersonaStyle defaults();
  /// Entries of `overrides` replace or extend this style.
  void merge(const PersonaStyle& overrides);
};

std::string render_persona(const Subgroup& subgroup, const PersonaStyle& style);

/// "code: label" lines in ascending code order. Only labelled codes are
/// listed when labels are sparse; bare codes when none are labelled.
std::string render_choices(const QuestionSpec& question);

std::string system_prompt(const std::string& persona, const PersonaStyle& style);
PromptSet render_prompts(const QuestionSpec& question, const Subgroup& subgroup, PromptMode mode,
                         const PersonaStyle& style);

enum class Split { Train, EvalOod };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct SampleRecord {
  std::string id;  // "<question>_<stratum>_<subgroup>"
  std::string question_id;
  Subgroup subgroup;
  std::string persona_text;
  Split split = Split::Train;
  PromptSet prompts;            // numerical
  std::string open_user_prompt; // open-ended user prompt, same system prompt
  Code gold_modal_code = 0;
  std::string gold_stance_label;
  Code scale_min = 0;
  Code scale_max = 0;
  int answered_n = 0;

  std::string target_completion() const { return "Answer: " + std::to_string(gold_modal_code); }
  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct StratumCount {
  std::string stratum;
  Split split = Split::Train;
  int subgroups = 0;
  int samples = 0;

  friend bool operator==(const StratumCount&, const StratumCount&) = default;
};

struct SplitPlan {
  std::vector<std::string> train_strata;
  std::vector<std::string> ood_strata;
  ValidityScope train_scope = ValidityScope::WholeSubgroup;
  ValidityScope ood_scope = ValidityScope::PerQuestion;

  /// Seven single-axis and pairwise training strata; three held-out pairs.
  static SplitPlan standard();
  /// Throws OverlappingStrata when a stratum is listed in both splits.
  void validate() const;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::vector<StratumCount> counts;  // split, then samples descending
  int min_n = 30;
  std::vector<std::string> exclusions;
  std::string template_version = std::string(kTemplateVersion);

  std::vector<const SampleRecord*> of_split(Split s) const;
  int total(Split s) const;
  int subgroup_total(Split s) const;
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// One record per valid (question, subgroup) cell of every listed stratum.
/// Train cells need a subgroup population >= min_n (whole-subgroup scope) or
/// an answered count >= min_n (per-question scope); OOD defaults to the latter.
DatasetManifest build_splits(const OpinionMatrix& matrix, const SurveyTable& table, const SplitPlan& plan,
                             const PersonaStyle& style);

/// (axis, value) pairs used by OOD subgroups that no training record covers.
std::vector<std::pair<std::string, std::string>> uncovered_ood_components(const DatasetManifest& manifest);

/// JSON object per line: system, user, assistant, plus the record metadata
/// needed to rebuild the record. Records of `split` only, ordered by
/// stratum, subgroup, question id.
void export_training_records(const DatasetManifest& manifest, const std::filesystem::path& path,
                             std::optional<Split> split = Split::Train);
std::vector<SampleRecord> import_training_records(const std::filesystem::path& path);

std::string record_to_jsonl(const SampleRecord& record);
SampleRecord record_from_jsonl(std::string_view line);

/// Writes train.jsonl, eval_ood.jsonl and manifest.json into `dir`.
void export_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir);
DatasetManifest import_manifest(const std::filesystem::path& dir);

std::vector<StratumCount> count_records(const std::vector<SampleRecord>& records);

}  // namespace valuemap
