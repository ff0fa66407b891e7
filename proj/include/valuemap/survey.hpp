#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace valuemap {

/// Integer answer code on a question's ordinal scale.
using Code = int;

struct QuestionSpec {
  std::string question_id;
  std::string text;
  std::string category;
  Code scale_min = 0;
  Code scale_max = 0;
  std::map<Code, std::string> choice_labels;
  bool excluded = false;

  int n_choices() const { return scale_max - scale_min + 1; }
  int scale_range() const { return scale_max - scale_min; }
  bool in_range(Code c) const { return c >= scale_min && c <= scale_max; }
  /// Label text for a code, or the code itself rendered as text when unlabeled.
  std::string label_or_code(Code c) const;

  friend bool operator==(const QuestionSpec&, const QuestionSpec&) = default;
};

inline const std::vector<std::string> kDefaultAxes{"sex", "age_group", "ethnicity", "religion"};
inline constexpr std::string_view kUnknownToken = "unknown";

struct RespondentRecord {
  std::string respondent_id;
  std::map<std::string, std::string> demographics;
  std::map<std::string, Code> answers;

  friend bool operator==(const RespondentRecord&, const RespondentRecord&) = default;
};

/// Cumulative record of what loading and filtering removed. Counters add up
/// across repeated filter passes, so a second identical pass leaves them as is.
struct FilterLog {
  std::vector<std::string> sources;
  std::size_t unparsable_cells = 0;
  std::set<std::string> excluded_questions;
  std::set<std::string> unknown_exclusions;
  std::size_t below_range_removed = 0;
  std::size_t above_range_removed = 0;
  std::size_t excluded_answers_removed = 0;

  std::string to_json() const;
  friend bool operator==(const FilterLog&, const FilterLog&) = default;
};

struct SurveyTable {
  std::vector<QuestionSpec> questions;
  std::vector<RespondentRecord> respondents;
  std::vector<std::string> axes = kDefaultAxes;
  std::string unknown_token = std::string(kUnknownToken);
  FilterLog provenance;

  const QuestionSpec* find_question(std::string_view id) const;
  /// Non-excluded questions in natural id order.
  std::vector<const QuestionSpec*> active_questions() const;

  friend bool operator==(const SurveyTable&, const SurveyTable&) = default;
};

/// Codebook: a JSON array of question entries, or an object whose
/// "questions" member is that array. Entry fields: id, text, category,
/// scale_min, scale_max, labels (object code -> label), optional excluded.
std::vector<QuestionSpec> parse_codebook(std::string_view json_text);
std::vector<QuestionSpec> load_codebook(const std::filesystem::path& path);
std::string codebook_to_json(const std::vector<QuestionSpec>& questions);

struct ResponseOptions {
  char delimiter = ',';
  std::string id_column = "respondent_id";
  std::vector<std::string> axes = kDefaultAxes;
  /// When set, the "age_group" axis is derived from this integer column.
  std::optional<std::string> raw_age_column;
  std::string unknown_token = std::string(kUnknownToken);
  /// Extra non-question columns to tolerate (weights, wave ids, ...).
  std::vector<std::string> ignore_columns;
};

SurveyTable parse_responses(std::istream& in, const std::vector<QuestionSpec>& codebook,
                            const ResponseOptions& options = {}, std::string source = "<stream>");
SurveyTable load_responses(const std::filesystem::path& path, const std::vector<QuestionSpec>& codebook,
                           const ResponseOptions& options = {});

/// Removes answers outside each question's scale (codes below scale_min only
/// when drop_negative is set) and strips excluded questions from every
/// respondent. Never removes respondents.
SurveyTable apply_filters(const SurveyTable& table, const std::vector<std::string>& exclusion_ids,
                          bool drop_negative = true);

/// "Q7-Q26" or "Q7..Q26" -> Q7, Q8, ..., Q26. Plain ids pass through.
std::vector<std::string> expand_question_range(std::string_view spec);

/// Buckets a raw age into 16-24, 25-34, ..., 65+; below 16 is unknown.
std::string age_bucket(int age, std::string_view unknown_token = kUnknownToken);

}  // namespace valuemap
