#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "valuemap/survey.hpp"

namespace valuemap {

/// A survey shaped like a national values study: 234 questions in 12
/// categories of which Q7-Q26 are yes/no "mentioned" items meant to be
/// excluded, 1259 respondents over sex, age band, ethnicity and religion.
/// With min_n 30 the standard split plan yields 50 train subgroups with full
/// coverage and 48 held-out subgroups, a few of them missing some questions.
struct SyntheticSurvey {
  std::vector<QuestionSpec> codebook;
  std::string responses_csv;
  std::vector<std::string> exclusions;  // "Q7-Q26"
};

SyntheticSurvey make_synthetic_survey(std::uint64_t seed = 2024);

/// Parsed and filtered table for the synthetic survey.
SurveyTable synthetic_table(std::uint64_t seed = 2024);

struct SyntheticPaths {
  std::filesystem::path codebook;
  std::filesystem::path responses;
};
/// Writes codebook.json and responses.csv into `dir`.
SyntheticPaths write_synthetic_survey(const std::filesystem::path& dir, std::uint64_t seed = 2024);

}  // namespace valuemap
