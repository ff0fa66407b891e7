#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuemap/survey.hpp"

namespace valuemap {

struct JudgeCase {
  std::string case_id;
  std::string group;  // reporting group, e.g. the stratum
  std::string persona_text;
  QuestionSpec question;
  std::string gold_stance_label;
  std::string response_evaluatee;
  std::string response_baseline;
};

/// Evaluatee goes into Response A when `a_is_evaluatee`, else Response B.
/// Throws EmptyResponse when either response is blank.
std::string build_judge_prompt(const JudgeCase& c, bool a_is_evaluatee,
                               std::string_view nationality = "Singaporean");

enum class Winner { A, B, Tie };
std::string_view winner_name(Winner w);

enum class Criterion { Persona = 0, Value = 1, Overall = 2 };
inline constexpr std::array<Criterion, 3> kCriteria{Criterion::Persona, Criterion::Value, Criterion::Overall};
std::string_view criterion_name(Criterion c);

struct Verdict {
  Winner persona = Winner::Tie;
  Winner value = Winner::Tie;
  Winner overall = Winner::Tie;
  std::string judge_reasoning;

  Winner get(Criterion c) const;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Last JSON object in the text holding persona_winner, value_winner and
/// overall_winner. Throws MalformedVerdict.
Verdict parse_verdict(std::string_view raw_text);
std::optional<Verdict> try_parse_verdict(std::string_view raw_text);

/// Evaluatee score for one pass: win 1, tie 0.5, loss 0.
double pass_score(Winner w, bool evaluatee_is_a);

/// Pass 1 puts the evaluatee in A, pass 2 in B.
struct PairScore {
  std::array<double, 3> wr{};                // per criterion
  std::array<std::optional<double>, 3> s1{};  // absent when the pass was invalid
  std::array<std::optional<double>, 3> s2{};
  bool pass1_valid = false;
  bool pass2_valid = false;
  bool single_pass() const { return pass1_valid != pass2_valid; }
};

/// With one invalid pass the valid pass alone gives the score. Throws
/// BothPassesInvalid when neither verdict parsed.
PairScore score_pair(const std::optional<Verdict>& pass1, const std::optional<Verdict>& pass2);
double score_pair(const std::optional<Verdict>& pass1, const std::optional<Verdict>& pass2, Criterion c);

struct CaseOutcome {
  std::string case_id;
  std::string group;
  std::optional<PairScore> score;  // absent when both passes were invalid
};

struct WinRateSummary {
  std::string group;
  std::array<double, 3> wr{};  // mean over scored cases
  int n_cases = 0;             // scored
  int n_single_pass = 0;
  int n_excluded = 0;  // both passes invalid
};

/// Unweighted mean over scored cases. A model judged against itself reports
/// 0.5 on every criterion regardless of verdicts. Empty input reports zero
/// cases with NaN rates.
WinRateSummary aggregate_win_rates(std::span<const CaseOutcome> outcomes, bool self_comparison = false,
                                   const std::string& group = "overall");
/// One entry per group in name order, then an "overall" entry.
std::vector<WinRateSummary> aggregate_win_rates_by_group(std::span<const CaseOutcome> outcomes,
                                                         bool self_comparison = false);

}  // namespace valuemap
