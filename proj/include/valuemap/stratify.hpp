#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valuemap/survey.hpp"

namespace valuemap {

/// One or two demographic axes. Pairs are named "<a>_x_<b>" using short axis
/// names ("age_group" shortens to "age"), giving e.g. "sex_x_age".
struct Stratum {
  std::vector<std::string> axes;
  std::string name;

  static Stratum of(std::vector<std::string> axes);
  friend bool operator==(const Stratum&, const Stratum&) = default;
};

std::string axis_short_name(std::string_view axis);
std::string stratum_name(const std::vector<std::string>& axes);

struct Subgroup {
  Stratum stratum;
  std::vector<std::string> values;  // one per stratum axis, same order
  int population_n = 0;

  /// Values joined with '_', e.g. "Female_Chinese".
  std::string name() const;
  /// "<stratum>/<name>", unique across strata.
  std::string key() const { return stratum.name + "/" + name(); }

  friend bool operator==(const Subgroup&, const Subgroup&) = default;
};

using Histogram = std::map<Code, int>;

struct ModeSummary {
  Code modal_code = 0;
  double margin = 0.0;
};

/// Mode with ties broken to the lowest code; margin is the proportion gap
/// between the top two counts (second count 0 when one code is observed).
std::optional<ModeSummary> summarize_histogram(const Histogram& histogram);

struct SubgroupOpinion {
  std::string question_id;
  Subgroup subgroup;
  Histogram histogram;
  int n = 0;
  std::optional<Code> modal_code;  // absent when n == 0
  double mode_margin = 0.0;
  bool valid = false;  // n >= min_n
};

/// All single-axis strata followed by all unordered pairs, in input order.
std::vector<Stratum> enumerate_strata(const std::vector<std::string>& axes);

/// Every value combination observed in the table (respondents with the
/// unknown token on any stratum axis are left out), ordered by values.
std::vector<Subgroup> observed_subgroups(const SurveyTable& table, const Stratum& stratum);

SubgroupOpinion compute_opinion(const SurveyTable& table, std::string_view question_id, const Subgroup& subgroup,
                                int min_n = 30);

enum class ValidityScope { WholeSubgroup, PerQuestion };

std::vector<Subgroup> valid_subgroups(const SurveyTable& table, const Stratum& stratum, int min_n,
                                      ValidityScope scope, std::string_view question_id = {});

/// Opinions for every active question x every observed subgroup of the given
/// strata, ordered by (question id, stratum name, subgroup values).
class OpinionMatrix {
 public:
  OpinionMatrix() = default;
  OpinionMatrix(std::vector<Stratum> strata, std::map<std::string, std::vector<Subgroup>> subgroups,
                std::vector<SubgroupOpinion> cells, int min_n);

  const std::vector<SubgroupOpinion>& cells() const { return cells_; }
  const std::vector<Stratum>& strata() const { return strata_; }
  const std::vector<Subgroup>& subgroups(std::string_view stratum) const;
  const Stratum& stratum(std::string_view name) const;
  bool has_stratum(std::string_view name) const;
  int min_n() const { return min_n_; }

  const SubgroupOpinion* find(std::string_view question_id, std::string_view subgroup_key) const;
  std::vector<const SubgroupOpinion*> slice(std::string_view question_id, std::string_view stratum) const;
  std::vector<std::string> question_ids() const;

  /// question_id, stratum, subgroup, population_n, n, modal_code, mode_margin, valid
  std::string to_csv() const;

 private:
  std::vector<Stratum> strata_;
  std::map<std::string, std::vector<Subgroup>, std::less<>> subgroups_;
  std::vector<SubgroupOpinion> cells_;
  std::map<std::string, std::size_t, std::less<>> index_;  // qid + '\n' + subgroup key
  std::map<std::string, std::pair<std::size_t, std::size_t>, std::less<>> ranges_;  // qid + '\n' + stratum
  int min_n_ = 30;
};

OpinionMatrix opinion_matrix(const SurveyTable& table, const std::vector<Stratum>& strata, int min_n = 30);

}  // namespace valuemap
