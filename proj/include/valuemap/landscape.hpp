#pragma once

#include <span>
#include <string>
#include <vector>

#include "valuemap/stratify.hpp"
#include "valuemap/survey.hpp"

namespace valuemap {

enum class Denominator {
  MinSubgroupsChoices,  // log2(min(|S|, |C|))
  DistinctModes,        // log2(|M|)
};

std::string_view denominator_name(Denominator d);

struct DiversityScore {
  std::string question_id;
  std::string stratum;
  double score = 0.0;
  int n_valid_subgroups = 0;
  int n_distinct_modes = 0;
  Denominator denominator_mode = Denominator::MinSubgroupsChoices;
  bool degenerate = false;  // denominator was zero; score reported as 0
};

/// Shannon entropy in bits of a discrete distribution given by counts.
double entropy_bits(std::span<const int> counts);

/// Modal Diversity Score: entropy of the modal answers of a stratum's valid
/// subgroups, normalized to [0, 1]. One mode per valid subgroup.
DiversityScore modal_diversity(std::span<const Code> modes, int n_choices,
                               Denominator denominator = Denominator::MinSubgroupsChoices);

/// W1 between two answer histograms on the integer grid [scale_min,
/// scale_max], divided by the scale range.
double ordinal_wasserstein(const Histogram& p, const Histogram& q, Code scale_min, Code scale_max);

struct DivergenceScore {
  std::string question_id;
  std::string stratum;
  double score = 0.0;
  int pair_count = 0;
};

/// Unweighted mean of ordinal_wasserstein over all pairs of valid opinions.
DivergenceScore mean_pairwise_divergence(std::span<const SubgroupOpinion* const> opinions,
                                         const QuestionSpec& question);

/// One score per (active question, stratum) with at least one valid subgroup.
std::vector<DiversityScore> diversity_scores(const OpinionMatrix& matrix, const SurveyTable& table,
                                             Denominator denominator = Denominator::MinSubgroupsChoices);
/// One score per (active question, stratum) with at least two valid subgroups.
std::vector<DivergenceScore> divergence_scores(const OpinionMatrix& matrix, const SurveyTable& table);

struct CategoryReport {
  std::string category;
  int total_questions = 0;
  int unanimous_questions = 0;
  double avg_diversity = 0.0;
};

struct CategoryTable {
  std::vector<CategoryReport> rows;  // avg_diversity descending, ties by name
  CategoryReport overall;            // averaged over all question means
};

/// Per question, averages its scores across strata; per category, averages
/// those means. A question is unanimous when its mean is exactly 0.
CategoryTable category_report(std::span<const DiversityScore> scores, const std::vector<QuestionSpec>& codebook);

/// Same aggregation for any per-(question, stratum) value.
struct QuestionValue {
  std::string question_id;
  double value = 0.0;
};
CategoryTable category_average(std::span<const QuestionValue> per_stratum_values,
                               const std::vector<QuestionSpec>& codebook);

struct StabilityResult {
  double rho = 0.0;
  double p_value = 1.0;  // normal approximation
  std::size_t n_pairs = 0;
};

/// Spearman correlation between subgroup answer count n and mode margin.
StabilityResult label_stability(std::span<const SubgroupOpinion* const> cells);

}  // namespace valuemap
