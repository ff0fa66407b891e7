#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace valuemap::stats {

/// (max - min) / max over subgroup metric values. The same ratio is used for
/// higher- and lower-is-better metrics; the flag only documents direction.
/// All-zero input yields 0 (no disparity).
double normalized_range(std::span<const double> values, bool higher_is_better = true);

enum class SdConvention { Population, Sample };

/// sigma / mu. Population sigma by default. All-zero input yields 0.
double coefficient_of_variation(std::span<const double> values, SdConvention sd = SdConvention::Population);

struct StratumDisparity {
  std::string stratum;
  double normalized_range = 0.0;
  double cv = 0.0;
  std::size_t n_subgroups = 0;
};

struct DisparityReport {
  std::string metric_name;
  std::vector<StratumDisparity> strata;  // ordered by stratum name
  double mean_normalized_range = 0.0;    // unweighted over strata
  double mean_cv = 0.0;
};

/// values_by_stratum: stratum name -> one metric value per subgroup.
DisparityReport stratum_disparity(const std::map<std::string, std::vector<double>>& values_by_stratum,
                                  const std::string& metric_name, bool higher_is_better = true,
                                  SdConvention sd = SdConvention::Population);

// ---------------------------------------------------------------------------
// Paired bootstrap

struct BootstrapCI {
  double point_delta = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int resamples = 0;
  double level = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr int kDefaultResamples = 2000;
inline constexpr double kDefaultLevel = 0.95;
inline constexpr std::uint64_t kDefaultSeed = 42;

/// Fills `out` with n indices in [0, n) drawn with replacement for resample
/// number `resample`. The stream depends only on (seed, resample, n): a
/// SplitMix64-derived seed drives std::mt19937_64 with rejection sampling.
void bootstrap_indices(std::uint64_t seed, int resample, std::size_t n, std::vector<std::size_t>& out);

/// Linear-interpolated quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

/// Percentile CI of mean(treat) - mean(base) over paired resamples.
BootstrapCI paired_bootstrap_ci(std::span<const double> base, std::span<const double> treat,
                                int resamples = kDefaultResamples, double level = kDefaultLevel,
                                std::uint64_t seed = kDefaultSeed);

// ---------------------------------------------------------------------------
// Rank correlation

/// 1-based ranks, ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  // two-sided, normal approximation z = rho * sqrt(n - 1)
  std::size_t n = 0;
};

SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Agreement

/// Pairwise judgement labels in fixed index order.
enum class Choice : int { A = 0, B = 1, Tie = 2 };
using WeightMatrix = std::vector<std::vector<double>>;

/// 1.0 exact, 0.5 when exactly one side is Tie, 0.0 for A vs B.
WeightMatrix judge_weights();

/// Weighted Cohen's kappa over integer category indices [0, weights.size()).
double weighted_kappa(std::span<const int> a, std::span<const int> b, const WeightMatrix& weights);
double agreement_accuracy(std::span<const int> a, std::span<const int> b);

struct AgreementResult {
  double accuracy = 0.0;
  double weighted_kappa = 0.0;
  std::size_t n_items = 0;
  bool kappa_defined = true;  // false when expected agreement is 1
};

AgreementResult agreement(std::span<const int> a, std::span<const int> b, const WeightMatrix& weights);

// ---------------------------------------------------------------------------
// Improvement ranking

struct RankedDelta {
  double delta = 0.0;        // post - pre
  double improvement = 0.0;  // delta, negated when lower is better
  int rank = 0;              // competition ranking, 1 = largest improvement
};

/// round_decimals >= 0 compares improvements after rounding (ties as printed).
std::map<std::string, RankedDelta> improvement_ranks(const std::map<std::string, double>& pre,
                                                     const std::map<std::string, double>& post,
                                                     bool higher_is_better = true, int round_decimals = -1);

// ---------------------------------------------------------------------------
// Human annotation import

struct Annotation {
  std::string item_id;
  std::string annotator_id;
  std::string criterion;
  std::string label;  // A | B | Tie, or a Likert rating
};

/// Delimited text with header columns item_id, annotator_id, criterion, label.
std::vector<Annotation> load_annotations(const std::filesystem::path& path, char delimiter = ',');

/// Case-insensitive A/B/Tie ("Response A", "tie", ...); throws on anything else.
Choice parse_choice(const std::string& label);

/// Mean numeric rating per criterion, over labels that parse as numbers.
std::map<std::string, double> likert_means(const std::vector<Annotation>& annotations);

/// Agreement between two annotators on one criterion, over the items both labeled.
AgreementResult annotator_agreement(const std::vector<Annotation>& annotations, const std::string& criterion,
                                    const std::string& annotator_a, const std::string& annotator_b);

}  // namespace valuemap::stats
