#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "valuemap/dataset.hpp"
#include "valuemap/gateway.hpp"
#include "valuemap/stats.hpp"

namespace valuemap {

enum class RefusalReason { NoNumber, OutOfRange, SafetyText };
std::string_view refusal_name(RefusalReason r);

struct ParsedAnswer {
  std::optional<Code> value;
  RefusalReason reason = RefusalReason::NoNumber;  // meaningful only without a value

  static ParsedAnswer of(Code c) { return {c, RefusalReason::NoNumber}; }
  static ParsedAnswer refusal(RefusalReason r) { return {std::nullopt, r}; }
  bool is_value() const { return value.has_value(); }
  std::string describe() const;  // "value(7)" or "refusal(no_number)"
  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

struct ParseOptions {
  bool strict = false;  // only "Answer: N" counts; no lone-integer fallback
};

/// Last "Answer: N" (any case, tolerant of markup around the colon) wins.
/// Without one, a response holding exactly one integer token is taken as
/// the answer. Never throws.
ParsedAnswer parse_numeric(std::string_view raw_text, Code scale_min, Code scale_max, ParseOptions options = {});
ParsedAnswer parse_numeric(std::string_view raw_text, const QuestionSpec& question, ParseOptions options = {});

struct EvalRecord {
  SampleRecord sample;
  std::string raw_text;
  ParsedAnswer parsed;
  bool correct = false;
  std::optional<double> abs_err_norm;  // absent for refusals
};

/// |predicted - gold| / (scale_max - scale_min)
double normalized_abs_error(Code predicted, Code gold, Code scale_min, Code scale_max);

/// Samples without a result, or whose result is not ok, count as
/// refusal(no_number). Results for unknown sample ids throw KeyMismatch.
std::vector<EvalRecord> score_records(const std::vector<SampleRecord>& samples,
                                      const std::vector<CompletionResult>& results, ParseOptions options = {});

enum class GroupBy { Subgroup, Stratum, Overall };

/// Whether refusals sit in the accuracy denominator.
enum class AccuracyDenominator { AllSamples, ParsableOnly };

struct SubgroupMetrics {
  std::string group;    // subgroup key, stratum name or "overall"
  std::string stratum;  // empty for overall
  int n_samples = 0;
  int n_correct = 0;
  int n_wrong = 0;  // parsable but not the gold code
  int n_refusals = 0;
  double accuracy = 0.0;
  double nmae = 0.0;  // NaN when no parsable response
  bool nmae_defined = false;
  double refusal_rate = 0.0;
  double wrong_rate = 0.0;
};

/// Sample-weighted metrics per group, ordered by group name. Throws
/// EmptyGroup on empty input.
std::vector<SubgroupMetrics> aggregate(std::span<const EvalRecord> records, GroupBy group_by,
                                       AccuracyDenominator denominator = AccuracyDenominator::AllSamples);

/// Disparity of per-subgroup accuracy (higher is better) and NMAE (lower is
/// better) within each stratum. Strata with a single subgroup are skipped.
struct EvalDisparity {
  stats::DisparityReport accuracy;
  stats::DisparityReport nmae;
};
EvalDisparity eval_disparity(std::span<const SubgroupMetrics> per_subgroup,
                             stats::SdConvention sd = stats::SdConvention::Population);

}  // namespace valuemap
