#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "valuemap/config.hpp"
#include "valuemap/dataset.hpp"
#include "valuemap/gateway.hpp"
#include "valuemap/judge.hpp"
#include "valuemap/numeric_eval.hpp"

namespace valuemap {

/// Files a command wrote plus a short human-readable summary.
struct CommandResult {
  std::vector<std::filesystem::path> written;
  std::string summary;
};

/// Parses the survey named by the config and applies exclusions and
/// negative-code filtering.
SurveyTable load_survey(const RunConfig& config);

enum class PromptKind { Numeric, Open, Judge };

/// Provider for a configured model. Mock providers look up gold answers in
/// `samples` by request id (judge requests use "<sample id>#<pass>").
std::shared_ptr<Provider> make_provider(const ProviderConfig& model, const std::vector<SampleRecord>& samples,
                                        PromptKind kind);

std::filesystem::path dataset_dir(const RunConfig& config);
std::filesystem::path run_dir(const RunConfig& config, const std::string& model, Split split, PromptKind kind);
std::filesystem::path judge_dir(const RunConfig& config, const std::string& evaluatee, const std::string& baseline,
                                Split split);
std::filesystem::path compare_dir(const RunConfig& config, const std::string& a, const std::string& b, Split split);

/// Requests for every record of a split in the given prompt kind.
std::vector<CompletionRequest> build_requests(const RunConfig& config, const std::vector<SampleRecord>& samples,
                                              const std::string& model, PromptKind kind);
/// Content address of a run: provider, decoding settings and prompts.
std::string run_log_path_name(const RunConfig& config, const std::string& model,
                              const std::vector<CompletionRequest>& requests);

struct EvalOptions {
  std::string model;
  Split split = Split::EvalOod;
  bool replay = false;  // serve only stored responses, never call the provider
  bool fresh = false;   // ignore stored responses and query everything again
};

struct JudgeOptions {
  std::string evaluatee;
  std::string baseline;
  Split split = Split::EvalOod;
  bool replay = false;
  bool fresh = false;
};

struct CompareOptions {
  std::string run_a;  // e.g. the base model
  std::string run_b;  // e.g. the fine-tuned model
  Split split = Split::EvalOod;
};

CommandResult cmd_landscape(const RunConfig& config);
CommandResult cmd_build_dataset(const RunConfig& config);
CommandResult cmd_eval_numeric(const RunConfig& config, const EvalOptions& options);
CommandResult cmd_eval_open(const RunConfig& config, const EvalOptions& options);
CommandResult cmd_judge(const RunConfig& config, const JudgeOptions& options);
CommandResult cmd_compare(const RunConfig& config, const CompareOptions& options);
/// Main-table style summary of every scored run (and judged pair against
/// `baseline`, when given) for a split.
CommandResult cmd_report(const RunConfig& config, Split split, const std::string& baseline = "");

}  // namespace valuemap
