#include "valuemap/numeric_eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>

#include "valuemap/error.hpp"
#include "valuemap/io.hpp"

namespace valuemap {

std::string_view refusal_name(RefusalReason r) {
  switch (r) {
    case RefusalReason::NoNumber: return "no_number";
    case RefusalReason::OutOfRange: return "out_of_range";
    case RefusalReason::SafetyText: return "safety_text";
  }
  return "?";
}

std::string ParsedAnswer::describe() const {
  if (value) return "value(" + std::to_string(*value) + ")";
  return "refusal(" + std::string(refusal_name(reason)) + ")";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

struct IntToken {
  bool negative = false;
  std::string_view digits;
};

// Parses digits as a long long; nullopt when it overflows.
std::optional<long long> to_integer(const IntToken& t) {
  long long v = 0;
  auto [p, ec] = std::from_chars(t.digits.data(), t.digits.data() + t.digits.size(), v);
  if (ec != std::errc() || p != t.digits.data() + t.digits.size()) return std::nullopt;
  return t.negative ? -v : v;
}

bool skippable(char c) {
  switch (c) {
    case ' ': case '\t': case '\n': case '\r': case ':': case '*': case '"': case '\'': case '`':
    case '(': case '[': case '{': case '=': case '#': case '_': case '>':
      return true;
    default:
      return false;
  }
}

// Integer after an "answer" keyword that starts at `pos` (already matched).
std::optional<IntToken> answer_value(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  std::size_t skipped = 0;
  while (i < s.size() && skipped < 16) {
    char c = s[i];
    if (skippable(c)) {
      ++i, ++skipped;
    } else if (c == '-' && i + 1 < s.size() && !is_digit(s[i + 1])) {
      ++i, ++skipped;  // "Answer - 7"
    } else {
      break;
    }
  }
  IntToken t;
  if (i < s.size() && s[i] == '-' && i + 1 < s.size() && is_digit(s[i + 1])) {
    t.negative = true;
    ++i;
  }
  std::size_t start = i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == start) return std::nullopt;
  // "7.5" or "7a" is not an integer answer
  if (i < s.size() && (is_alpha(s[i]) || (s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1]))))
    return std::nullopt;
  t.digits = s.substr(start, i - start);
  return t;
}

std::vector<IntToken> integer_tokens(std::string_view s) {
  std::vector<IntToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    IntToken t;
    t.digits = s.substr(start, i - start);
    t.negative = start > 0 && s[start - 1] == '-' && (start == 1 || !(is_alpha(s[start - 2]) || is_digit(s[start - 2])));
    out.push_back(t);
  }
  return out;
}

bool contains_ci(std::string_view hay, std::string_view needle) {
  if (needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    std::size_t k = 0;
    while (k < needle.size() && lower(hay[i + k]) == needle[k]) ++k;
    if (k == needle.size()) return true;
  }
  return false;
}

const std::string_view kSafetyPhrases[] = {
    "i cannot",       "i can't",          "i can not",        "i am unable",      "i'm unable",
    "i won't",        "i will not",       "as an ai",         "as a language model",
    "i'm not able",   "i am not able",    "not appropriate",  "i do not have personal",
    "i don't have personal", "i must decline", "i'd rather not"};

bool mentions_safety(std::string_view s) {
  for (auto p : kSafetyPhrases)
    if (contains_ci(s, p)) return true;
  return false;
}

ParsedAnswer classify(const IntToken& t, Code lo, Code hi) {
  auto v = to_integer(t);
  if (!v || *v < lo || *v > hi) return ParsedAnswer::refusal(RefusalReason::OutOfRange);
  return ParsedAnswer::of(static_cast<Code>(*v));
}

}  // namespace

ParsedAnswer parse_numeric(std::string_view s, Code scale_min, Code scale_max, ParseOptions options) {
  static constexpr std::string_view kw = "answer";
  std::optional<IntToken> last;
  for (std::size_t i = 0; i + kw.size() <= s.size(); ++i) {
    if (lower(s[i]) != 'a') continue;
    if (i > 0 && is_alpha(s[i - 1])) continue;
    std::size_t k = 1;
    while (k < kw.size() && lower(s[i + k]) == kw[k]) ++k;
    if (k < kw.size()) continue;
    if (auto t = answer_value(s, i + kw.size())) last = t;
  }
  if (last) return classify(*last, scale_min, scale_max);
  if (options.strict) return ParsedAnswer::refusal(RefusalReason::NoNumber);

  auto tokens = integer_tokens(s);
  if (tokens.size() == 1) return classify(tokens.front(), scale_min, scale_max);
  if (tokens.size() > 1 && mentions_safety(s)) return ParsedAnswer::refusal(RefusalReason::SafetyText);
  return ParsedAnswer::refusal(RefusalReason::NoNumber);
}

ParsedAnswer parse_numeric(std::string_view raw_text, const QuestionSpec& question, ParseOptions options) {
  return parse_numeric(raw_text, question.scale_min, question.scale_max, options);
}

double normalized_abs_error(Code predicted, Code gold, Code scale_min, Code scale_max) {
  if (scale_max <= scale_min) throw Error(Errc::DegenerateScale, "scale range must be positive");
  return std::abs(static_cast<double>(predicted) - gold) / static_cast<double>(scale_max - scale_min);
}

std::vector<EvalRecord> score_records(const std::vector<SampleRecord>& samples,
                                      const std::vector<CompletionResult>& results, ParseOptions options) {
  std::map<std::string_view, const CompletionResult*> by_id;
  for (const auto& r : results)
    if (!by_id.emplace(r.request_id, &r).second) throw Error(Errc::DuplicateResult, r.request_id);
  std::map<std::string_view, bool> known;
  for (const auto& s : samples) known.emplace(s.id, true);
  for (const auto& [id, r] : by_id)
    if (!known.count(id)) throw Error(Errc::KeyMismatch, "result for unknown sample " + std::string(id));

  std::vector<EvalRecord> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    EvalRecord e;
    e.sample = s;
    auto it = by_id.find(s.id);
    if (it == by_id.end() || it->second->status != CompletionStatus::Ok) {
      e.parsed = ParsedAnswer::refusal(RefusalReason::NoNumber);
      if (it != by_id.end()) e.raw_text = it->second->raw_text;
    } else {
      e.raw_text = it->second->raw_text;
      e.parsed = parse_numeric(e.raw_text, s.scale_min, s.scale_max, options);
    }
    if (e.parsed.value) {
      e.correct = *e.parsed.value == s.gold_modal_code;
      e.abs_err_norm = normalized_abs_error(*e.parsed.value, s.gold_modal_code, s.scale_min, s.scale_max);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<SubgroupMetrics> aggregate(std::span<const EvalRecord> records, GroupBy group_by,
                                       AccuracyDenominator denominator) {
  if (records.empty()) throw Error(Errc::EmptyGroup, "no records to aggregate");
  struct Acc {
    std::string stratum;
    int n = 0, correct = 0, wrong = 0, refusals = 0;
    double err_sum = 0.0;
  };
  std::map<std::string, Acc> groups;
  for (const auto& r : records) {
    std::string key;
    std::string stratum = r.sample.subgroup.stratum.name;
    switch (group_by) {
      case GroupBy::Subgroup: key = r.sample.subgroup.key(); break;
      case GroupBy::Stratum: key = stratum; break;
      case GroupBy::Overall: key = "overall"; stratum.clear(); break;
    }
    auto& a = groups[key];
    a.stratum = stratum;
    ++a.n;
    if (!r.parsed.value) {
      ++a.refusals;
    } else {
      r.correct ? ++a.correct : ++a.wrong;
      a.err_sum += r.abs_err_norm.value_or(0.0);
    }
  }
  std::vector<SubgroupMetrics> out;
  for (const auto& [key, a] : groups) {
    SubgroupMetrics m;
    m.group = key;
    m.stratum = a.stratum;
    m.n_samples = a.n;
    m.n_correct = a.correct;
    m.n_wrong = a.wrong;
    m.n_refusals = a.refusals;
    const int parsable = a.correct + a.wrong;
    const int acc_den = denominator == AccuracyDenominator::AllSamples ? a.n : parsable;
    m.accuracy = acc_den > 0 ? static_cast<double>(a.correct) / acc_den : 0.0;
    m.nmae_defined = parsable > 0;
    m.nmae = parsable > 0 ? a.err_sum / parsable : std::numeric_limits<double>::quiet_NaN();
    m.refusal_rate = static_cast<double>(a.refusals) / a.n;
    m.wrong_rate = static_cast<double>(a.wrong) / a.n;
    out.push_back(m);
  }
  return out;
}

EvalDisparity eval_disparity(std::span<const SubgroupMetrics> per_subgroup, stats::SdConvention sd) {
  std::map<std::string, std::vector<double>> acc, nmae;
  for (const auto& m : per_subgroup) {
    acc[m.stratum].push_back(m.accuracy);
    if (m.nmae_defined) nmae[m.stratum].push_back(m.nmae);
  }
  auto drop_singletons = [](std::map<std::string, std::vector<double>>& m) {
    for (auto it = m.begin(); it != m.end();) it = it->second.size() < 2 ? m.erase(it) : std::next(it);
  };
  drop_singletons(acc);
  drop_singletons(nmae);
  EvalDisparity d;
  d.accuracy.metric_name = "accuracy";
  d.nmae.metric_name = "nmae";
  if (!acc.empty()) d.accuracy = stats::stratum_disparity(acc, "accuracy", true, sd);
  if (!nmae.empty()) d.nmae = stats::stratum_disparity(nmae, "nmae", false, sd);
  return d;
}

}  // namespace valuemap
