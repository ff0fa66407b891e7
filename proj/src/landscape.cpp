#include "valuemap/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "valuemap/error.hpp"
#include "valuemap/stats.hpp"

namespace valuemap {

std::string_view denominator_name(Denominator d) {
  return d == Denominator::MinSubgroupsChoices ? "min_s_c" : "distinct_modes";
}

double entropy_bits(std::span<const int> counts) {
  double total = 0.0;
  for (int c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c <= 0) continue;
    double p = c / total;
    h -= p * std::log2(p);
  }
  return h > 0.0 ? h : 0.0;
}

DiversityScore modal_diversity(std::span<const Code> modes, int n_choices, Denominator denominator) {
  if (modes.empty()) throw Error(Errc::EmptyModes, "no valid subgroup modes");
  if (n_choices < 1) throw Error(Errc::DegenerateScale, "n_choices must be >= 1");

  std::map<Code, int> tally;
  for (Code m : modes) ++tally[m];
  std::vector<int> counts;
  counts.reserve(tally.size());
  for (const auto& [code, count] : tally) counts.push_back(count);
  if (static_cast<int>(counts.size()) > n_choices)
    throw Error(Errc::DegenerateScale, "more distinct modes than answer choices");

  DiversityScore out;
  out.n_valid_subgroups = static_cast<int>(modes.size());
  out.n_distinct_modes = static_cast<int>(counts.size());
  out.denominator_mode = denominator;

  const int base = denominator == Denominator::MinSubgroupsChoices
                       ? std::min(out.n_valid_subgroups, n_choices)
                       : out.n_distinct_modes;
  if (base <= 1) {
    out.degenerate = true;
    return out;
  }
  const double h = entropy_bits(counts);
  if (h == 0.0) return out;
  out.score = std::clamp(h / std::log2(static_cast<double>(base)), 0.0, 1.0);
  return out;
}

double ordinal_wasserstein(const Histogram& p, const Histogram& q, Code scale_min, Code scale_max) {
  if (scale_max <= scale_min) throw Error(Errc::DegenerateScale, "scale range is zero");
  auto total = [&](const Histogram& h) {
    std::int64_t n = 0;
    for (const auto& [code, count] : h) {
      if (count < 0) throw Error(Errc::EmptyHistogram, "negative count");
      if (count > 0 && (code < scale_min || code > scale_max))
        throw Error(Errc::DegenerateScale, "code " + std::to_string(code) + " outside the scale");
      n += count;
    }
    if (n == 0) throw Error(Errc::EmptyHistogram, "histogram has no mass");
    return n;
  };
  const std::int64_t np = total(p), nq = total(q);

  // sum_k |Fp(k) - Fq(k)| = sum_k |cp(k) nq - cq(k) np| / (np nq), kept in integers
  std::int64_t acc = 0, cp = 0, cq = 0;
  auto ip = p.begin(), iq = q.begin();
  for (Code k = scale_min; k < scale_max; ++k) {
    while (ip != p.end() && ip->first <= k) cp += (ip++)->second;
    while (iq != q.end() && iq->first <= k) cq += (iq++)->second;
    std::int64_t d = cp * nq - cq * np;
    acc += d < 0 ? -d : d;
  }
  return static_cast<double>(acc) / (static_cast<double>(np) * static_cast<double>(nq)) /
         static_cast<double>(scale_max - scale_min);
}

DivergenceScore mean_pairwise_divergence(std::span<const SubgroupOpinion* const> opinions,
                                         const QuestionSpec& question) {
  std::vector<const SubgroupOpinion*> valid;
  for (const auto* o : opinions)
    if (o->valid && o->n > 0) valid.push_back(o);
  if (valid.size() < 2)
    throw Error(Errc::InsufficientSubgroups, question.question_id + " has " + std::to_string(valid.size()) +
                                                 " valid subgroup(s)");
  DivergenceScore out;
  out.question_id = question.question_id;
  out.stratum = valid.front()->subgroup.stratum.name;
  double sum = 0.0;
  for (std::size_t i = 0; i < valid.size(); ++i)
    for (std::size_t j = i + 1; j < valid.size(); ++j) {
      sum += ordinal_wasserstein(valid[i]->histogram, valid[j]->histogram, question.scale_min, question.scale_max);
      ++out.pair_count;
    }
  out.score = sum / out.pair_count;
  return out;
}

std::vector<DiversityScore> diversity_scores(const OpinionMatrix& matrix, const SurveyTable& table,
                                             Denominator denominator) {
  std::vector<DiversityScore> out;
  for (const auto& qid : matrix.question_ids()) {
    const QuestionSpec* q = table.find_question(qid);
    if (!q) throw Error(Errc::UnknownQuestion, qid);
    for (const auto& stratum : matrix.strata()) {
      std::vector<Code> modes;
      for (const auto* cell : matrix.slice(qid, stratum.name))
        if (cell->valid && cell->modal_code) modes.push_back(*cell->modal_code);
      if (modes.empty()) continue;
      auto score = modal_diversity(modes, q->n_choices(), denominator);
      score.question_id = qid;
      score.stratum = stratum.name;
      out.push_back(std::move(score));
    }
  }
  return out;
}

std::vector<DivergenceScore> divergence_scores(const OpinionMatrix& matrix, const SurveyTable& table) {
  std::vector<DivergenceScore> out;
  for (const auto& qid : matrix.question_ids()) {
    const QuestionSpec* q = table.find_question(qid);
    if (!q) throw Error(Errc::UnknownQuestion, qid);
    for (const auto& stratum : matrix.strata()) {
      auto cells = matrix.slice(qid, stratum.name);
      auto n_valid = std::count_if(cells.begin(), cells.end(), [](const SubgroupOpinion* c) { return c->valid; });
      if (n_valid < 2) continue;
      auto d = mean_pairwise_divergence(cells, *q);
      d.stratum = stratum.name;
      out.push_back(std::move(d));
    }
  }
  return out;
}

CategoryTable category_average(std::span<const QuestionValue> per_stratum_values,
                               const std::vector<QuestionSpec>& codebook) {
  std::map<std::string, const QuestionSpec*> by_id;
  for (const auto& q : codebook) by_id[q.question_id] = &q;

  std::map<std::string, std::pair<double, int>> per_question;
  for (const auto& v : per_stratum_values) {
    auto& acc = per_question[v.question_id];
    acc.first += v.value;
    ++acc.second;
  }

  struct Acc {
    double sum = 0.0;
    int total = 0;
    int unanimous = 0;
  };
  std::map<std::string, Acc> per_category;
  Acc overall;
  for (const auto& [qid, acc] : per_question) {
    auto it = by_id.find(qid);
    if (it == by_id.end() || it->second->category.empty())
      throw Error(Errc::UnknownCategory, "no category for question " + qid);
    const double mean = acc.first / acc.second;
    for (Acc* a : {&per_category[it->second->category], &overall}) {
      a->sum += mean;
      ++a->total;
      a->unanimous += mean == 0.0;
    }
  }

  CategoryTable table;
  for (const auto& [category, a] : per_category)
    table.rows.push_back({category, a.total, a.unanimous, a.sum / a.total});
  std::sort(table.rows.begin(), table.rows.end(), [](const CategoryReport& x, const CategoryReport& y) {
    if (x.avg_diversity != y.avg_diversity) return x.avg_diversity > y.avg_diversity;
    return x.category < y.category;
  });
  table.overall = {"Overall", overall.total, overall.unanimous, overall.total ? overall.sum / overall.total : 0.0};
  return table;
}

CategoryTable category_report(std::span<const DiversityScore> scores, const std::vector<QuestionSpec>& codebook) {
  if (scores.empty()) throw Error(Errc::InsufficientData, "category_report needs at least one score");
  std::vector<QuestionValue> values;
  values.reserve(scores.size());
  for (const auto& s : scores) values.push_back({s.question_id, s.score});
  return category_average(values, codebook);
}

StabilityResult label_stability(std::span<const SubgroupOpinion* const> cells) {
  std::vector<double> n, margin;
  for (const auto* c : cells) {
    if (!c->valid) continue;
    n.push_back(c->n);
    margin.push_back(c->mode_margin);
  }
  if (n.size() < 3) throw Error(Errc::InsufficientData, "label stability needs at least 3 valid cells");
  auto r = stats::spearman(n, margin);
  return {r.rho, r.p_value, r.n};
}

}  // namespace valuemap
