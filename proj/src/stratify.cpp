#include "valuemap/stratify.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "valuemap/error.hpp"
#include "valuemap/io.hpp"

namespace valuemap {

std::string axis_short_name(std::string_view axis) {
  constexpr std::string_view suffix = "_group";
  if (axis.size() > suffix.size() && axis.substr(axis.size() - suffix.size()) == suffix)
    axis.remove_suffix(suffix.size());
  return std::string(axis);
}

std::string stratum_name(const std::vector<std::string>& axes) {
  if (axes.size() == 1) return axes.front();
  std::string name;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) name += "_x_";
    name += axis_short_name(axes[i]);
  }
  return name;
}

Stratum Stratum::of(std::vector<std::string> axes) {
  if (axes.empty() || axes.size() > 2)
    throw Error(Errc::UnknownAxis, "a stratum spans one or two axes, got " + std::to_string(axes.size()));
  if (axes.size() == 2 && axes[0] == axes[1]) throw Error(Errc::DuplicateAxis, axes[0]);
  Stratum s;
  s.name = stratum_name(axes);
  s.axes = std::move(axes);
  return s;
}

std::string Subgroup::name() const {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += '_';
    out += values[i];
  }
  return out;
}

std::optional<ModeSummary> summarize_histogram(const Histogram& histogram) {
  int n = 0, top = -1, second = 0;
  Code mode = 0;
  for (const auto& [code, count] : histogram) {
    if (count <= 0) continue;
    n += count;
    // ascending code order, strict '>' keeps the lowest code on ties
    if (count > top) {
      second = std::max(second, top);
      top = count;
      mode = code;
    } else {
      second = std::max(second, count);
    }
  }
  if (n == 0) return std::nullopt;
  return ModeSummary{mode, static_cast<double>(top - second) / n};
}

std::vector<Stratum> enumerate_strata(const std::vector<std::string>& axes) {
  std::set<std::string> seen;
  for (const auto& a : axes)
    if (!seen.insert(a).second) throw Error(Errc::DuplicateAxis, a);
  if (axes.empty()) throw Error(Errc::UnknownAxis, "no axes given");
  std::vector<Stratum> out;
  for (const auto& a : axes) out.push_back(Stratum::of({a}));
  for (std::size_t i = 0; i < axes.size(); ++i)
    for (std::size_t j = i + 1; j < axes.size(); ++j) out.push_back(Stratum::of({axes[i], axes[j]}));
  return out;
}

namespace {

void check_axes(const SurveyTable& table, const Stratum& stratum) {
  for (const auto& axis : stratum.axes)
    if (std::find(table.axes.begin(), table.axes.end(), axis) == table.axes.end())
      throw Error(Errc::UnknownAxis, axis);
}

// Values of one respondent on the stratum's axes; nullopt when any is unknown.
std::optional<std::vector<std::string>> values_of(const SurveyTable& table, const RespondentRecord& r,
                                                  const Stratum& stratum) {
  std::vector<std::string> values;
  values.reserve(stratum.axes.size());
  for (const auto& axis : stratum.axes) {
    auto it = r.demographics.find(axis);
    if (it == r.demographics.end() || it->second == table.unknown_token || it->second.empty()) return std::nullopt;
    values.push_back(it->second);
  }
  return values;
}

const QuestionSpec& active_question(const SurveyTable& table, std::string_view question_id) {
  const QuestionSpec* q = table.find_question(question_id);
  if (!q || q->excluded) throw Error(Errc::UnknownQuestion, std::string(question_id));
  return *q;
}

}  // namespace

std::vector<Subgroup> observed_subgroups(const SurveyTable& table, const Stratum& stratum) {
  check_axes(table, stratum);
  std::map<std::vector<std::string>, int> counts;
  for (const auto& r : table.respondents)
    if (auto v = values_of(table, r, stratum)) ++counts[*v];
  std::vector<Subgroup> out;
  for (auto& [values, n] : counts) out.push_back(Subgroup{stratum, values, n});
  return out;
}

SubgroupOpinion compute_opinion(const SurveyTable& table, std::string_view question_id, const Subgroup& subgroup,
                                int min_n) {
  active_question(table, question_id);
  check_axes(table, subgroup.stratum);
  if (subgroup.values.size() != subgroup.stratum.axes.size())
    throw Error(Errc::UnknownAxisValue, "subgroup " + subgroup.name() + " does not match stratum " +
                                            subgroup.stratum.name);
  for (std::size_t i = 0; i < subgroup.values.size(); ++i) {
    const auto& axis = subgroup.stratum.axes[i];
    bool seen = std::any_of(table.respondents.begin(), table.respondents.end(), [&](const RespondentRecord& r) {
      auto it = r.demographics.find(axis);
      return it != r.demographics.end() && it->second == subgroup.values[i];
    });
    if (!seen) throw Error(Errc::UnknownAxisValue, axis + "=" + subgroup.values[i]);
  }

  SubgroupOpinion op;
  op.question_id = std::string(question_id);
  op.subgroup = subgroup;
  int population = 0;
  for (const auto& r : table.respondents) {
    auto v = values_of(table, r, subgroup.stratum);
    if (!v || *v != subgroup.values) continue;
    ++population;
    auto it = r.answers.find(op.question_id);
    if (it == r.answers.end()) continue;
    ++op.histogram[it->second];
    ++op.n;
  }
  op.subgroup.population_n = population;
  if (auto m = summarize_histogram(op.histogram)) {
    op.modal_code = m->modal_code;
    op.mode_margin = m->margin;
  }
  op.valid = op.n >= min_n;
  return op;
}

std::vector<Subgroup> valid_subgroups(const SurveyTable& table, const Stratum& stratum, int min_n,
                                      ValidityScope scope, std::string_view question_id) {
  auto all = observed_subgroups(table, stratum);
  std::vector<Subgroup> out;
  if (scope == ValidityScope::WholeSubgroup) {
    for (auto& s : all)
      if (s.population_n >= min_n) out.push_back(std::move(s));
    return out;
  }
  active_question(table, question_id);
  std::map<std::vector<std::string>, int> answered;
  std::string qid(question_id);
  for (const auto& r : table.respondents) {
    if (!r.answers.count(qid)) continue;
    if (auto v = values_of(table, r, stratum)) ++answered[*v];
  }
  for (auto& s : all)
    if (answered[s.values] >= min_n) out.push_back(std::move(s));
  return out;
}

OpinionMatrix::OpinionMatrix(std::vector<Stratum> strata, std::map<std::string, std::vector<Subgroup>> subgroups,
                             std::vector<SubgroupOpinion> cells, int min_n)
    : strata_(std::move(strata)), cells_(std::move(cells)), min_n_(min_n) {
  for (auto& [k, v] : subgroups) subgroups_.emplace(k, std::move(v));
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    index_.emplace(c.question_id + '\n' + c.subgroup.key(), i);
    auto key = c.question_id + '\n' + c.subgroup.stratum.name;
    auto [it, inserted] = ranges_.emplace(key, std::make_pair(i, i + 1));
    if (!inserted) it->second.second = i + 1;
  }
}

const std::vector<Subgroup>& OpinionMatrix::subgroups(std::string_view stratum) const {
  auto it = subgroups_.find(stratum);
  if (it == subgroups_.end()) throw Error(Errc::UnknownStratum, std::string(stratum));
  return it->second;
}

const Stratum& OpinionMatrix::stratum(std::string_view name) const {
  for (const auto& s : strata_)
    if (s.name == name) return s;
  throw Error(Errc::UnknownStratum, std::string(name));
}

bool OpinionMatrix::has_stratum(std::string_view name) const {
  return std::any_of(strata_.begin(), strata_.end(), [&](const Stratum& s) { return s.name == name; });
}

const SubgroupOpinion* OpinionMatrix::find(std::string_view question_id, std::string_view subgroup_key) const {
  std::string key(question_id);
  key += '\n';
  key += subgroup_key;
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : &cells_[it->second];
}

std::vector<const SubgroupOpinion*> OpinionMatrix::slice(std::string_view question_id,
                                                         std::string_view stratum) const {
  std::string key(question_id);
  key += '\n';
  key += stratum;
  std::vector<const SubgroupOpinion*> out;
  auto it = ranges_.find(key);
  if (it == ranges_.end()) return out;
  for (std::size_t i = it->second.first; i < it->second.second; ++i) out.push_back(&cells_[i]);
  return out;
}

std::vector<std::string> OpinionMatrix::question_ids() const {
  std::vector<std::string> out;
  for (const auto& c : cells_)
    if (out.empty() || out.back() != c.question_id) out.push_back(c.question_id);
  return out;
}

std::string OpinionMatrix::to_csv() const {
  std::ostringstream ss;
  io::DelimitedWriter w(ss);
  w.row({"question_id", "stratum", "subgroup", "population_n", "n", "modal_code", "mode_margin", "valid"});
  for (const auto& c : cells_) {
    w.row({c.question_id, c.subgroup.stratum.name, c.subgroup.name(), std::to_string(c.subgroup.population_n),
           std::to_string(c.n), c.modal_code ? std::to_string(*c.modal_code) : "", io::fixed(c.mode_margin, 6),
           c.valid ? "1" : "0"});
  }
  return ss.str();
}

OpinionMatrix opinion_matrix(const SurveyTable& table, const std::vector<Stratum>& strata, int min_n) {
  auto questions = table.active_questions();

  std::vector<Stratum> ordered = strata;
  std::sort(ordered.begin(), ordered.end(), [](const Stratum& a, const Stratum& b) { return a.name < b.name; });

  struct Layout {
    std::vector<Subgroup> subgroups;
    std::vector<int> member_of;  // respondent -> subgroup index, -1 when excluded
  };
  std::vector<Layout> layouts;
  std::map<std::string, std::vector<Subgroup>> subgroup_map;
  for (const auto& s : ordered) {
    Layout layout;
    layout.subgroups = observed_subgroups(table, s);
    std::map<std::vector<std::string>, int> index;
    for (std::size_t i = 0; i < layout.subgroups.size(); ++i) index[layout.subgroups[i].values] = static_cast<int>(i);
    layout.member_of.reserve(table.respondents.size());
    for (const auto& r : table.respondents) {
      auto v = values_of(table, r, s);
      layout.member_of.push_back(v ? index.at(*v) : -1);
    }
    subgroup_map[s.name] = layout.subgroups;
    layouts.push_back(std::move(layout));
  }

  std::vector<SubgroupOpinion> cells;
  for (const QuestionSpec* q : questions) {
    for (const auto& layout : layouts) {
      std::vector<Histogram> hist(layout.subgroups.size());
      for (std::size_t r = 0; r < table.respondents.size(); ++r) {
        int g = layout.member_of[r];
        if (g < 0) continue;
        auto it = table.respondents[r].answers.find(q->question_id);
        if (it != table.respondents[r].answers.end()) ++hist[g][it->second];
      }
      for (std::size_t g = 0; g < layout.subgroups.size(); ++g) {
        SubgroupOpinion op;
        op.question_id = q->question_id;
        op.subgroup = layout.subgroups[g];
        op.histogram = std::move(hist[g]);
        for (const auto& [code, count] : op.histogram) op.n += count;
        if (auto m = summarize_histogram(op.histogram)) {
          op.modal_code = m->modal_code;
          op.mode_margin = m->margin;
        }
        op.valid = op.n >= min_n;
        cells.push_back(std::move(op));
      }
    }
  }
  return OpinionMatrix(ordered, std::move(subgroup_map), std::move(cells), min_n);
}

}  // namespace valuemap
