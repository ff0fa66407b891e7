#include "valuemap/survey.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"

namespace valuemap {

using nlohmann::json;

std::string QuestionSpec::label_or_code(Code c) const {
  auto it = choice_labels.find(c);
  return it != choice_labels.end() ? it->second : std::to_string(c);
}

std::string FilterLog::to_json() const {
  json j;
  j["sources"] = sources;
  j["unparsable_cells"] = unparsable_cells;
  j["excluded_questions"] = excluded_questions;
  j["unknown_exclusions"] = unknown_exclusions;
  j["below_range_removed"] = below_range_removed;
  j["above_range_removed"] = above_range_removed;
  j["excluded_answers_removed"] = excluded_answers_removed;
  return j.dump(2);
}

const QuestionSpec* SurveyTable::find_question(std::string_view id) const {
  for (const auto& q : questions)
    if (q.question_id == id) return &q;
  return nullptr;
}

std::vector<const QuestionSpec*> SurveyTable::active_questions() const {
  std::vector<const QuestionSpec*> out;
  for (const auto& q : questions)
    if (!q.excluded) out.push_back(&q);
  std::sort(out.begin(), out.end(),
            [](const QuestionSpec* a, const QuestionSpec* b) { return io::natural_less(a->question_id, b->question_id); });
  return out;
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  std::string t = io::trim(s);
  if (t.empty()) return std::nullopt;
  std::string_view v = t;
  if (v.front() == '+') v.remove_prefix(1);
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    // tolerate "3.0" style exports
    double d = 0;
    auto [p2, e2] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (e2 != std::errc{} || p2 != v.data() + v.size() || d != static_cast<int>(d)) return std::nullopt;
    return static_cast<int>(d);
  }
  return out;
}

const json& require(const json& entry, const char* field, std::size_t index) {
  auto it = entry.find(field);
  if (it == entry.end() || it->is_null()) {
    std::string who = entry.contains("id") && entry["id"].is_string() ? entry["id"].get<std::string>()
                                                                       : "#" + std::to_string(index);
    throw Error(Errc::MissingField, std::string("field '") + field + "' missing in codebook entry " + who);
  }
  return *it;
}

int as_int(const json& v, const char* field, const std::string& id) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    if (auto i = parse_int(v.get<std::string>())) return *i;
  }
  throw Error(Errc::MissingField, std::string("field '") + field + "' of " + id + " is not an integer");
}

}  // namespace

std::vector<QuestionSpec> parse_codebook(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::IoFailure, std::string("codebook is not valid JSON: ") + e.what());
  }
  const json* entries = &doc;
  if (doc.is_object()) {
    if (!doc.contains("questions")) throw Error(Errc::MissingField, "codebook object has no 'questions' array");
    entries = &doc["questions"];
  }
  if (!entries->is_array()) throw Error(Errc::MissingField, "codebook must be an array of question entries");

  std::vector<QuestionSpec> out;
  std::unordered_set<std::string> seen;
  std::size_t index = 0;
  for (const auto& e : *entries) {
    QuestionSpec q;
    q.question_id = require(e, "id", index).get<std::string>();
    q.text = require(e, "text", index).get<std::string>();
    q.category = require(e, "category", index).get<std::string>();
    q.scale_min = as_int(require(e, "scale_min", index), "scale_min", q.question_id);
    q.scale_max = as_int(require(e, "scale_max", index), "scale_max", q.question_id);
    if (q.scale_min >= q.scale_max)
      throw Error(Errc::NonOrdinalScale, q.question_id + " has scale " + std::to_string(q.scale_min) + ".." +
                                             std::to_string(q.scale_max));
    const json labels = e.contains("labels") ? e["labels"] : json::object();
    if (!labels.is_object()) throw Error(Errc::MissingField, "labels of " + q.question_id + " must be an object");
    for (const auto& [k, v] : labels.items()) {
      auto code = parse_int(k);
      if (!code) throw Error(Errc::LabelOutOfRange, q.question_id + " label key '" + k + "' is not an integer");
      if (!q.in_range(*code))
        throw Error(Errc::LabelOutOfRange, q.question_id + " label " + k + " outside its scale");
      q.choice_labels[*code] = v.get<std::string>();
    }
    q.excluded = e.value("excluded", false);
    if (!seen.insert(q.question_id).second) throw Error(Errc::DuplicateQuestionId, q.question_id);
    out.push_back(std::move(q));
    ++index;
  }
  return out;
}

std::vector<QuestionSpec> load_codebook(const std::filesystem::path& path) {
  return parse_codebook(io::read_file(path));
}

std::string codebook_to_json(const std::vector<QuestionSpec>& questions) {
  json arr = json::array();
  for (const auto& q : questions) {
    json labels = json::object();
    for (const auto& [code, label] : q.choice_labels) labels[std::to_string(code)] = label;
    json e{{"id", q.question_id},         {"text", q.text},   {"category", q.category},
           {"scale_min", q.scale_min},    {"scale_max", q.scale_max}, {"labels", labels}};
    if (q.excluded) e["excluded"] = true;
    arr.push_back(std::move(e));
  }
  return json{{"questions", arr}}.dump(2);
}

std::string age_bucket(int age, std::string_view unknown_token) {
  if (age < 16) return std::string(unknown_token);
  if (age <= 24) return "16-24";
  if (age <= 34) return "25-34";
  if (age <= 44) return "35-44";
  if (age <= 54) return "45-54";
  if (age <= 64) return "55-64";
  return "65+";
}

SurveyTable parse_responses(std::istream& in, const std::vector<QuestionSpec>& codebook,
                            const ResponseOptions& options, std::string source) {
  auto rows = io::read_delimited(in, options.delimiter);
  if (rows.empty()) throw Error(Errc::MalformedRow, "row 0: missing header in " + source);

  const auto& header = rows.front();
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[io::trim(header[i])] = i;

  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = column.find(name);
    if (it == column.end()) throw Error(Errc::MalformedRow, "row 0: header lacks column '" + name + "'");
    return it->second;
  };

  std::size_t id_col = column_of(options.id_column);
  std::vector<std::pair<std::string, std::size_t>> axis_cols;
  std::optional<std::size_t> raw_age_col;
  for (const auto& axis : options.axes) {
    if (axis == "age_group" && options.raw_age_column) {
      raw_age_col = column_of(*options.raw_age_column);
      continue;
    }
    axis_cols.emplace_back(axis, column_of(axis));
  }

  std::unordered_map<std::string, const QuestionSpec*> by_id;
  for (const auto& q : codebook) by_id[q.question_id] = &q;

  std::unordered_set<std::size_t> reserved{id_col};
  for (const auto& [axis, col] : axis_cols) reserved.insert(col);
  if (raw_age_col) reserved.insert(*raw_age_col);
  for (const auto& name : options.ignore_columns)
    if (auto it = column.find(name); it != column.end()) reserved.insert(it->second);

  std::vector<std::pair<std::string, std::size_t>> question_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (reserved.count(i)) continue;
    std::string name = io::trim(header[i]);
    if (!by_id.count(name)) throw Error(Errc::UnknownQuestionColumn, "'" + name + "' is not in the codebook");
    question_cols.emplace_back(name, i);
  }

  SurveyTable table;
  table.questions = codebook;
  table.axes = options.axes;
  table.unknown_token = options.unknown_token;
  table.provenance.sources.push_back(std::move(source));

  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error(Errc::MalformedRow, "row " + std::to_string(r) + ": expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(row.size()));
    RespondentRecord rec;
    rec.respondent_id = io::trim(row[id_col]);
    if (rec.respondent_id.empty() || !ids.insert(rec.respondent_id).second)
      throw Error(Errc::MalformedRow, "row " + std::to_string(r) + ": missing or duplicate respondent id");
    for (const auto& [axis, col] : axis_cols) {
      std::string v = io::trim(row[col]);
      rec.demographics[axis] = v.empty() ? options.unknown_token : v;
    }
    if (raw_age_col) {
      auto age = parse_int(row[*raw_age_col]);
      rec.demographics["age_group"] = age ? age_bucket(*age, options.unknown_token) : options.unknown_token;
    }
    for (const auto& [qid, col] : question_cols) {
      const std::string& cell = row[col];
      if (io::trim(cell).empty()) continue;
      if (auto code = parse_int(cell)) {
        rec.answers[qid] = *code;
      } else {
        ++table.provenance.unparsable_cells;
      }
    }
    table.respondents.push_back(std::move(rec));
  }
  return table;
}

SurveyTable load_responses(const std::filesystem::path& path, const std::vector<QuestionSpec>& codebook,
                           const ResponseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return parse_responses(in, codebook, options, path.string());
}

SurveyTable apply_filters(const SurveyTable& table, const std::vector<std::string>& exclusion_ids,
                          bool drop_negative) {
  SurveyTable out = table;
  std::unordered_set<std::string> excluded;
  for (const auto& id : exclusion_ids) {
    if (!out.find_question(id)) {
      out.provenance.unknown_exclusions.insert(id);
      continue;
    }
    excluded.insert(id);
  }
  std::unordered_map<std::string, const QuestionSpec*> by_id;
  for (auto& q : out.questions) {
    if (excluded.count(q.question_id)) q.excluded = true;
    if (q.excluded) out.provenance.excluded_questions.insert(q.question_id);
    by_id[q.question_id] = &q;
  }

  for (auto& rec : out.respondents) {
    for (auto it = rec.answers.begin(); it != rec.answers.end();) {
      auto qit = by_id.find(it->first);
      const QuestionSpec* q = qit == by_id.end() ? nullptr : qit->second;
      bool remove = false;
      if (!q || q->excluded) {
        remove = true;
        ++out.provenance.excluded_answers_removed;
      } else if (it->second < q->scale_min && drop_negative) {
        remove = true;
        ++out.provenance.below_range_removed;
      } else if (it->second > q->scale_max) {
        remove = true;
        ++out.provenance.above_range_removed;
      }
      it = remove ? rec.answers.erase(it) : std::next(it);
    }
  }
  return out;
}

std::vector<std::string> expand_question_range(std::string_view spec) {
  std::string s = io::trim(spec);
  std::size_t sep = s.find("..");
  std::size_t sep_len = 2;
  if (sep == std::string::npos) {
    sep = s.find('-');
    sep_len = 1;
  }
  if (sep == std::string::npos) return {s};

  auto split_id = [](const std::string& id) -> std::optional<std::pair<std::string, int>> {
    std::size_t d = id.find_first_of("0123456789");
    if (d == std::string::npos) return std::nullopt;
    int n = 0;
    auto [p, ec] = std::from_chars(id.data() + d, id.data() + id.size(), n);
    if (ec != std::errc{} || p != id.data() + id.size()) return std::nullopt;
    return std::make_pair(id.substr(0, d), n);
  };
  auto lo = split_id(io::trim(s.substr(0, sep)));
  auto hi_text = io::trim(s.substr(sep + sep_len));
  auto hi = split_id(hi_text);
  if (!hi && lo) {
    // "Q7-26"
    int n = 0;
    auto [p, ec] = std::from_chars(hi_text.data(), hi_text.data() + hi_text.size(), n);
    if (ec == std::errc{} && p == hi_text.data() + hi_text.size()) hi = std::make_pair(lo->first, n);
  }
  if (!lo || !hi || lo->first != hi->first || lo->second > hi->second)
    throw Error(Errc::ConfigError, "bad question range '" + s + "'");
  std::vector<std::string> out;
  for (int i = lo->second; i <= hi->second; ++i) out.push_back(lo->first + std::to_string(i));
  return out;
}

}  // namespace valuemap
