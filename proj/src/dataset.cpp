#include "valuemap/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"

namespace valuemap {

using nlohmann::json;

PersonaStyle PersonaStyle::defaults() {
  PersonaStyle s;
  s.display["sex"] = {{"Female", "female"}, {"Male", "male"}};
  auto& age = s.display["age_group"];
  for (const char* band : {"16-24", "25-34", "35-44", "45-54", "55-64"}) {
    age[band] = std::string(band) + " years old";
    age[std::string(band) + " years"] = std::string(band) + " years old";
  }
  age["65+"] = "65 years old or above";
  age["65 and over"] = "65 years old or above";
  s.display["ethnicity"] = {{"Chinese", "Chinese"}, {"Malay", "Malay"},       {"Indian", "Indian"},
                            {"South Asian", "South Asian"}, {"Eurasian", "Eurasian"},
                            {"Caucasian", "Caucasian"},     {"Others", "of another ethnicity"}};
  s.display["religion"] = {{"Buddhist", "Buddhist"},
                           {"Muslim", "Muslim"},
                           {"Hindu", "Hindu"},
                           {"Protestant", "Protestant"},
                           {"Roman Catholic", "Roman Catholic"},
                           {"No Religion", "non-religious"},
                           {"No Denomination", "non-religious"},
                           {"Other", "of another religion"},
                           {"Jew", "Jewish"}};
  return s;
}

void PersonaStyle::merge(const PersonaStyle& overrides) {
  if (!overrides.nationality.empty()) nationality = overrides.nationality;
  for (const auto& [axis, values] : overrides.display)
    for (const auto& [value, text] : values) display[axis][value] = text;
}

std::string render_persona(const Subgroup& subgroup, const PersonaStyle& style) {
  std::string out;
  for (std::size_t i = 0; i < subgroup.values.size(); ++i) {
    const auto& axis = subgroup.stratum.axes.at(i);
    const auto& value = subgroup.values[i];
    auto a = style.display.find(axis);
    if (a == style.display.end() || !a->second.count(value))
      throw Error(Errc::MissingDisplayForm, axis + "=" + value);
    if (i) out += ", ";
    out += a->second.at(value);
  }
  return out;
}

std::string render_choices(const QuestionSpec& question) {
  std::string out;
  auto line = [&out](const std::string& s) {
    if (!out.empty()) out += '\n';
    out += s;
  };
  if (question.choice_labels.empty()) {
    for (Code c = question.scale_min; c <= question.scale_max; ++c) line(std::to_string(c));
    return out;
  }
  // sparse labels list only the anchors; full labels list every code
  for (const auto& [code, label] : question.choice_labels) line(std::to_string(code) + ": " + label);
  return out;
}

std::string system_prompt(const std::string& persona, const PersonaStyle& style) {
  return "You are a helpful assistant. Your task is to respond from the perspective of a typical " +
         style.nationality + " who is a " + persona +
         ". Fully embody this persona in your response, considering their likely values, priorities, and way of "
         "speaking. Answer the user's question directly.";
}

PromptSet render_prompts(const QuestionSpec& question, const Subgroup& subgroup, PromptMode mode,
                         const PersonaStyle& style) {
  if (question.excluded) throw Error(Errc::ExcludedQuestion, question.question_id);
  PromptSet p;
  p.mode = mode;
  p.system_prompt = system_prompt(render_persona(subgroup, style), style);
  const std::string choices = render_choices(question);
  if (mode == PromptMode::Numerical) {
    p.user_prompt = question.text + "\n\nPlease choose one of the following options:\n" + choices +
                    "\n\nRespond with only the number of your choice in the format: \"Answer: {number}\"";
  } else {
    p.user_prompt = question.text +
                    "\n\nFor context, here are the response options that were provided in the original survey:\n" +
                    choices +
                    "\n\nBased on your persona, consider the options above and explain your reasoning, what you "
                    "think about this topic, and which option you would lean towards. Provide your answer in a "
                    "natural, open-ended conversational style.";
  }
  return p;
}

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "eval_ood"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "eval_ood" || name == "ood") return Split::EvalOod;
  throw Error(Errc::ConfigError, "unknown split '" + std::string(name) + "'");
}

SplitPlan SplitPlan::standard() {
  SplitPlan p;
  p.train_strata = {"sex", "age_group", "ethnicity", "religion", "sex_x_age", "sex_x_ethnicity", "sex_x_religion"};
  p.ood_strata = {"age_x_ethnicity", "age_x_religion", "ethnicity_x_religion"};
  return p;
}

void SplitPlan::validate() const {
  std::set<std::string> train(train_strata.begin(), train_strata.end());
  for (const auto& s : ood_strata)
    if (train.count(s)) throw Error(Errc::OverlappingStrata, s + " is listed for both train and eval_ood");
}

std::vector<const SampleRecord*> DatasetManifest::of_split(Split s) const {
  std::vector<const SampleRecord*> out;
  for (const auto& r : records)
    if (r.split == s) out.push_back(&r);
  return out;
}

int DatasetManifest::total(Split s) const {
  int n = 0;
  for (const auto& c : counts)
    if (c.split == s) n += c.samples;
  return n;
}

int DatasetManifest::subgroup_total(Split s) const {
  int n = 0;
  for (const auto& c : counts)
    if (c.split == s) n += c.subgroups;
  return n;
}

std::vector<StratumCount> count_records(const std::vector<SampleRecord>& records) {
  std::map<std::pair<Split, std::string>, std::pair<std::set<std::string>, int>> acc;
  for (const auto& r : records) {
    auto& a = acc[{r.split, r.subgroup.stratum.name}];
    a.first.insert(r.subgroup.name());
    ++a.second;
  }
  std::vector<StratumCount> out;
  for (const auto& [key, a] : acc)
    out.push_back({key.second, key.first, static_cast<int>(a.first.size()), a.second});
  std::sort(out.begin(), out.end(), [](const StratumCount& x, const StratumCount& y) {
    if (x.split != y.split) return x.split < y.split;
    if (x.samples != y.samples) return x.samples > y.samples;
    return x.stratum < y.stratum;
  });
  return out;
}

namespace {

bool record_less(const SampleRecord& a, const SampleRecord& b) {
  if (a.split != b.split) return a.split < b.split;
  if (a.subgroup.stratum.name != b.subgroup.stratum.name) return a.subgroup.stratum.name < b.subgroup.stratum.name;
  if (a.subgroup.values != b.subgroup.values) return a.subgroup.values < b.subgroup.values;
  return io::natural_less(a.question_id, b.question_id);
}

}  // namespace

DatasetManifest build_splits(const OpinionMatrix& matrix, const SurveyTable& table, const SplitPlan& plan,
                             const PersonaStyle& style) {
  plan.validate();
  for (const auto* list : {&plan.train_strata, &plan.ood_strata})
    for (const auto& s : *list)
      if (!matrix.has_stratum(s)) throw Error(Errc::UnknownStratum, s);

  DatasetManifest manifest;
  manifest.min_n = matrix.min_n();
  for (const auto& id : table.provenance.excluded_questions) manifest.exclusions.push_back(id);

  const int min_n = matrix.min_n();
  auto emit = [&](const std::string& stratum, Split split, ValidityScope scope) {
    for (const auto& qid : matrix.question_ids()) {
      const QuestionSpec* q = table.find_question(qid);
      if (!q || q->excluded) continue;
      for (const auto* cell : matrix.slice(qid, stratum)) {
        if (!cell->modal_code || cell->subgroup.population_n < min_n) continue;
        if (scope == ValidityScope::PerQuestion && cell->n < min_n) continue;
        SampleRecord r;
        r.question_id = qid;
        r.subgroup = cell->subgroup;
        r.id = qid + "_" + stratum + "_" + cell->subgroup.name();
        r.persona_text = render_persona(cell->subgroup, style);
        r.split = split;
        r.prompts = render_prompts(*q, cell->subgroup, PromptMode::Numerical, style);
        r.open_user_prompt = render_prompts(*q, cell->subgroup, PromptMode::OpenEnded, style).user_prompt;
        r.gold_modal_code = *cell->modal_code;
        r.gold_stance_label = q->label_or_code(r.gold_modal_code);
        r.scale_min = q->scale_min;
        r.scale_max = q->scale_max;
        r.answered_n = cell->n;
        manifest.records.push_back(std::move(r));
      }
    }
  };
  for (const auto& s : plan.train_strata) emit(s, Split::Train, plan.train_scope);
  for (const auto& s : plan.ood_strata) emit(s, Split::EvalOod, plan.ood_scope);

  std::sort(manifest.records.begin(), manifest.records.end(), record_less);
  manifest.counts = count_records(manifest.records);
  return manifest;
}

std::vector<std::pair<std::string, std::string>> uncovered_ood_components(const DatasetManifest& manifest) {
  std::set<std::pair<std::string, std::string>> train, missing;
  for (const auto& r : manifest.records) {
    if (r.split != Split::Train) continue;
    for (std::size_t i = 0; i < r.subgroup.values.size(); ++i)
      train.emplace(r.subgroup.stratum.axes[i], r.subgroup.values[i]);
  }
  for (const auto& r : manifest.records) {
    if (r.split != Split::EvalOod) continue;
    for (std::size_t i = 0; i < r.subgroup.values.size(); ++i) {
      std::pair<std::string, std::string> c{r.subgroup.stratum.axes[i], r.subgroup.values[i]};
      if (!train.count(c)) missing.insert(c);
    }
  }
  return {missing.begin(), missing.end()};
}

std::string record_to_jsonl(const SampleRecord& r) {
  json j;
  j["system"] = r.prompts.system_prompt;
  j["user"] = r.prompts.user_prompt;
  j["assistant"] = r.target_completion();
  j["id"] = r.id;
  j["split"] = split_name(r.split);
  j["question_id"] = r.question_id;
  j["stratum"] = r.subgroup.stratum.name;
  j["axes"] = r.subgroup.stratum.axes;
  j["values"] = r.subgroup.values;
  j["population_n"] = r.subgroup.population_n;
  j["persona"] = r.persona_text;
  j["open_user"] = r.open_user_prompt;
  j["gold_modal_code"] = r.gold_modal_code;
  j["gold_stance_label"] = r.gold_stance_label;
  j["scale_min"] = r.scale_min;
  j["scale_max"] = r.scale_max;
  j["answered_n"] = r.answered_n;
  return j.dump();
}

SampleRecord record_from_jsonl(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
    SampleRecord r;
    r.prompts.system_prompt = j.at("system").get<std::string>();
    r.prompts.user_prompt = j.at("user").get<std::string>();
    r.prompts.mode = PromptMode::Numerical;
    r.id = j.at("id").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.question_id = j.at("question_id").get<std::string>();
    r.subgroup.stratum = Stratum::of(j.at("axes").get<std::vector<std::string>>());
    if (r.subgroup.stratum.name != j.at("stratum").get<std::string>())
      throw Error(Errc::MalformedRow, "stratum name does not match axes in record " + r.id);
    r.subgroup.values = j.at("values").get<std::vector<std::string>>();
    r.subgroup.population_n = j.at("population_n").get<int>();
    r.persona_text = j.at("persona").get<std::string>();
    r.open_user_prompt = j.at("open_user").get<std::string>();
    r.gold_modal_code = j.at("gold_modal_code").get<int>();
    r.gold_stance_label = j.at("gold_stance_label").get<std::string>();
    r.scale_min = j.at("scale_min").get<int>();
    r.scale_max = j.at("scale_max").get<int>();
    r.answered_n = j.at("answered_n").get<int>();
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRow, std::string("bad dataset record: ") + e.what());
  }
}

void export_training_records(const DatasetManifest& manifest, const std::filesystem::path& path,
                             std::optional<Split> split) {
  std::vector<const SampleRecord*> rows;
  for (const auto& r : manifest.records)
    if (!split || r.split == *split) rows.push_back(&r);
  if (rows.empty()) throw Error(Errc::EmptyManifest, "nothing to export to " + path.string());
  std::string out;
  for (const auto* r : rows) {
    out += record_to_jsonl(*r);
    out += '\n';
  }
  io::write_file(path, out);
}

std::vector<SampleRecord> import_training_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<SampleRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (io::trim(line).empty()) continue;
    out.push_back(record_from_jsonl(line));
  }
  return out;
}

void export_manifest(const DatasetManifest& manifest, const std::filesystem::path& dir) {
  if (manifest.records.empty()) throw Error(Errc::EmptyManifest, "manifest has no records");
  for (Split s : {Split::Train, Split::EvalOod}) {
    std::string out;
    for (const auto* r : manifest.of_split(s)) {
      out += record_to_jsonl(*r);
      out += '\n';
    }
    io::write_file(dir / (std::string(split_name(s)) + ".jsonl"), out);
  }
  json meta;
  meta["template_version"] = manifest.template_version;
  meta["min_n"] = manifest.min_n;
  meta["exclusions"] = manifest.exclusions;
  json counts = json::array();
  for (const auto& c : manifest.counts)
    counts.push_back({{"stratum", c.stratum}, {"split", split_name(c.split)}, {"subgroups", c.subgroups},
                      {"samples", c.samples}});
  meta["counts"] = counts;
  meta["totals"] = {{"train", {{"subgroups", manifest.subgroup_total(Split::Train)},
                               {"samples", manifest.total(Split::Train)}}},
                    {"eval_ood", {{"subgroups", manifest.subgroup_total(Split::EvalOod)},
                                  {"samples", manifest.total(Split::EvalOod)}}}};
  io::write_file(dir / "manifest.json", meta.dump(2) + "\n");
}

DatasetManifest import_manifest(const std::filesystem::path& dir) {
  DatasetManifest m;
  json meta;
  try {
    meta = json::parse(io::read_file(dir / "manifest.json"));
    m.template_version = meta.at("template_version").get<std::string>();
    m.min_n = meta.at("min_n").get<int>();
    m.exclusions = meta.at("exclusions").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRow, std::string("bad manifest.json: ") + e.what());
  }
  for (Split s : {Split::Train, Split::EvalOod}) {
    auto path = dir / (std::string(split_name(s)) + ".jsonl");
    if (!std::filesystem::exists(path)) continue;
    auto recs = import_training_records(path);
    m.records.insert(m.records.end(), recs.begin(), recs.end());
  }
  m.counts = count_records(m.records);
  return m;
}

}  // namespace valuemap
