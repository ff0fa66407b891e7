#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "valuemap/dataset.hpp"
#include "valuemap/io.hpp"
#include "valuemap/synthetic.hpp"

using namespace valuemap;
using fixture::code_of;

namespace {

Subgroup subgroup(std::vector<std::string> axes, std::vector<std::string> values) {
  return Subgroup{Stratum::of(std::move(axes)), std::move(values), 100};
}

QuestionSpec q171() {
  QuestionSpec q = fixture::question("Q171", 1, 7, "Religious Values");
  q.text = "Apart from weddings and funerals, about how often do you attend religious services these days?";
  q.choice_labels = {{1, "More than once a week"}, {2, "Once a week"}, {3, "Once a month"},
                     {4, "Only on special holy days"}, {5, "Once a year"}, {6, "Less often"},
                     {7, "Never, practically never"}};
  return q;
}

// Every question answered by 40 women and 40 men.
SurveyTable sex_fixture(int n_questions) {
  std::vector<QuestionSpec> qs;
  std::map<std::string, int> answers;
  for (int i = 1; i <= n_questions; ++i) {
    qs.push_back(fixture::question("Q" + std::to_string(i), 1, 4));
    answers["Q" + std::to_string(i)] = 1 + i % 4;
  }
  fixture::Builder b(qs);
  b.add(40, "Female", "25-34", "Chinese", "Buddhist", answers);
  b.add(40, "Male", "35-44", "Malay", "Muslim", answers);
  return b.table;
}

}  // namespace

TEST_CASE("persona rendering") {
  auto style = PersonaStyle::defaults();
  CHECK(render_persona(subgroup({"sex", "religion"}, {"Female", "Buddhist"}), style) == "female, Buddhist");
  CHECK(render_persona(subgroup({"sex"}, {"Male"}), style) == "male");
  CHECK(render_persona(subgroup({"age_group", "ethnicity"}, {"25-34 years", "Chinese"}), style) ==
        "25-34 years old, Chinese");
  CHECK(render_persona(subgroup({"age_group"}, {"65+"}), style) == "65 years old or above");
  CHECK(code_of([&] { render_persona(subgroup({"ethnicity"}, {"Martian"}), style); }) == Errc::MissingDisplayForm);

  PersonaStyle extra;
  extra.display["ethnicity"]["Martian"] = "from Mars";
  style.merge(extra);
  CHECK(render_persona(subgroup({"ethnicity"}, {"Martian"}), style) == "from Mars");
  CHECK(render_persona(subgroup({"ethnicity"}, {"Malay"}), style) == "Malay");
}

TEST_CASE("numerical and open prompts") {
  auto style = PersonaStyle::defaults();
  auto g = subgroup({"sex", "religion"}, {"Female", "Buddhist"});
  auto num = render_prompts(q171(), g, PromptMode::Numerical, style);
  CHECK(num.system_prompt.find("typical Singaporean who is a female, Buddhist.") != std::string::npos);
  CHECK(num.user_prompt.find("Answer: {number}") != std::string::npos);
  CHECK(num.user_prompt.find("Respond with only the number") != std::string::npos);
  CHECK(num.user_prompt.find("1: More than once a week\n2: Once a week") != std::string::npos);

  auto open = render_prompts(q171(), g, PromptMode::OpenEnded, style);
  CHECK(open.system_prompt == num.system_prompt);
  CHECK(open.user_prompt.find("open-ended conversational style") != std::string::npos);
  CHECK(open.user_prompt.find("Answer: {number}") == std::string::npos);

  auto excluded = q171();
  excluded.excluded = true;
  CHECK(code_of([&] { render_prompts(excluded, g, PromptMode::Numerical, style); }) == Errc::ExcludedQuestion);
}

TEST_CASE("choice rendering") {
  auto q = fixture::question("Q1", 1, 10);
  CHECK(render_choices(q) == "1\n2\n3\n4\n5\n6\n7\n8\n9\n10");
  q.choice_labels = {{10, "Completely"}, {1, "Not at all"}};
  CHECK(render_choices(q) == "1: Not at all\n10: Completely");
}

TEST_CASE("rendered prompts match the golden file") {
  auto style = PersonaStyle::defaults();
  std::string text;
  auto q = q171();
  for (auto g : {subgroup({"sex", "religion"}, {"Female", "Buddhist"}), subgroup({"age_group"}, {"65+"})})
    for (auto mode : {PromptMode::Numerical, PromptMode::OpenEnded}) {
      auto p = render_prompts(q, g, mode, style);
      text += "=== system\n" + p.system_prompt + "\n=== user\n" + p.user_prompt + "\n";
    }
  auto scale10 = fixture::question("Q241", 1, 10, "Political Culture & Regimes");
  scale10.text = "How important is it for you to live in a country that is governed democratically?";
  scale10.choice_labels = {{1, "Not at all important"}, {10, "Absolutely important"}};
  auto p = render_prompts(scale10, subgroup({"sex", "age_group"}, {"Male", "16-24"}), PromptMode::Numerical, style);
  text += "=== system\n" + p.system_prompt + "\n=== user\n" + p.user_prompt + "\n";

  const auto golden = std::filesystem::path(VALUEMAP_TEST_DATA) / "golden_prompts.txt";
  if (std::getenv("VALUEMAP_UPDATE_GOLDEN")) io::write_file(golden, text);
  CHECK(io::read_file(golden) == text);
}

TEST_CASE("split names") {
  CHECK(split_name(Split::Train) == "train");
  CHECK(parse_split("eval_ood") == Split::EvalOod);
  CHECK(parse_split("ood") == Split::EvalOod);
  CHECK(code_of([] { parse_split("dev"); }) == Errc::ConfigError);
}

TEST_CASE("standard plan keeps splits apart") {
  auto plan = SplitPlan::standard();
  CHECK(plan.train_strata.size() == 7);
  CHECK(plan.ood_strata.size() == 3);
  plan.validate();
  for (const auto& t : plan.train_strata)
    for (const auto& o : plan.ood_strata) CHECK(t != o);
  plan.ood_strata.push_back("sex");
  CHECK(code_of([&] { plan.validate(); }) == Errc::OverlappingStrata);
}

TEST_CASE("sex stratum over 214 questions gives 428 records") {
  auto table = sex_fixture(214);
  auto matrix = opinion_matrix(table, {Stratum::of({"sex"})}, 30);
  SplitPlan plan{{"sex"}, {}};
  auto m = build_splits(matrix, table, plan, PersonaStyle::defaults());
  CHECK(m.total(Split::Train) == 428);
  CHECK(m.subgroup_total(Split::Train) == 2);
  REQUIRE(m.counts.size() == 1);
  CHECK(m.counts[0] == StratumCount{"sex", Split::Train, 2, 428});
  const auto& r = m.records.front();
  CHECK(r.id == "Q1_sex_Female");
  CHECK(r.target_completion() == "Answer: " + std::to_string(r.gold_modal_code));

  SplitPlan unknown{{"religion"}, {}};
  CHECK(code_of([&] { build_splits(matrix, table, unknown, PersonaStyle::defaults()); }) == Errc::UnknownStratum);
}

TEST_CASE("synthetic survey reproduces the split arithmetic") {
  auto table = synthetic_table();
  CHECK(table.active_questions().size() == 214);
  auto plan = SplitPlan::standard();
  std::vector<Stratum> strata;
  for (auto* list : {&plan.train_strata, &plan.ood_strata})
    for (const auto& name : *list)
      for (const auto& s : enumerate_strata(kDefaultAxes))
        if (s.name == name) strata.push_back(s);
  auto matrix = opinion_matrix(table, strata, 30);
  auto m = build_splits(matrix, table, plan, PersonaStyle::defaults());
  CHECK(m.subgroup_total(Split::Train) == 50);
  CHECK(m.total(Split::Train) == 10700);
  for (const auto& c : m.counts) {
    if (c.split == Split::Train) CHECK(c.samples == c.subgroups * 214);
    if (c.stratum == "sex") CHECK(c.samples == 428);
  }
  std::map<std::string, int> per_subgroup;
  for (const auto* r : m.of_split(Split::EvalOod)) {
    ++per_subgroup[r->subgroup.key()];
    CHECK(r->answered_n >= 30);
  }
  for (const auto& [k, n] : per_subgroup) CHECK(n <= 214);
  std::set<std::string> train_strata, ood_strata;
  for (const auto* r : m.of_split(Split::Train)) train_strata.insert(r->subgroup.stratum.name);
  for (const auto* r : m.of_split(Split::EvalOod)) ood_strata.insert(r->subgroup.stratum.name);
  for (const auto& s : train_strata) CHECK(ood_strata.count(s) == 0);
  CHECK(uncovered_ood_components(m).empty());
}

TEST_CASE("export and import round trip") {
  auto table = sex_fixture(5);
  auto matrix = opinion_matrix(table, enumerate_strata({"sex", "age_group"}), 30);
  SplitPlan plan{{"sex", "age_group"}, {"sex_x_age"}};
  auto m = build_splits(matrix, table, plan, PersonaStyle::defaults());
  auto dir = oracle::temp_dir("dataset");
  export_manifest(m, dir);
  auto back = import_manifest(dir);
  CHECK(back == m);

  export_training_records(m, dir / "train_only.jsonl");
  std::ifstream in(dir / "train_only.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["split"] == "train");
    CHECK(j["assistant"].get<std::string>().rfind("Answer: ", 0) == 0);
    CHECK(record_from_jsonl(line) == *m.of_split(Split::Train)[lines]);
    ++lines;
  }
  CHECK(lines == m.total(Split::Train));

  DatasetManifest empty;
  CHECK(code_of([&] { export_training_records(empty, dir / "none.jsonl"); }) == Errc::EmptyManifest);
  std::filesystem::remove_all(dir);
}

TEST_CASE("gold completion text") {
  SampleRecord r;
  r.gold_modal_code = 7;
  CHECK(r.target_completion() == "Answer: 7");
}
