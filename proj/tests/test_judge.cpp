#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "valuemap/judge.hpp"

using namespace valuemap;
using fixture::code_of;

namespace {

JudgeCase sample_case() {
  JudgeCase c;
  c.case_id = "Q171_sex_x_religion_Female_Buddhist";
  c.group = "sex_x_religion";
  c.persona_text = "female, Buddhist";
  c.question = fixture::question("Q171", 1, 7);
  c.question.text = "How often do you attend religious services?";
  c.gold_stance_label = "Only on special holy days";
  c.response_evaluatee = "I go mostly on special holy days like Vesak.";
  c.response_baseline = "I attend every week without fail.";
  return c;
}

Verdict all(Winner w) { return {w, w, w, ""}; }

}  // namespace

TEST_CASE("judge prompt places responses by side") {
  auto c = sample_case();
  auto a = build_judge_prompt(c, true);
  auto b = build_judge_prompt(c, false);
  CHECK(a.find("<Response A>\n" + c.response_evaluatee + "\n</Response A>") != std::string::npos);
  CHECK(a.find("<Response B>\n" + c.response_baseline + "\n</Response B>") != std::string::npos);
  CHECK(b.find("<Response A>\n" + c.response_baseline + "\n</Response A>") != std::string::npos);
  CHECK(a.find("Singaporean who is a female, Buddhist") != std::string::npos);
  CHECK(a.find(c.gold_stance_label) != std::string::npos);
  CHECK(a.find("persona_winner") != std::string::npos);
  // swapping the two texts back gives the same prompt
  auto swapped = c;
  std::swap(swapped.response_evaluatee, swapped.response_baseline);
  CHECK(build_judge_prompt(swapped, true) == b);
  CHECK(build_judge_prompt(c, true) == a);

  c.response_baseline = "  \n";
  CHECK(code_of([&] { build_judge_prompt(c, true); }) == Errc::EmptyResponse);
}

TEST_CASE("verdict parsing") {
  auto v = parse_verdict(
      "Response A fits better.\n{\"persona_winner\": \"A\", \"value_winner\": \"Tie\", \"overall_winner\": \"A\"}");
  CHECK(v.persona == Winner::A);
  CHECK(v.value == Winner::Tie);
  CHECK(v.overall == Winner::A);

  auto last = parse_verdict(
      "{\"persona_winner\": \"A\", \"value_winner\": \"A\", \"overall_winner\": \"A\"} on second thought "
      "```json\n{\"judge_reasoning\": \"B {is} better\", \"persona_winner\": \"Response B\", "
      "\"value_winner\": \"b\", \"overall_winner\": \"tie\"}\n```");
  CHECK(last.persona == Winner::B);
  CHECK(last.value == Winner::B);
  CHECK(last.overall == Winner::Tie);
  CHECK(last.judge_reasoning == "B {is} better");

  CHECK(code_of([] { parse_verdict("I prefer A overall."); }) == Errc::MalformedVerdict);
  CHECK(code_of([] { parse_verdict("{\"persona_winner\": \"A\"}"); }) == Errc::MalformedVerdict);
  CHECK(code_of([] { parse_verdict("{\"persona_winner\": \"C\", \"value_winner\": \"A\", \"overall_winner\": \"A\"}"); }) ==
        Errc::MalformedVerdict);
  CHECK_FALSE(try_parse_verdict("nothing here"));
}

TEST_CASE("pass scores by side") {
  CHECK(pass_score(Winner::A, true) == 1.0);
  CHECK(pass_score(Winner::B, true) == 0.0);
  CHECK(pass_score(Winner::B, false) == 1.0);
  CHECK(pass_score(Winner::A, false) == 0.0);
  CHECK(pass_score(Winner::Tie, true) == 0.5);
  CHECK(pass_score(Winner::Tie, false) == 0.5);
}

TEST_CASE("pair score examples") {
  CHECK(score_pair(all(Winner::A), all(Winner::Tie), Criterion::Value) == 0.75);
  CHECK(score_pair(all(Winner::B), all(Winner::A), Criterion::Value) == 0.0);
  CHECK(score_pair(all(Winner::A), all(Winner::B), Criterion::Overall) == 1.0);
}

TEST_CASE("truth table over verdict pairs and sides") {
  const Winner ws[] = {Winner::A, Winner::B, Winner::Tie};
  auto flip = [](Winner w) { return w == Winner::A ? Winner::B : w == Winner::B ? Winner::A : Winner::Tie; };
  for (Winner w1 : ws)
    for (Winner w2 : ws) {
      // evaluatee's view: pass 1 has it in A, pass 2 in B
      const double wr = score_pair(all(w1), all(w2), Criterion::Overall);
      CHECK((wr == 0.0 || wr == 0.25 || wr == 0.5 || wr == 0.75 || wr == 1.0));
      // same letters, evaluatee and baseline exchanged
      const double wr_baseline = (pass_score(w1, false) + pass_score(w2, true)) / 2.0;
      CHECK(wr + wr_baseline == 1.0);
      // mirrored letters with the passes reordered describe the same judgements
      CHECK(score_pair(all(flip(w2)), all(flip(w1)), Criterion::Overall) == wr);
    }
}

TEST_CASE("single valid pass and exclusions") {
  auto s = score_pair(all(Winner::A), std::nullopt);
  CHECK(s.single_pass());
  CHECK(s.wr[0] == 1.0);
  CHECK_FALSE(s.s2[0]);
  auto t = score_pair(std::nullopt, all(Winner::A));
  CHECK(t.wr[1] == 0.0);
  CHECK(code_of([] { score_pair(std::nullopt, std::nullopt); }) == Errc::BothPassesInvalid);
}

TEST_CASE("win rate aggregation") {
  std::vector<CaseOutcome> cases;
  auto add = [&](std::string group, std::optional<Verdict> v1, std::optional<Verdict> v2) {
    CaseOutcome o{"c" + std::to_string(cases.size()), std::move(group), std::nullopt};
    if (v1 || v2) o.score = score_pair(v1, v2);
    cases.push_back(o);
  };
  add("g1", all(Winner::A), all(Winner::B));    // 1
  add("g1", all(Winner::A), all(Winner::Tie));  // 0.75
  add("g2", all(Winner::Tie), all(Winner::Tie));  // 0.5
  add("g2", all(Winner::B), all(Winner::A));    // 0
  auto s = aggregate_win_rates(cases);
  CHECK(s.wr[2] == 0.5625);
  CHECK(s.n_cases == 4);

  add("g2", std::nullopt, std::nullopt);
  add("g2", all(Winner::Tie), std::nullopt);
  auto by = aggregate_win_rates_by_group(cases);
  REQUIRE(by.size() == 3);
  CHECK(by[0].group == "g1");
  CHECK(by[0].wr[0] == 0.875);
  CHECK(by[1].n_excluded == 1);
  CHECK(by[1].n_single_pass == 1);
  CHECK(by[2].group == "overall");
  CHECK(by[2].n_cases == 5);

  auto self = aggregate_win_rates(cases, true);
  for (double w : self.wr) CHECK(w == 0.5);

  std::vector<CaseOutcome> ties;
  for (int i = 0; i < 3; ++i) ties.push_back({"t", "g", score_pair(all(Winner::Tie), all(Winner::Tie))});
  CHECK(aggregate_win_rates(ties).wr[1] == 0.5);
  std::vector<CaseOutcome> none;
  CHECK(std::isnan(aggregate_win_rates(none).wr[0]));
}
