#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"
#include "valuemap/survey.hpp"

using namespace valuemap;
using fixture::code_of;

namespace {

const char* kTwoQuestions = R"([
  {"id": "Q1", "text": "Trust?", "category": "Social Capital, Trust & Organizational Membership",
   "scale_min": 1, "scale_max": 4, "labels": {"1": "A lot", "4": "None"}},
  {"id": "Q2", "text": "Happy?", "category": "Social Values, Attitudes & Stereotypes",
   "scale_min": 1, "scale_max": 5}
])";

SurveyTable load_text(const std::string& csv) {
  std::istringstream in(csv);
  return parse_responses(in, parse_codebook(kTwoQuestions));
}


}  // namespace

TEST_CASE("delimited reader handles quotes and newlines") {
  std::istringstream in("a,b\n\"x,1\",\"say \"\"hi\"\"\"\r\n\n\"multi\nline\",z\n");
  auto rows = io::read_delimited(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "x,1");
  CHECK(rows[1][1] == "say \"hi\"");
  CHECK(rows[2][0] == "multi\nline");
  std::ostringstream out;
  io::DelimitedWriter(out).row(rows[1]);
  std::istringstream back(out.str());
  CHECK(io::read_delimited(back)[0] == rows[1]);
}

TEST_CASE("natural ordering and number rendering") {
  CHECK(io::natural_less("Q2", "Q10"));
  CHECK_FALSE(io::natural_less("Q10", "Q2"));
  CHECK(io::fixed(0.12345, 3) == "0.123");
  CHECK(io::fixed(std::nan(""), 3) == "NA");
  CHECK(std::stod(io::exact(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::hex64(255).size() == 16);
}

TEST_CASE("codebook entries") {
  auto q = parse_codebook(R"([{"id": "Q241", "text": "Democracy", "category": "Political Culture & Regimes",
                               "scale_min": 1, "scale_max": 10}])");
  REQUIRE(q.size() == 1);
  CHECK(q[0].n_choices() == 10);
  CHECK(q[0].label_or_code(3) == "3");

  CHECK(code_of([] { parse_codebook(R"([{"id":"Q1","text":"","category":"c","scale_min":1,"scale_max":1}])"); }) ==
        Errc::NonOrdinalScale);
  CHECK(code_of([] {
          parse_codebook(R"([{"id":"Q1","text":"","category":"c","scale_min":1,"scale_max":2},
                             {"id":"Q1","text":"","category":"c","scale_min":1,"scale_max":3}])");
        }) == Errc::DuplicateQuestionId);
  CHECK(code_of([] { parse_codebook(R"([{"id":"Q1","text":"","scale_min":1,"scale_max":3}])"); }) ==
        Errc::MissingField);
  CHECK(code_of([] {
          parse_codebook(R"([{"id":"Q1","text":"","category":"c","scale_min":1,"scale_max":3,"labels":{"7":"x"}}])");
        }) == Errc::LabelOutOfRange);

  auto round = parse_codebook(codebook_to_json(parse_codebook(kTwoQuestions)));
  CHECK(round == parse_codebook(kTwoQuestions));
}

TEST_CASE("responses load raw codes") {
  auto t = load_text(
      "respondent_id,sex,age_group,ethnicity,religion,Q1,Q2\n"
      "r1,Female,25-34,Chinese,Buddhist,1,5\n"
      "r2,Male,35-44,Malay,Muslim,-2,3\n"
      "r3,Female,65+,Indian,Hindu,4,\n");
  CHECK(t.respondents.size() == 3);
  CHECK(t.respondents[1].answers.at("Q1") == -2);
  CHECK(t.respondents[2].answers.count("Q2") == 0);
  CHECK(t.respondents[0].demographics.at("religion") == "Buddhist");
}

TEST_CASE("response schema violations") {
  CHECK(code_of([] {
          load_text("respondent_id,sex,age_group,religion,Q1\nr1,Female,25-34,Buddhist,1\n");
        }) == Errc::MalformedRow);
  CHECK(code_of([] {
          load_text("respondent_id,sex,age_group,ethnicity,religion,Q1\nr1,Female,25-34,Chinese\n");
        }) == Errc::MalformedRow);
  CHECK(code_of([] {
          load_text("respondent_id,sex,age_group,ethnicity,religion,Q99\nr1,Female,25-34,Chinese,Buddhist,1\n");
        }) == Errc::UnknownQuestionColumn);
}

TEST_CASE("raw age column is bucketed") {
  std::istringstream in("respondent_id,sex,age,ethnicity,religion,Q1\nr1,Female,19,Chinese,Buddhist,1\n"
                        "r2,Male,70,Malay,Muslim,2\nr3,Male,12,Malay,Muslim,2\n");
  ResponseOptions opt;
  opt.raw_age_column = "age";
  auto t = parse_responses(in, parse_codebook(kTwoQuestions), opt);
  CHECK(t.respondents[0].demographics.at("age_group") == "16-24");
  CHECK(t.respondents[1].demographics.at("age_group") == "65+");
  CHECK(t.respondents[2].demographics.at("age_group") == "unknown");
}

TEST_CASE("age buckets") {
  CHECK(age_bucket(15) == "unknown");
  CHECK(age_bucket(16) == "16-24");
  CHECK(age_bucket(24) == "16-24");
  CHECK(age_bucket(25) == "25-34");
  CHECK(age_bucket(54) == "45-54");
  CHECK(age_bucket(64) == "55-64");
  CHECK(age_bucket(65) == "65+");
}

TEST_CASE("filters drop negative codes and excluded questions") {
  auto t = load_text(
      "respondent_id,sex,age_group,ethnicity,religion,Q1,Q2\n"
      "r1,Female,25-34,Chinese,Buddhist,-1,3\n"
      "r2,Male,35-44,Malay,Muslim,9,2\n");
  auto f = apply_filters(t, {}, true);
  CHECK(f.respondents[0].answers == std::map<std::string, Code>{{"Q2", 3}});
  CHECK(f.respondents[1].answers == std::map<std::string, Code>{{"Q2", 2}});
  CHECK(f.provenance.below_range_removed == 1);
  CHECK(f.provenance.above_range_removed == 1);
  CHECK(f.respondents.size() == 2);

  auto again = apply_filters(f, {}, true);
  CHECK(again == f);

  auto ex = apply_filters(t, {"Q2", "Q55"}, true);
  CHECK(ex.active_questions().size() == 1);
  CHECK(ex.respondents[0].answers.empty());
  CHECK(ex.provenance.unknown_exclusions == std::set<std::string>{"Q55"});

  auto keep_negative = apply_filters(t, {}, false);
  CHECK(keep_negative.respondents[0].answers.at("Q1") == -1);
}

TEST_CASE("identity filter") {
  auto t = load_text(
      "respondent_id,sex,age_group,ethnicity,religion,Q1,Q2\n"
      "r1,Female,25-34,Chinese,Buddhist,2,3\n");
  auto f = apply_filters(t, {}, true);
  CHECK(f.respondents == t.respondents);
  CHECK(f.active_questions().size() == 2);
}

TEST_CASE("question ranges") {
  auto ids = expand_question_range("Q7-Q26");
  CHECK(ids.size() == 20);
  CHECK(ids.front() == "Q7");
  CHECK(ids.back() == "Q26");
  CHECK(expand_question_range("Q3..Q5") == std::vector<std::string>{"Q3", "Q4", "Q5"});
  CHECK(expand_question_range("Q9") == std::vector<std::string>{"Q9"});
}

TEST_CASE("excluding Q7-Q26 from 234 questions leaves 214") {
  std::string cb = "[";
  for (int i = 1; i <= 234; ++i) {
    if (i > 1) cb += ",";
    cb += R"({"id":"Q)" + std::to_string(i) + R"(","text":"t","category":"c","scale_min":1,"scale_max":4})";
  }
  cb += "]";
  SurveyTable t;
  t.questions = parse_codebook(cb);
  auto f = apply_filters(t, expand_question_range("Q7-Q26"), true);
  CHECK(f.active_questions().size() == 214);
}

TEST_CASE("filter output stays in range") {
  std::mt19937 rng(5);
  std::string csv = "respondent_id,sex,age_group,ethnicity,religion,Q1,Q2\n";
  for (int i = 0; i < 200; ++i) {
    csv += "r" + std::to_string(i) + ",Female,25-34,Chinese,Buddhist," + std::to_string(int(rng() % 13) - 4) + "," +
           std::to_string(int(rng() % 13) - 4) + "\n";
  }
  auto f = apply_filters(load_text(csv), {}, true);
  for (const auto& r : f.respondents)
    for (const auto& [q, c] : r.answers) CHECK(f.find_question(q)->in_range(c));
  CHECK(f.respondents.size() == 200);
}
