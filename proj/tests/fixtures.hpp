#pragma once

#include <string>
#include <vector>

#include "valuemap/error.hpp"
#include "valuemap/survey.hpp"

namespace fixture {

inline valuemap::QuestionSpec question(const std::string& id, int lo, int hi, const std::string& category = "Cat") {
  valuemap::QuestionSpec q;
  q.question_id = id;
  q.text = "Question " + id;
  q.category = category;
  q.scale_min = lo;
  q.scale_max = hi;
  return q;
}

struct Builder {
  valuemap::SurveyTable table;
  int next = 0;

  explicit Builder(std::vector<valuemap::QuestionSpec> qs) { table.questions = std::move(qs); }

  // `count` respondents with the same demographics and answers.
  Builder& add(int count, const std::string& sex, const std::string& age, const std::string& eth,
               const std::string& rel, std::map<std::string, int> answers) {
    for (int i = 0; i < count; ++i) {
      valuemap::RespondentRecord r;
      r.respondent_id = "r" + std::to_string(next++);
      r.demographics = {{"sex", sex}, {"age_group", age}, {"ethnicity", eth}, {"religion", rel}};
      r.answers = answers;
      table.respondents.push_back(std::move(r));
    }
    return *this;
  }
};

template <class F>
valuemap::Errc code_of(F&& fn) {
  try {
    fn();
  } catch (const valuemap::Error& e) {
    return e.code();
  }
  throw std::runtime_error("expected a valuemap::Error");
}

}  // namespace fixture
