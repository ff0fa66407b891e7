#include "valuemap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "valuemap/io.hpp"

namespace valuemap {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash3(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(mix(a) ^ b) ^ c); }

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

struct Category {
  const char* name;
  int total;
  int unanimous;
};

// Sized so every category and the total of 214 active questions match the
// reference study's question inventory.
constexpr std::array<Category, 12> kCategories{{
    {"Religious Values", 12, 0},
    {"Perceptions about Science/Tech", 6, 0},
    {"Political Culture & Regimes", 23, 2},
    {"Social Values, Norms, Stereotypes", 24, 2},
    {"Perceptions of Migration", 10, 2},
    {"Economic Values", 6, 0},
    {"Perceptions of Corruption", 8, 2},
    {"Perceptions of Security", 20, 10},
    {"Political Interest & Participation", 35, 4},
    {"Happiness and Wellbeing", 11, 6},
    {"Ethical Values", 23, 6},
    {"Social Capital, Trust, Membership", 36, 15},
}};

const std::array<std::string, 6> kAges{"16-24", "25-34", "35-44", "45-54", "55-64", "65+"};
const std::array<std::string, 5> kEthnicities{"Chinese", "Malay", "Indian", "Others", "Eurasian"};
const std::array<std::string, 8> kReligions{"Buddhist", "No Religion", "Protestant", "Muslim",
                                            "Other",    "Roman Catholic", "Hindu", "Jew"};

template <std::size_t N>
int index_of(const std::array<std::string, N>& values, const std::string& v) {
  for (std::size_t i = 0; i < N; ++i)
    if (values[i] == v) return static_cast<int>(i);
  return 0;
}

struct Cell {
  const char* ethnicity;
  const char* religion;
  std::array<int, 6> by_age;
};

constexpr std::array<Cell, 14> kCells{{
    {"Chinese", "Buddhist", {20, 35, 40, 45, 45, 50}},
    {"Chinese", "No Religion", {40, 45, 40, 40, 35, 35}},
    {"Chinese", "Protestant", {35, 35, 35, 35, 35, 35}},
    {"Chinese", "Other", {10, 10, 32, 10, 32, 32}},
    {"Chinese", "Roman Catholic", {12, 12, 12, 12, 12, 12}},
    {"Chinese", "Jew", {0, 0, 2, 0, 0, 0}},
    {"Malay", "Muslim", {18, 40, 40, 40, 40, 18}},
    {"Indian", "Hindu", {5, 12, 35, 12, 5, 5}},
    {"Indian", "Muslim", {14, 10, 5, 10, 5, 14}},
    {"Indian", "Roman Catholic", {0, 10, 0, 0, 0, 0}},
    {"Indian", "No Religion", {0, 0, 0, 10, 0, 0}},
    {"Others", "No Religion", {0, 7, 7, 7, 0, 0}},
    {"Eurasian", "Roman Catholic", {0, 0, 0, 5, 0, 0}},
    {"Eurasian", "Protestant", {0, 0, 5, 0, 0, 0}},
}};

struct Person {
  std::string sex, age, ethnicity, religion;
  // skips this many of the first active questions (drives partial coverage)
  int skipped = 0;
};

std::vector<Person> population() {
  std::vector<Person> out;
  for (const auto& cell : kCells) {
    for (std::size_t a = 0; a < kAges.size(); ++a) {
      int c = cell.by_age[a];
      int women = (c + 1) / 2;
      std::string eth = cell.ethnicity, rel = cell.religion;
      int skippers = 0, skip_n = 0;
      if (eth == "Indian" && rel == "Hindu" && a == 2) skippers = 6, skip_n = 8;
      if (eth == "Malay" && rel == "Muslim" && a == 0) skippers = 3, skip_n = 11;
      if (eth == "Chinese" && rel == "Other" && a == 4) skippers = 3, skip_n = 35;
      for (int i = 0; i < c; ++i)
        out.push_back({i < women ? "Female" : "Male", kAges[a], eth, rel, i < skippers ? skip_n : 0});
    }
  }
  return out;
}

QuestionSpec make_question(int number, const std::string& category, std::uint64_t seed) {
  QuestionSpec q;
  q.question_id = "Q" + std::to_string(number);
  q.category = category;
  static const int kScales[] = {4, 5, 10, 3, 2, 4, 10, 5};
  int k = kScales[hash3(seed, static_cast<std::uint64_t>(number), 1) % 8];
  q.scale_min = 1;
  q.scale_max = k;
  q.text = "Synthetic item " + q.question_id + " (" + category + "): on a scale of 1 to " + std::to_string(k) +
           ", where do you stand?";
  switch (k) {
    case 2: q.choice_labels = {{1, "Yes"}, {2, "No"}}; break;
    case 3: q.choice_labels = {{1, "Disagree"}, {2, "Neither"}, {3, "Agree"}}; break;
    case 4:
      q.choice_labels = {{1, "Very important"}, {2, "Rather important"}, {3, "Not very important"},
                         {4, "Not at all important"}};
      break;
    case 5:
      q.choice_labels = {{1, "Strongly agree"}, {2, "Agree"}, {3, "Neither agree nor disagree"}, {4, "Disagree"},
                         {5, "Strongly disagree"}};
      break;
    default: q.choice_labels = {{1, "Never justifiable"}, {10, "Always justifiable"}}; break;
  }
  return q;
}

}  // namespace

SyntheticSurvey make_synthetic_survey(std::uint64_t seed) {
  SyntheticSurvey s;
  s.exclusions = {"Q7-Q26"};

  // Active question numbers: Q1-Q6 and Q27-Q234.
  std::vector<int> active;
  for (int n = 1; n <= 234; ++n)
    if (n < 7 || n > 26) active.push_back(n);

  struct Plan {
    bool unanimous = false;
    int driver = 0;  // 0 religion, 1 age, 2 ethnicity, 3 sex
  };
  std::vector<QuestionSpec> questions;
  std::vector<Plan> plans;
  std::size_t next = 0;
  for (const auto& cat : kCategories) {
    for (int i = 0; i < cat.total; ++i, ++next) {
      questions.push_back(make_question(active[next], cat.name, seed));
      Plan p;
      p.unanimous = i < cat.unanimous;
      p.driver = static_cast<int>(hash3(seed, static_cast<std::uint64_t>(active[next]), 2) % 4);
      plans.push_back(p);
    }
  }
  for (int n = 7; n <= 26; ++n) {
    QuestionSpec q;
    q.question_id = "Q" + std::to_string(n);
    q.category = "Important child qualities";
    q.text = "Synthetic checklist item " + q.question_id + ": mentioned or not mentioned?";
    q.scale_min = 1;
    q.scale_max = 2;
    q.choice_labels = {{1, "Mentioned"}, {2, "Not mentioned"}};
    questions.push_back(q);
    plans.push_back({true, 0});
  }

  const auto people = population();
  std::ostringstream csv;
  io::DelimitedWriter w(csv);
  io::Row header{"respondent_id", "sex", "age_group", "ethnicity", "religion"};
  for (int n = 1; n <= 234; ++n) header.push_back("Q" + std::to_string(n));
  w.row(header);

  for (std::size_t r = 0; r < people.size(); ++r) {
    const Person& p = people[r];
    io::Row row{"R" + std::to_string(10001 + r), p.sex, p.age, p.ethnicity, p.religion};
    std::vector<std::string> cells(234);
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
      const QuestionSpec& q = questions[qi];
      const Plan& plan = plans[qi];
      int number = std::stoi(q.question_id.substr(1));
      const int k = q.n_choices();
      std::uint64_t h = hash3(seed, r, static_cast<std::uint64_t>(number));
      int code;
      if (plan.unanimous) {
        Code consensus = q.scale_min + static_cast<int>(hash3(seed, static_cast<std::uint64_t>(number), 3) % k);
        code = unit(h) < 0.9 ? consensus : q.scale_min + static_cast<int>(mix(h) % k);
      } else {
        // driver values map to consecutive codes, so the driving axis always
        // splits into at least two modal answers
        int idx = 0;
        if (plan.driver == 0) idx = index_of(kReligions, p.religion);
        if (plan.driver == 1) idx = index_of(kAges, p.age);
        if (plan.driver == 2) idx = index_of(kEthnicities, p.ethnicity);
        if (plan.driver == 3) idx = p.sex == "Female" ? 0 : 1;
        int offset = static_cast<int>(hash3(seed, static_cast<std::uint64_t>(number), 4) % k);
        Code preferred = q.scale_min + (idx + offset) % k;
        std::uint64_t ah = io::fnv1a64(p.age + p.religion, static_cast<std::uint64_t>(number) + seed);
        Code secondary = q.scale_min + static_cast<int>(ah % k);
        double u = unit(h);
        if (u < 0.55) code = preferred;
        else if (u < 0.75) code = secondary;
        else code = q.scale_min + static_cast<int>(mix(h) % k);
      }
      // scattered "don't know" codes among the largest groups
      if (p.ethnicity == "Chinese" && (p.religion == "No Religion" || p.religion == "Buddhist") &&
          unit(mix(h ^ 0x5bd1e995)) < 0.02)
        code = -1;
      cells[static_cast<std::size_t>(number - 1)] = std::to_string(code);
    }
    // skipped questions are the first `skipped` active questions
    for (int i = 0; i < p.skipped; ++i) cells[static_cast<std::size_t>(active[static_cast<std::size_t>(i)] - 1)].clear();
    row.insert(row.end(), cells.begin(), cells.end());
    w.row(row);
  }
  s.responses_csv = csv.str();
  std::sort(questions.begin(), questions.end(),
            [](const QuestionSpec& a, const QuestionSpec& b) { return io::natural_less(a.question_id, b.question_id); });
  s.codebook = std::move(questions);
  return s;
}

SurveyTable synthetic_table(std::uint64_t seed) {
  auto s = make_synthetic_survey(seed);
  std::istringstream in(s.responses_csv);
  auto table = parse_responses(in, s.codebook, {}, "synthetic");
  std::vector<std::string> ids;
  for (const auto& spec : s.exclusions)
    for (auto& id : expand_question_range(spec)) ids.push_back(id);
  return apply_filters(table, ids, true);
}

SyntheticPaths write_synthetic_survey(const std::filesystem::path& dir, std::uint64_t seed) {
  auto s = make_synthetic_survey(seed);
  SyntheticPaths p{dir / "codebook.json", dir / "responses.csv"};
  io::write_file(p.codebook, codebook_to_json(s.codebook));
  io::write_file(p.responses, s.responses_csv);
  return p;
}

}  // namespace valuemap
