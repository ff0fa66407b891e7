#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "valuemap/error.hpp"
#include "valuemap/io.hpp"
#include "valuemap/landscape.hpp"
#include "valuemap/pipeline.hpp"
#include "valuemap/stats.hpp"
#include "valuemap/synthetic.hpp"

namespace py = pybind11;
using namespace valuemap;

namespace {

Split to_split(const std::string& s) { return parse_split(s); }

Denominator to_denominator(const std::string& s) {
  if (s == "min_s_c") return Denominator::MinSubgroupsChoices;
  if (s == "distinct_modes") return Denominator::DistinctModes;
  throw Error(Errc::ConfigError, "denominator must be min_s_c or distinct_modes");
}

Winner to_winner(const std::string& s) {
  if (s == "A") return Winner::A;
  if (s == "B") return Winner::B;
  if (s == "Tie") return Winner::Tie;
  throw Error(Errc::MalformedVerdict, "winner must be A, B or Tie");
}

py::dict verdict_dict(const Verdict& v) {
  py::dict d;
  d["persona"] = std::string(winner_name(v.persona));
  d["value"] = std::string(winner_name(v.value));
  d["overall"] = std::string(winner_name(v.overall));
  d["judge_reasoning"] = v.judge_reasoning;
  return d;
}

std::optional<Verdict> verdict_from(const py::object& o) {
  if (o.is_none()) return std::nullopt;
  auto d = o.cast<py::dict>();
  Verdict v;
  v.persona = to_winner(d["persona"].cast<std::string>());
  v.value = to_winner(d["value"].cast<std::string>());
  v.overall = to_winner(d["overall"].cast<std::string>());
  return v;
}

py::dict command_dict(const CommandResult& r) {
  py::dict d;
  std::vector<std::string> files;
  for (const auto& p : r.written) files.push_back(p.string());
  d["written"] = files;
  d["summary"] = r.summary;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Subgroup value landscape, persona datasets and evaluation";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      // the instance carries the error code name as .code
      py::object inst = py::reinterpret_borrow<py::object>(error)(e.what());
      inst.attr("code") = std::string(errc_name(e.code()));
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  // survey and strata
  py::class_<QuestionSpec>(m, "QuestionSpec")
      .def_readonly("question_id", &QuestionSpec::question_id)
      .def_readonly("text", &QuestionSpec::text)
      .def_readonly("category", &QuestionSpec::category)
      .def_readonly("scale_min", &QuestionSpec::scale_min)
      .def_readonly("scale_max", &QuestionSpec::scale_max)
      .def_readonly("choice_labels", &QuestionSpec::choice_labels)
      .def_readonly("excluded", &QuestionSpec::excluded)
      .def("__repr__", [](const QuestionSpec& q) {
        return "<QuestionSpec " + q.question_id + " " + std::to_string(q.scale_min) + ".." +
               std::to_string(q.scale_max) + ">";
      });

  py::class_<SurveyTable>(m, "SurveyTable")
      .def_property_readonly("n_respondents", [](const SurveyTable& t) { return t.respondents.size(); })
      .def_property_readonly("active_question_ids",
                             [](const SurveyTable& t) {
                               std::vector<std::string> ids;
                               for (const auto* q : t.active_questions()) ids.push_back(q->question_id);
                               return ids;
                             })
      .def_readonly("questions", &SurveyTable::questions)
      .def("filter_log", [](const SurveyTable& t) { return t.provenance.to_json(); });

  m.def("parse_codebook", &parse_codebook, py::arg("json_text"));
  m.def("load_codebook", &load_codebook, py::arg("path"));
  m.def(
      "load_responses",
      [](const std::filesystem::path& path, const std::vector<QuestionSpec>& codebook, char delimiter) {
        ResponseOptions o;
        o.delimiter = delimiter;
        return load_responses(path, codebook, o);
      },
      py::arg("path"), py::arg("codebook"), py::arg("delimiter") = ',');
  m.def("apply_filters", &apply_filters, py::arg("table"), py::arg("exclusion_ids"), py::arg("drop_negative") = true);
  m.def("expand_question_range", &expand_question_range, py::arg("spec"));
  m.def("age_bucket", [](int age) { return age_bucket(age); }, py::arg("age"));
  m.def(
      "enumerate_strata",
      [](const std::vector<std::string>& axes) {
        std::vector<std::string> names;
        for (const auto& s : enumerate_strata(axes)) names.push_back(s.name);
        return names;
      },
      py::arg("axes"));
  m.def(
      "valid_subgroups",
      [](const SurveyTable& t, const std::vector<std::string>& axes, int min_n) {
        std::vector<std::pair<std::string, int>> out;
        for (const auto& g : valid_subgroups(t, Stratum::of(axes), min_n, ValidityScope::WholeSubgroup))
          out.emplace_back(g.name(), g.population_n);
        return out;
      },
      py::arg("table"), py::arg("axes"), py::arg("min_n") = 30);

  // landscape metrics
  m.def(
      "modal_diversity",
      [](const std::vector<Code>& modes, int n_choices, const std::string& denominator) {
        return modal_diversity(modes, n_choices, to_denominator(denominator)).score;
      },
      py::arg("modes"), py::arg("n_choices"), py::arg("denominator") = "min_s_c");
  m.def("ordinal_wasserstein", &ordinal_wasserstein, py::arg("p"), py::arg("q"), py::arg("scale_min"),
        py::arg("scale_max"));
  m.def("entropy_bits", [](const std::vector<int>& counts) { return entropy_bits(counts); }, py::arg("counts"));

  // numeric scoring
  m.def(
      "parse_numeric",
      [](const std::string& text, Code lo, Code hi, bool strict) {
        return parse_numeric(text, lo, hi, ParseOptions{strict}).describe();
      },
      py::arg("text"), py::arg("scale_min"), py::arg("scale_max"), py::arg("strict") = false,
      "Returns 'value(N)' or 'refusal(reason)'.");
  m.def("normalized_abs_error", &normalized_abs_error, py::arg("predicted"), py::arg("gold"), py::arg("scale_min"),
        py::arg("scale_max"));

  // judge protocol
  m.def(
      "parse_verdict", [](const std::string& text) { return verdict_dict(parse_verdict(text)); }, py::arg("text"));
  m.def(
      "pass_score", [](const std::string& w, bool evaluatee_is_a) { return pass_score(to_winner(w), evaluatee_is_a); },
      py::arg("winner"), py::arg("evaluatee_is_a"));
  m.def(
      "score_pair",
      [](const py::object& pass1, const py::object& pass2) {
        auto s = score_pair(verdict_from(pass1), verdict_from(pass2));
        py::dict d;
        d["persona"] = s.wr[0];
        d["value"] = s.wr[1];
        d["overall"] = s.wr[2];
        d["single_pass"] = s.single_pass();
        return d;
      },
      py::arg("pass1"), py::arg("pass2"));

  // statistics
  m.def(
      "normalized_range", [](const std::vector<double>& v) { return stats::normalized_range(v); }, py::arg("values"));
  m.def(
      "coefficient_of_variation", [](const std::vector<double>& v) { return stats::coefficient_of_variation(v); },
      py::arg("values"));
  m.def(
      "paired_bootstrap_ci",
      [](const std::vector<double>& base, const std::vector<double>& treat, int resamples, double level,
         std::uint64_t seed) {
        auto ci = stats::paired_bootstrap_ci(base, treat, resamples, level, seed);
        return py::make_tuple(ci.point_delta, ci.lo, ci.hi);
      },
      py::arg("base"), py::arg("treat"), py::arg("resamples") = stats::kDefaultResamples,
      py::arg("level") = stats::kDefaultLevel, py::arg("seed") = stats::kDefaultSeed);
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        auto r = stats::spearman(x, y);
        return py::make_tuple(r.rho, r.p_value);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "weighted_kappa",
      [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        std::vector<int> ia, ib;
        for (const auto& s : a) ia.push_back(static_cast<int>(stats::parse_choice(s)));
        for (const auto& s : b) ib.push_back(static_cast<int>(stats::parse_choice(s)));
        return stats::weighted_kappa(ia, ib, stats::judge_weights());
      },
      py::arg("labels_a"), py::arg("labels_b"));
  m.def(
      "improvement_ranks",
      [](const std::map<std::string, double>& pre, const std::map<std::string, double>& post, bool higher_is_better,
         int round_decimals) {
        std::map<std::string, std::pair<double, int>> out;
        for (const auto& [k, v] : stats::improvement_ranks(pre, post, higher_is_better, round_decimals))
          out[k] = {v.delta, v.rank};
        return out;
      },
      py::arg("pre"), py::arg("post"), py::arg("higher_is_better") = true, py::arg("round_decimals") = -1);

  // synthetic data and pipeline commands
  m.def(
      "write_synthetic_survey",
      [](const std::filesystem::path& dir, std::uint64_t seed) {
        auto p = write_synthetic_survey(dir, seed);
        return py::make_tuple(p.codebook, p.responses);
      },
      py::arg("dir"), py::arg("seed") = 2024);
  m.def("example_config_json", &example_config_json);

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("min_n", &RunConfig::min_n)
      .def_readwrite("parallelism", &RunConfig::parallelism)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("bootstrap_resamples", &RunConfig::bootstrap_resamples)
      .def_property_readonly("models",
                             [](const RunConfig& c) {
                               std::vector<std::string> names;
                               for (const auto& [k, v] : c.models) names.push_back(k);
                               return names;
                             })
      .def("validate", &RunConfig::validate);
  m.def("load_config", &load_config, py::arg("path"));

  m.def("landscape", [](const RunConfig& c) { return command_dict(cmd_landscape(c)); }, py::arg("config"));
  m.def("build_dataset", [](const RunConfig& c) { return command_dict(cmd_build_dataset(c)); }, py::arg("config"));
  m.def(
      "eval_numeric",
      [](const RunConfig& c, const std::string& model, const std::string& split, bool replay) {
        return command_dict(cmd_eval_numeric(c, {model, to_split(split), replay}));
      },
      py::arg("config"), py::arg("model"), py::arg("split") = "eval_ood", py::arg("replay") = false);
  m.def(
      "eval_open",
      [](const RunConfig& c, const std::string& model, const std::string& split, bool replay) {
        return command_dict(cmd_eval_open(c, {model, to_split(split), replay}));
      },
      py::arg("config"), py::arg("model"), py::arg("split") = "eval_ood", py::arg("replay") = false);
  m.def(
      "judge",
      [](const RunConfig& c, const std::string& evaluatee, const std::string& baseline, const std::string& split) {
        return command_dict(cmd_judge(c, {evaluatee, baseline, to_split(split)}));
      },
      py::arg("config"), py::arg("evaluatee"), py::arg("baseline"), py::arg("split") = "eval_ood");
  m.def(
      "compare",
      [](const RunConfig& c, const std::string& a, const std::string& b, const std::string& split) {
        return command_dict(cmd_compare(c, {a, b, to_split(split)}));
      },
      py::arg("config"), py::arg("before"), py::arg("after"), py::arg("split") = "eval_ood");
  m.def(
      "report",
      [](const RunConfig& c, const std::string& split, const std::string& baseline) {
        return command_dict(cmd_report(c, to_split(split), baseline));
      },
      py::arg("config"), py::arg("split") = "eval_ood", py::arg("baseline") = "");
}
