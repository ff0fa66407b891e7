#include <doctest.h>

#include "fixtures.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "valuemap/io.hpp"
#include "valuemap/pipeline.hpp"
#include "valuemap/synthetic.hpp"

using namespace valuemap;
using fixture::code_of;
namespace fs = std::filesystem;

namespace {

// Synthetic survey with a small split plan so the pipeline runs quickly.
RunConfig small_config(const fs::path& dir) {
  write_synthetic_survey(dir);
  auto j = nlohmann::json::parse(example_config_json());
  j["strata"] = {{"train", {"sex", "religion"}}, {"ood", {"sex_x_religion"}}};
  j["bootstrap"]["resamples"] = 200;
  io::write_file(dir / "config.json", j.dump(2));
  return load_config(dir / "config.json");
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(io::read_file(p)); }

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() != ".jsonl")
      out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("config parsing") {
  auto dir = oracle::temp_dir("config");
  write_synthetic_survey(dir);
  io::write_file(dir / "config.json", example_config_json());
  auto c = load_config(dir / "config.json");
  CHECK(c.codebook == dir / "codebook.json");
  CHECK(c.output_dir == dir / "out");
  CHECK(c.min_n == 30);
  CHECK(c.models.size() == 5);
  CHECK(c.judge_model == "judge");
  CHECK(c.bootstrap_resamples == 2000);
  CHECK(c.expanded_exclusions().size() == 20);
  CHECK(c.plan.train_strata == SplitPlan::standard().train_strata);
  c.validate();
  CHECK(code_of([&] { c.model_config("nobody"); }) == Errc::ConfigError);

  auto j = nlohmann::json::parse(example_config_json());
  j["strata"]["ood"].push_back("sex");
  CHECK(code_of([&] { parse_config(j.dump(), dir).validate(); }) == Errc::OverlappingStrata);

  j = nlohmann::json::parse(example_config_json());
  j["min_n"] = 0;
  CHECK(code_of([&] { parse_config(j.dump(), dir).validate(); }) == Errc::ConfigError);

  j = nlohmann::json::parse(example_config_json());
  j["survey"]["codebook"] = "missing.json";
  CHECK(code_of([&] { parse_config(j.dump(), dir).validate(); }) == Errc::ConfigError);

  CHECK(code_of([&] { parse_config("{not json", dir); }) == Errc::ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("remote provider needs its key") {
  ProviderConfig p;
  p.type = "openai";
  p.base_url = "https://api.example.invalid/v1";
  p.model = "m";
  p.api_key_env = "VALUEMAP_TEST_UNSET_KEY";
  CHECK(code_of([&] { make_provider(p, {}, PromptKind::Numeric); }) == Errc::AuthError);
}

TEST_CASE("offline pipeline") {
  auto dir = oracle::temp_dir("pipeline");
  auto config = small_config(dir);

  auto land = cmd_landscape(config);
  CHECK(fs::exists(dir / "out" / "landscape" / "question_scores.csv"));
  CHECK_FALSE(land.summary.empty());

  cmd_build_dataset(config);
  auto manifest = import_manifest(dataset_dir(config));
  CHECK(manifest.total(Split::Train) == manifest.subgroup_total(Split::Train) * 214);

  CHECK(code_of([&] { cmd_eval_numeric(config, {"oracle", Split::EvalOod, true}); }) == Errc::ConfigError);

  for (auto m : {"oracle", "base", "tuned"}) cmd_eval_numeric(config, {m, Split::EvalOod});
  auto oracle_dir = run_dir(config, "oracle", Split::EvalOod, PromptKind::Numeric);
  auto o = read_json(oracle_dir / "overall.json");
  CHECK(o["accuracy"] == 1.0);
  CHECK(o["nmae"] == 0.0);
  CHECK(o["n_refusals"] == 0);
  CHECK(o["n_samples"] == manifest.total(Split::EvalOod));
  auto base = read_json(run_dir(config, "base", Split::EvalOod, PromptKind::Numeric) / "overall.json");
  auto tuned = read_json(run_dir(config, "tuned", Split::EvalOod, PromptKind::Numeric) / "overall.json");
  CHECK(base["accuracy"].get<double>() < tuned["accuracy"].get<double>());
  CHECK(base["n_refusals"].get<int>() > 0);

  SUBCASE("replay and rerun reproduce reports") {
    const auto before = snapshot(oracle_dir);
    cmd_eval_numeric(config, {"base", Split::EvalOod, true});
    cmd_eval_numeric(config, {"oracle", Split::EvalOod, true});
    CHECK(snapshot(oracle_dir) == before);
    cmd_eval_numeric(config, {"oracle", Split::EvalOod});
    CHECK(snapshot(oracle_dir) == before);
  }

  SUBCASE("compare") {
    auto res = cmd_compare(config, {"base", "tuned", Split::EvalOod});
    auto cdir = compare_dir(config, "base", "tuned", Split::EvalOod);
    CHECK(fs::exists(cdir / "bootstrap.csv"));
    CHECK(fs::exists(cdir / "deltas.csv"));
    CHECK(res.summary.find("compare base -> tuned") != std::string::npos);
    CHECK(io::read_file(cdir / "summary.txt").find("200 resamples") != std::string::npos);
    cmd_compare(config, {"oracle", "oracle", Split::EvalOod});
    CHECK(io::read_file(compare_dir(config, "oracle", "oracle", Split::EvalOod) / "disparity.csv").find("nan") ==
          std::string::npos);
  }

  SUBCASE("open responses and judging") {
    for (auto m : {"base", "tuned"}) cmd_eval_open(config, {m, Split::EvalOod});
    cmd_judge(config, {"tuned", "base", Split::EvalOod});
    cmd_judge(config, {"base", "tuned", Split::EvalOod});
    cmd_judge(config, {"base", "base", Split::EvalOod});
    auto rates = [&](const std::string& e, const std::string& b) {
      auto rows = [&] {
        std::istringstream in(io::read_file(judge_dir(config, e, b, Split::EvalOod) / "win_rates.csv"));
        return io::read_delimited(in);
      }();
      std::map<std::string, double> out;
      const auto& header = rows[0];
      for (const auto& r : rows)
        if (r[0] == "overall")
          for (std::size_t i = 1; i < r.size(); ++i)
            if (header[i].find("_wr") != std::string::npos) out[header[i]] = std::stod(r[i]);
      return out;
    };
    auto forward = rates("tuned", "base");
    auto backward = rates("base", "tuned");
    REQUIRE_FALSE(forward.empty());
    for (const auto& [k, v] : forward) CHECK(v + backward.at(k) == doctest::Approx(1.0));
    CHECK(forward.at("value_wr") > 0.5);
    for (const auto& [k, v] : rates("base", "base")) CHECK(v == 0.5);

    auto report = cmd_report(config, Split::EvalOod, "base");
    CHECK(report.summary.find("tuned") != std::string::npos);
  }

  fs::remove_all(dir);
}
