#include "valuemap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "valuemap/error.hpp"
#include "valuemap/io.hpp"
#include "valuemap/landscape.hpp"
#include "valuemap/stats.hpp"
#include "valuemap/stratify.hpp"

namespace valuemap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kCsvDecimals = 6;
constexpr int kTextDecimals = 3;

std::string csv_num(double v) { return io::fixed(v, kCsvDecimals); }
std::string txt_num(double v) { return io::fixed(v, kTextDecimals); }

class CsvBuffer {
 public:
  explicit CsvBuffer(const io::Row& header) : w_(out_) { w_.row(header); }
  void row(const io::Row& r) { w_.row(r); }
  void save(const fs::path& p, CommandResult& result) {
    io::write_file(p, out_.str());
    result.written.push_back(p);
  }

 private:
  std::ostringstream out_;
  io::DelimitedWriter w_;
};

// Plain text table: first column left-aligned, the rest right-aligned.
std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
  auto line = [&](const std::vector<std::string>& r) {
    std::string s;
    for (std::size_t i = 0; i < width.size(); ++i) {
      std::string cell = i < r.size() ? r[i] : "";
      std::string pad(width[i] - cell.size(), ' ');
      if (i) s += "  ";
      s += i == 0 ? cell + pad : pad + cell;
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

void save_text(const fs::path& p, const std::string& text, CommandResult& result) {
  io::write_file(p, text);
  result.written.push_back(p);
}

std::uint64_t unit_hash(std::string_view id, std::string_view salt) { return io::fnv1a64(id, io::fnv1a64(salt)); }
double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

std::string verdict_json(std::string_view p, std::string_view v, std::string_view o) {
  return "{\"persona_winner\": \"" + std::string(p) + "\", \"value_winner\": \"" + std::string(v) +
         "\", \"overall_winner\": \"" + std::string(o) + "\"}";
}

std::string between(const std::string& s, const std::string& open, const std::string& close) {
  auto a = s.find(open);
  if (a == std::string::npos) return "";
  a += open.size();
  auto b = s.find(close, a);
  return b == std::string::npos ? "" : s.substr(a, b - a);
}

std::string strip_pass_suffix(const std::string& id) {
  auto hash = id.rfind('#');
  return hash == std::string::npos ? id : id.substr(0, hash);
}

Code noisy_code(const SampleRecord& s, std::uint64_t h) {
  if (s.scale_max == s.scale_min) return s.gold_modal_code;
  int step = 1 + static_cast<int>((h >> 20) % 2);
  int dir = ((h >> 30) & 1) ? 1 : -1;
  Code c = s.gold_modal_code + dir * step;
  if (c < s.scale_min || c > s.scale_max) c = s.gold_modal_code - dir * step;
  return std::clamp(c, s.scale_min, s.scale_max) == s.gold_modal_code
             ? (s.gold_modal_code == s.scale_min ? s.scale_min + 1 : s.scale_min)
             : std::clamp(c, s.scale_min, s.scale_max);
}

}  // namespace

// ---- loading and providers

SurveyTable load_survey(const RunConfig& config) {
  auto codebook = load_codebook(config.codebook);
  auto table = load_responses(config.responses, codebook, config.response_options);
  return apply_filters(table, config.expanded_exclusions(), config.drop_negative);
}

std::shared_ptr<Provider> make_provider(const ProviderConfig& model, const std::vector<SampleRecord>& samples,
                                        PromptKind kind) {
  if (model.type == "openai") {
    OpenAIProvider::Settings s;
    s.base_url = model.base_url;
    s.model = model.model;
    s.api_key_env = model.api_key_env;
    s.require_key = model.require_key;
    s.timeout_seconds = model.timeout_seconds;
    return std::make_shared<OpenAIProvider>(s);
  }
  if (model.type != "mock") throw Error(Errc::ConfigError, "unknown provider type " + model.type);

  if (model.mode == "script") {
    std::map<std::string, std::string> script;
    std::ifstream in(model.script, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot open script " + model.script.string());
    std::string line;
    while (std::getline(in, line)) {
      if (io::trim(line).empty()) continue;
      try {
        auto j = json::parse(line);
        script[j.at("request_id").get<std::string>()] = j.at("text").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(Errc::ConfigError, "bad script line in " + model.script.string() + ": " + e.what());
      }
    }
    auto p = MockProvider::scripted(std::move(script));
    return p;
  }

  auto by_id = std::make_shared<std::map<std::string, SampleRecord>>();
  for (const auto& s : samples) (*by_id)[s.id] = s;
  const std::string mode = model.mode;
  const std::string text = model.text;
  const double accuracy = model.accuracy;
  const std::string salt = model.describe();

  auto responder = [by_id, mode, text, accuracy, salt, kind](const CompletionRequest& r) -> std::string {
    if (mode == "fixed") return text;
    if (mode == "refuse") return "I cannot answer that request.";
    if (kind == PromptKind::Judge) {
      if (mode == "first") return "Response A is stronger on every criterion.\n" + verdict_json("A", "A", "A");
      if (mode == "tie") return "Both responses are comparable.\n" + verdict_json("Tie", "Tie", "Tie");
      // gold / noisy: a response wins the value criterion when it names the
      // ground-truth stance and the other does not
      std::string stance = between(r.user, "holds a stance aligned with \"", "\".\n");
      std::string a = between(r.user, "<Response A>\n", "\n</Response A>");
      std::string b = between(r.user, "<Response B>\n", "\n</Response B>");
      bool in_a = !stance.empty() && a.find(stance) != std::string::npos;
      bool in_b = !stance.empty() && b.find(stance) != std::string::npos;
      std::string_view v = in_a == in_b ? "Tie" : (in_a ? "A" : "B");
      return "The stance of each response was checked against the survey value.\n" + verdict_json("Tie", v, v);
    }
    if (mode == "tie") return verdict_json("Tie", "Tie", "Tie");
    if (mode == "first") return verdict_json("A", "A", "A");

    auto it = by_id->find(strip_pass_suffix(r.request_id));
    if (it == by_id->end()) return "I am not sure.";
    const SampleRecord& s = it->second;
    Code code = s.gold_modal_code;
    if (mode == "noisy") {
      auto h = unit_hash(r.request_id, salt);
      double u = unit(h);
      if (u >= accuracy) {
        if (u >= accuracy + (1.0 - accuracy) * 0.9) return "I cannot answer that request.";
        code = noisy_code(s, h);
      }
    }
    if (kind == PromptKind::Numeric) return "Answer: " + std::to_string(code);
    QuestionSpec q;
    q.scale_min = s.scale_min;
    q.scale_max = s.scale_max;
    std::string label = code == s.gold_modal_code ? s.gold_stance_label : std::to_string(code);
    return "Speaking as someone who is " + s.persona_text + ", I would lean towards \"" + label + "\" (" +
           std::to_string(code) + ").";
  };
  return std::make_shared<MockProvider>(responder, "mock-" + mode);
}

// ---- paths

fs::path dataset_dir(const RunConfig& config) { return config.output_dir / "dataset"; }

fs::path run_dir(const RunConfig& config, const std::string& model, Split split, PromptKind kind) {
  return config.output_dir / "runs" / model / std::string(split_name(split)) /
         (kind == PromptKind::Open ? "open" : "numeric");
}

fs::path judge_dir(const RunConfig& config, const std::string& evaluatee, const std::string& baseline, Split split) {
  return config.output_dir / "judge" / (evaluatee + "_vs_" + baseline) / std::string(split_name(split));
}

fs::path compare_dir(const RunConfig& config, const std::string& a, const std::string& b, Split split) {
  return config.output_dir / "compare" / (a + "_vs_" + b) / std::string(split_name(split));
}

std::vector<CompletionRequest> build_requests(const RunConfig& config, const std::vector<SampleRecord>& samples,
                                              const std::string& model, PromptKind kind) {
  const auto& m = config.model_config(model);
  std::vector<CompletionRequest> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    CompletionRequest r;
    r.system = s.prompts.system_prompt;
    r.user = kind == PromptKind::Open ? s.open_user_prompt : s.prompts.user_prompt;
    r.temperature = config.temperature;
    r.max_tokens = config.max_tokens;
    r.model_name = m.model;
    r.request_id = s.id;
    out.push_back(std::move(r));
  }
  return out;
}

std::string run_log_path_name(const RunConfig& config, const std::string& model,
                              const std::vector<CompletionRequest>& requests) {
  std::uint64_t h = io::fnv1a64("requests");
  for (const auto& r : requests) {
    h = io::fnv1a64(r.request_id, h);
    h = io::fnv1a64(std::string_view("\x1f", 1), h);
    h = io::fnv1a64(r.system, h);
    h = io::fnv1a64(std::string_view("\x1f", 1), h);
    h = io::fnv1a64(r.user, h);
    h = io::fnv1a64(std::string_view("\x1e", 1), h);
  }
  std::string provider = config.model_config(model).describe() + "|t=" + io::exact(config.temperature) +
                         "|max_tokens=" + std::to_string(config.max_tokens);
  return run_log_name(provider, io::hex64(h));
}

namespace {

DatasetManifest load_dataset(const RunConfig& config) {
  auto dir = dataset_dir(config);
  if (!fs::exists(dir / "manifest.json"))
    throw Error(Errc::ConfigError, "no dataset in " + dir.string() + "; run build-dataset first");
  return import_manifest(dir);
}

std::vector<SampleRecord> split_records(const DatasetManifest& m, Split split) {
  std::vector<SampleRecord> out;
  for (const auto* r : m.of_split(split)) out.push_back(*r);
  if (out.empty()) throw Error(Errc::EmptyManifest, "split " + std::string(split_name(split)) + " has no records");
  return out;
}

struct Execution {
  std::vector<CompletionResult> results;  // request order
  fs::path log_path;
  int sent = 0;
};

// Sends whatever the run log does not already hold (or nothing, in replay
// mode) and returns one result per request, read back from the log.
Execution execute(const RunConfig& config, const std::string& model, const std::vector<CompletionRequest>& requests,
                  const fs::path& dir, bool replay, bool fresh, const std::vector<SampleRecord>& samples,
                  PromptKind kind) {
  Execution ex;
  ex.log_path = dir / run_log_path_name(config, model, requests);
  RunLog log(ex.log_path);
  RetryPolicy retry = config.retry;

  if (replay) {
    if (!log.exists()) throw Error(Errc::ConfigError, "replay requested but no run log at " + ex.log_path.string());
    auto provider = std::make_shared<ReplayProvider>(log.load(), "replay");
    retry.max_retries = 0;
    Client client(provider, retry);
    ex.results = run_batch(client, requests, config.parallelism);
    return ex;
  }

  auto stored = fresh ? std::map<std::string, CompletionResult>{} : log.load();
  std::vector<CompletionRequest> pending;
  for (const auto& r : requests) {
    auto it = stored.find(r.request_id);
    if (it == stored.end() || it->second.status == CompletionStatus::TransportError) pending.push_back(r);
  }
  if (!pending.empty()) {
    auto provider = make_provider(config.model_config(model), samples, kind);
    std::shared_ptr<RateLimiter> limiter;
    if (config.requests_per_minute > 0) limiter = std::make_shared<RateLimiter>(config.requests_per_minute);
    Client client(provider, retry, real_sleeper(), limiter);
    const std::string model_name = config.model_config(model).model.empty() ? model : config.model_config(model).model;
    run_batch(client, pending, config.parallelism, [&](const CompletionResult& r) { log.append(r, model_name); });
  }
  ex.sent = static_cast<int>(pending.size());
  auto all = log.load();
  for (const auto& r : requests) {
    auto it = all.find(r.request_id);
    if (it != all.end()) ex.results.push_back(it->second);
    else ex.results.push_back({r.request_id, "", CompletionStatus::TransportError, 0, "missing from run log"});
  }
  return ex;
}

std::string percent(double v) { return io::fixed(100.0 * v, 1) + "%"; }

}  // namespace

// ---- landscape

CommandResult cmd_landscape(const RunConfig& config) {
  config.validate();
  CommandResult result;
  const auto table = load_survey(config);
  if (table.respondents.empty()) throw Error(Errc::InsufficientData, "survey has no respondents");
  const auto strata = enumerate_strata(config.response_options.axes);
  const auto matrix = opinion_matrix(table, strata, config.min_n);
  const fs::path dir = config.output_dir / "landscape";

  std::vector<std::vector<DiversityScore>> scores;
  for (auto d : config.denominators) scores.push_back(diversity_scores(matrix, table, d));
  const auto divergence = divergence_scores(matrix, table);
  std::map<std::pair<std::string, std::string>, double> div_by_key;
  for (const auto& d : divergence) div_by_key[{d.question_id, d.stratum}] = d.score;

  // per (question, stratum) table
  io::Row header{"question_id", "category", "stratum", "n_valid_subgroups", "n_distinct_modes"};
  for (auto d : config.denominators) header.push_back("mds_" + std::string(denominator_name(d)));
  header.push_back("degenerate");
  header.push_back("wasserstein");
  CsvBuffer qcsv(header);
  for (std::size_t i = 0; i < scores[0].size(); ++i) {
    const auto& s = scores[0][i];
    const auto* q = table.find_question(s.question_id);
    io::Row row{s.question_id, q ? q->category : "", s.stratum, std::to_string(s.n_valid_subgroups),
                std::to_string(s.n_distinct_modes)};
    for (const auto& per_denom : scores) row.push_back(csv_num(per_denom[i].score));
    row.push_back(s.degenerate ? "1" : "0");
    auto it = div_by_key.find({s.question_id, s.stratum});
    row.push_back(it == div_by_key.end() ? "NA" : csv_num(it->second));
    qcsv.row(row);
  }
  qcsv.save(dir / "question_scores.csv", result);

  // category summary
  std::vector<CategoryTable> cats;
  for (const auto& s : scores) cats.push_back(category_report(s, table.questions));
  std::vector<QuestionValue> wvals;
  for (const auto& d : divergence) wvals.push_back({d.question_id, d.score});
  std::optional<CategoryTable> wcat;
  if (!wvals.empty()) wcat = category_average(wvals, table.questions);
  auto wass_for = [&](const std::string& category) -> double {
    if (!wcat) return std::nan("");
    if (category == wcat->overall.category) return wcat->overall.avg_diversity;
    for (const auto& r : wcat->rows)
      if (r.category == category) return r.avg_diversity;
    return std::nan("");
  };
  auto avg_for = [](const CategoryTable& t, const std::string& category) {
    if (category == t.overall.category) return t.overall.avg_diversity;
    for (const auto& r : t.rows)
      if (r.category == category) return r.avg_diversity;
    return std::nan("");
  };
  io::Row cheader{"category", "total_questions", "unanimous_questions"};
  std::vector<std::string> theader{"Value category", "Questions", "Unanimous"};
  for (auto d : config.denominators) {
    cheader.push_back("avg_mds_" + std::string(denominator_name(d)));
    theader.push_back("MDS " + std::string(denominator_name(d)));
  }
  cheader.push_back("avg_wasserstein");
  theader.push_back("Wasserstein");
  CsvBuffer ccsv(cheader);
  std::vector<std::vector<std::string>> trows;
  auto emit_cat = [&](const CategoryReport& r) {
    io::Row row{r.category, std::to_string(r.total_questions), std::to_string(r.unanimous_questions)};
    std::vector<std::string> trow = row;
    for (const auto& t : cats) {
      double v = avg_for(t, r.category);
      row.push_back(csv_num(v));
      trow.push_back(txt_num(v));
    }
    row.push_back(csv_num(wass_for(r.category)));
    trow.push_back(txt_num(wass_for(r.category)));
    ccsv.row(row);
    trows.push_back(trow);
  };
  for (const auto& r : cats[0].rows) emit_cat(r);
  emit_cat(cats[0].overall);
  ccsv.save(dir / "category_summary.csv", result);
  save_text(dir / "category_summary.txt",
            "Value categories ranked by average modal diversity (mean over strata, then over questions)\n\n" +
                text_table(theader, trows),
            result);

  // exemplars: questions ranked by their mean score over strata
  std::map<std::string, std::pair<double, int>> per_question;
  for (const auto& s : scores[0]) {
    auto& acc = per_question[s.question_id];
    acc.first += s.score;
    ++acc.second;
  }
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [qid, acc] : per_question) ranked.emplace_back(qid, acc.first / acc.second);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::string pattern_stratum;
  for (const auto& s : matrix.strata())
    if (s.name == "sex_x_age") pattern_stratum = s.name;
  if (pattern_stratum.empty())
    for (const auto& s : matrix.strata())
      if (s.axes.size() == 2 && pattern_stratum.empty()) pattern_stratum = s.name;
  if (pattern_stratum.empty() && !matrix.strata().empty()) pattern_stratum = matrix.strata().front().name;

  std::string ex = "High-conflict questions (highest mean modal diversity across strata)\n";
  for (std::size_t i = 0; i < ranked.size() && i < 5; ++i) {
    const auto* q = table.find_question(ranked[i].first);
    ex += "\n" + ranked[i].first + "  score " + txt_num(ranked[i].second) + "  " + (q ? q->text : "") + "\n";
    for (const auto* cell : matrix.slice(ranked[i].first, pattern_stratum)) {
      if (!cell->valid || !cell->modal_code) continue;
      ex += "  " + cell->subgroup.name() + ": " + std::to_string(*cell->modal_code) + " (" +
            (q ? q->label_or_code(*cell->modal_code) : "") + ")\n";
    }
  }
  ex += "\nNo-conflict questions (every valid subgroup in every stratum shares one modal answer)\n";
  int listed = 0;
  for (auto it = ranked.rbegin(); it != ranked.rend() && listed < 5; ++it) {
    if (it->second != 0.0) break;
    const auto* q = table.find_question(it->first);
    std::string answer;
    for (const auto* cell : matrix.slice(it->first, matrix.strata().front().name))
      if (cell->valid && cell->modal_code) answer = std::to_string(*cell->modal_code) + ": " + q->label_or_code(*cell->modal_code);
    ex += "  " + it->first + "  \"" + answer + "\"  " + (q ? q->text : "") + "\n";
    ++listed;
  }
  if (!listed) ex += "  none\n";
  save_text(dir / "exemplars.txt", ex, result);

  // label stability over valid cells
  std::vector<const SubgroupOpinion*> cells;
  for (const auto& c : matrix.cells()) cells.push_back(&c);
  json stab;
  try {
    auto s = label_stability(cells);
    stab = {{"rho", s.rho}, {"p_value", s.p_value}, {"n_pairs", s.n_pairs}};
  } catch (const Error& e) {
    stab = {{"error", e.what()}};
  }
  save_text(dir / "label_stability.json", stab.dump(2) + "\n", result);
  save_text(dir / "opinions.csv", matrix.to_csv(), result);
  save_text(dir / "filter_log.json", table.provenance.to_json() + "\n", result);

  std::ostringstream sum;
  sum << "landscape: " << table.respondents.size() << " respondents, " << table.active_questions().size()
      << " active questions, " << matrix.strata().size() << " strata; overall mean MDS "
      << txt_num(cats[0].overall.avg_diversity) << ", unanimous " << cats[0].overall.unanimous_questions << "\n";
  result.summary = sum.str();
  return result;
}

// ---- dataset

CommandResult cmd_build_dataset(const RunConfig& config) {
  config.validate();
  CommandResult result;
  const auto table = load_survey(config);
  std::vector<Stratum> strata;
  for (const auto* list : {&config.plan.train_strata, &config.plan.ood_strata})
    for (const auto& name : *list) {
      bool found = false;
      for (const auto& s : enumerate_strata(config.response_options.axes))
        if (s.name == name) strata.push_back(s), found = true;
      if (!found) throw Error(Errc::UnknownStratum, name);
    }
  const auto matrix = opinion_matrix(table, strata, config.min_n);
  auto manifest = build_splits(matrix, table, config.plan, config.persona);
  manifest.exclusions = config.expanded_exclusions();
  const fs::path dir = dataset_dir(config);
  export_manifest(manifest, dir);
  for (auto s : {Split::Train, Split::EvalOod}) result.written.push_back(dir / (std::string(split_name(s)) + ".jsonl"));
  result.written.push_back(dir / "manifest.json");

  // composition: every observed subgroup with respondent count and samples
  std::map<std::string, int> samples_by_key;
  for (const auto& r : manifest.records) ++samples_by_key[r.subgroup.key()];
  CsvBuffer comp({"split", "stratum", "subgroup", "population_n", "samples", "included"});
  std::string text;
  auto section = [&](const std::vector<std::string>& names, Split split) {
    for (const auto& name : names) {
      const Stratum& st = matrix.stratum(name);
      auto groups = observed_subgroups(table, st);
      std::stable_sort(groups.begin(), groups.end(),
                       [](const Subgroup& a, const Subgroup& b) { return a.population_n > b.population_n; });
      std::vector<std::vector<std::string>> rows;
      long covered = 0, total = 0;
      int included = 0, samples = 0;
      for (const auto& g : groups) {
        auto it = samples_by_key.find(g.key());
        int s = it == samples_by_key.end() ? 0 : it->second;
        total += g.population_n;
        if (s > 0) covered += g.population_n, ++included, samples += s;
        comp.row({std::string(split_name(split)), name, g.name(), std::to_string(g.population_n), std::to_string(s),
                  s > 0 ? "1" : "0"});
        rows.push_back({g.name(), std::to_string(g.population_n), s > 0 ? std::to_string(s) : "-"});
      }
      text += "Stratum: " + name + " (" + std::string(split_name(split)) + ")  subgroups " +
              std::to_string(included) + "  samples " + std::to_string(samples) + "  coverage " +
              percent(total ? static_cast<double>(covered) / total : 0.0) + "\n";
      text += text_table({"Subgroup", "N", "S"}, rows) + "\n";
    }
  };
  section(config.plan.train_strata, Split::Train);
  section(config.plan.ood_strata, Split::EvalOod);
  comp.save(dir / "composition.csv", result);

  std::vector<std::vector<std::string>> count_rows;
  for (const auto& c : manifest.counts)
    count_rows.push_back({c.stratum, std::string(split_name(c.split)), std::to_string(c.subgroups),
                          std::to_string(c.samples)});
  for (auto s : {Split::Train, Split::EvalOod})
    count_rows.push_back({std::string(split_name(s)) + " total", std::string(split_name(s)),
                          std::to_string(manifest.subgroup_total(s)), std::to_string(manifest.total(s))});
  std::string head = "Per-stratum sample counts\n\n" +
                     text_table({"Stratum", "Split", "Subgroups", "Samples"}, count_rows) + "\n";
  auto uncovered = uncovered_ood_components(manifest);
  if (!uncovered.empty()) {
    head += "Held-out components never seen in training:\n";
    for (const auto& [axis, value] : uncovered) head += "  " + axis + "=" + value + "\n";
    head += "\n";
  }
  save_text(dir / "composition.txt", head + text, result);

  result.summary = "build-dataset: " + std::to_string(manifest.total(Split::Train)) + " train samples over " +
                   std::to_string(manifest.subgroup_total(Split::Train)) + " subgroups, " +
                   std::to_string(manifest.total(Split::EvalOod)) + " eval_ood samples over " +
                   std::to_string(manifest.subgroup_total(Split::EvalOod)) + " subgroups\n";
  return result;
}

// ---- numeric evaluation

namespace {

io::Row metrics_row(const SubgroupMetrics& m) {
  return {m.group,
          m.stratum,
          std::to_string(m.n_samples),
          std::to_string(m.n_correct),
          std::to_string(m.n_wrong),
          std::to_string(m.n_refusals),
          csv_num(m.accuracy),
          m.nmae_defined ? csv_num(m.nmae) : "NA",
          csv_num(m.refusal_rate)};
}

const io::Row kMetricsHeader{"group",     "stratum",  "n_samples", "n_correct",   "n_wrong",
                             "n_refusals", "accuracy", "nmae",      "refusal_rate"};

void write_disparity(const EvalDisparity& d, const fs::path& path, CommandResult& result) {
  CsvBuffer csv({"metric", "stratum", "n_subgroups", "normalized_range", "cv"});
  for (const auto* rep : {&d.accuracy, &d.nmae}) {
    for (const auto& s : rep->strata)
      csv.row({rep->metric_name, s.stratum, std::to_string(s.n_subgroups), csv_num(s.normalized_range), csv_num(s.cv)});
    if (!rep->strata.empty())
      csv.row({rep->metric_name, "mean", "", csv_num(rep->mean_normalized_range), csv_num(rep->mean_cv)});
  }
  csv.save(path, result);
}

}  // namespace

CommandResult cmd_eval_numeric(const RunConfig& config, const EvalOptions& options) {
  config.validate();
  config.model_config(options.model);
  CommandResult result;
  const auto manifest = load_dataset(config);
  const auto samples = split_records(manifest, options.split);
  const auto requests = build_requests(config, samples, options.model, PromptKind::Numeric);
  const fs::path dir = run_dir(config, options.model, options.split, PromptKind::Numeric);
  auto ex = execute(config, options.model, requests, dir, options.replay, options.fresh, samples, PromptKind::Numeric);
  result.written.push_back(ex.log_path);

  ParseOptions popts;
  popts.strict = config.strict_parsing;
  const auto records = score_records(samples, ex.results, popts);

  CsvBuffer rec({"sample_id", "question_id", "stratum", "subgroup", "gold_code", "scale_min", "scale_max",
                 "prediction", "refusal_reason", "correct", "abs_err_norm", "raw_text"});
  for (const auto& r : records)
    rec.row({r.sample.id, r.sample.question_id, r.sample.subgroup.stratum.name, r.sample.subgroup.name(),
             std::to_string(r.sample.gold_modal_code), std::to_string(r.sample.scale_min),
             std::to_string(r.sample.scale_max), r.parsed.value ? std::to_string(*r.parsed.value) : "",
             r.parsed.value ? "" : std::string(refusal_name(r.parsed.reason)), r.correct ? "1" : "0",
             r.abs_err_norm ? io::exact(*r.abs_err_norm) : "", r.raw_text});
  rec.save(dir / "records.csv", result);

  const auto by_subgroup = aggregate(records, GroupBy::Subgroup, config.accuracy_denominator);
  const auto by_stratum = aggregate(records, GroupBy::Stratum, config.accuracy_denominator);
  const auto overall = aggregate(records, GroupBy::Overall, config.accuracy_denominator).front();
  CsvBuffer sub(kMetricsHeader), str(kMetricsHeader);
  for (const auto& m : by_subgroup) sub.row(metrics_row(m));
  for (const auto& m : by_stratum) str.row(metrics_row(m));
  sub.save(dir / "by_subgroup.csv", result);
  str.save(dir / "by_stratum.csv", result);

  json o;
  o["model"] = options.model;
  o["split"] = split_name(options.split);
  o["n_samples"] = overall.n_samples;
  o["n_correct"] = overall.n_correct;
  o["n_wrong"] = overall.n_wrong;
  o["n_refusals"] = overall.n_refusals;
  o["accuracy"] = overall.accuracy;
  o["nmae"] = overall.nmae_defined ? json(overall.nmae) : json(nullptr);
  o["refusal_rate"] = overall.refusal_rate;
  o["accuracy_denominator"] =
      config.accuracy_denominator == AccuracyDenominator::AllSamples ? "all_samples" : "parsable_only";
  o["strict_parsing"] = config.strict_parsing;
  o["run_log"] = ex.log_path.filename().string();
  save_text(dir / "overall.json", o.dump(2) + "\n", result);

  const auto disparity = eval_disparity(by_subgroup, config.sd);
  write_disparity(disparity, dir / "disparity.csv", result);

  std::vector<std::vector<std::string>> rows;
  for (const auto& m : by_stratum)
    rows.push_back({m.group, std::to_string(m.n_samples), txt_num(m.accuracy),
                    m.nmae_defined ? txt_num(m.nmae) : "NA", txt_num(m.refusal_rate)});
  rows.push_back({"overall", std::to_string(overall.n_samples), txt_num(overall.accuracy),
                  overall.nmae_defined ? txt_num(overall.nmae) : "NA", txt_num(overall.refusal_rate)});
  std::string summary = "Structured numerical evaluation: " + options.model + " on " +
                        std::string(split_name(options.split)) + "\n\n" +
                        text_table({"Stratum", "Samples", "Accuracy", "NMAE", "Refusal rate"}, rows);
  std::vector<std::vector<std::string>> drows;
  for (std::size_t i = 0; i < disparity.accuracy.strata.size(); ++i) {
    const auto& a = disparity.accuracy.strata[i];
    std::string nr = "NA", cv = "NA";
    for (const auto& n : disparity.nmae.strata)
      if (n.stratum == a.stratum) nr = txt_num(n.normalized_range), cv = txt_num(n.cv);
    drows.push_back({a.stratum, txt_num(a.normalized_range), txt_num(a.cv), nr, cv});
  }
  if (!drows.empty()) {
    drows.push_back({"mean", txt_num(disparity.accuracy.mean_normalized_range), txt_num(disparity.accuracy.mean_cv),
                     disparity.nmae.strata.empty() ? "NA" : txt_num(disparity.nmae.mean_normalized_range),
                     disparity.nmae.strata.empty() ? "NA" : txt_num(disparity.nmae.mean_cv)});
    summary += "\nDisparity across subgroups within each stratum\n\n" +
               text_table({"Stratum", "Acc range", "Acc CV", "NMAE range", "NMAE CV"}, drows);
  }
  save_text(dir / "summary.txt", summary, result);

  result.summary = "eval-numeric " + options.model + "/" + std::string(split_name(options.split)) + ": accuracy " +
                   txt_num(overall.accuracy) + ", NMAE " + (overall.nmae_defined ? txt_num(overall.nmae) : "NA") +
                   ", refusals " + std::to_string(overall.n_refusals) + " of " + std::to_string(overall.n_samples) +
                   (options.replay ? " (replayed)" : ", " + std::to_string(ex.sent) + " request(s) sent") + "\n";
  return result;
}

// ---- open-ended generation

CommandResult cmd_eval_open(const RunConfig& config, const EvalOptions& options) {
  config.validate();
  config.model_config(options.model);
  CommandResult result;
  const auto manifest = load_dataset(config);
  const auto samples = split_records(manifest, options.split);
  const auto requests = build_requests(config, samples, options.model, PromptKind::Open);
  const fs::path dir = run_dir(config, options.model, options.split, PromptKind::Open);
  auto ex = execute(config, options.model, requests, dir, options.replay, options.fresh, samples, PromptKind::Open);
  result.written.push_back(ex.log_path);

  CsvBuffer csv({"sample_id", "status", "raw_text"});
  int ok = 0, empty = 0, failed = 0;
  for (const auto& r : ex.results) {
    csv.row({r.request_id, std::string(status_name(r.status)), r.raw_text});
    if (r.status == CompletionStatus::Ok) ++ok;
    else if (r.status == CompletionStatus::ProviderRefusedEmpty) ++empty;
    else ++failed;
  }
  csv.save(dir / "responses.csv", result);
  result.summary = "eval-open " + options.model + "/" + std::string(split_name(options.split)) + ": " +
                   std::to_string(ok) + " responses, " + std::to_string(empty) + " empty, " +
                   std::to_string(failed) + " failed\n";
  save_text(dir / "summary.txt", result.summary, result);
  return result;
}

// ---- judge

namespace {

std::map<std::string, CompletionResult> open_responses(const RunConfig& config, const std::string& model,
                                                       const std::vector<SampleRecord>& samples, Split split) {
  const auto requests = build_requests(config, samples, model, PromptKind::Open);
  auto path = run_dir(config, model, split, PromptKind::Open) / run_log_path_name(config, model, requests);
  RunLog log(path);
  if (!log.exists())
    throw Error(Errc::ConfigError, "no open-ended responses for " + model + " at " + path.string() +
                                       "; run eval-open first");
  return log.load();
}

}  // namespace

CommandResult cmd_judge(const RunConfig& config, const JudgeOptions& options) {
  config.validate();
  config.model_config(options.evaluatee);
  config.model_config(options.baseline);
  if (config.judge_model.empty()) throw Error(Errc::ConfigError, "no judge model configured");
  CommandResult result;
  const auto manifest = load_dataset(config);
  const auto samples = split_records(manifest, options.split);
  const auto eval_log = open_responses(config, options.evaluatee, samples, options.split);
  const auto base_log = open_responses(config, options.baseline, samples, options.split);

  std::set<std::string> eval_ids, base_ids;
  for (const auto& [id, r] : eval_log) eval_ids.insert(id);
  for (const auto& [id, r] : base_log) base_ids.insert(id);
  if (eval_ids != base_ids)
    throw Error(Errc::CaseSetMismatch, options.evaluatee + " and " + options.baseline +
                                           " answered different case sets (" + std::to_string(eval_ids.size()) +
                                           " vs " + std::to_string(base_ids.size()) + ")");

  // codebook text for the judge prompt comes from the open prompt itself
  std::vector<JudgeCase> cases;
  std::vector<const SampleRecord*> case_samples;
  int unusable = 0;
  for (const auto& s : samples) {
    auto e = eval_log.find(s.id);
    auto b = base_log.find(s.id);
    if (e == eval_log.end() || b == base_log.end()) continue;
    if (io::trim(e->second.raw_text).empty() || io::trim(b->second.raw_text).empty()) {
      ++unusable;
      continue;
    }
    JudgeCase c;
    c.case_id = s.id;
    c.group = s.subgroup.stratum.name;
    c.persona_text = s.persona_text;
    c.question.question_id = s.question_id;
    c.question.text = s.open_user_prompt.substr(0, s.open_user_prompt.find("\n\nFor context"));
    c.question.scale_min = s.scale_min;
    c.question.scale_max = s.scale_max;
    c.gold_stance_label = s.gold_stance_label;
    c.response_evaluatee = e->second.raw_text;
    c.response_baseline = b->second.raw_text;
    cases.push_back(std::move(c));
    case_samples.push_back(&s);
  }

  std::vector<CompletionRequest> requests;
  std::vector<SampleRecord> judge_samples;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (int pass = 1; pass <= 2; ++pass) {
      CompletionRequest r;
      r.user = build_judge_prompt(cases[i], pass == 1, config.persona.nationality);
      r.temperature = 0.0;
      r.max_tokens = config.max_tokens;
      r.model_name = config.model_config(config.judge_model).model;
      r.request_id = cases[i].case_id + "#" + std::to_string(pass);
      requests.push_back(std::move(r));
    }
    judge_samples.push_back(*case_samples[i]);
  }
  const fs::path dir = judge_dir(config, options.evaluatee, options.baseline, options.split);
  Execution ex;
  if (!requests.empty()) {
    ex = execute(config, config.judge_model, requests, dir, options.replay, options.fresh, judge_samples,
                 PromptKind::Judge);
    result.written.push_back(ex.log_path);
  }

  std::string verdicts;
  std::vector<CaseOutcome> outcomes;
  CsvBuffer cases_csv({"case_id", "group", "pass1_valid", "pass2_valid", "persona_wr", "value_wr", "overall_wr"});
  for (std::size_t i = 0; i < cases.size(); ++i) {
    std::array<std::optional<Verdict>, 2> v;
    for (int pass = 0; pass < 2; ++pass) {
      const auto& r = ex.results[2 * i + static_cast<std::size_t>(pass)];
      if (r.status == CompletionStatus::Ok) v[static_cast<std::size_t>(pass)] = try_parse_verdict(r.raw_text);
      json line;
      line["case_id"] = cases[i].case_id;
      line["pass"] = pass + 1;
      line["prompt_hash"] = io::hex64(io::fnv1a64(requests[2 * i + static_cast<std::size_t>(pass)].user));
      line["raw_verdict"] = r.raw_text;
      if (const auto& pv = v[static_cast<std::size_t>(pass)])
        line["parsed_verdict"] = {{"persona_winner", winner_name(pv->persona)},
                                  {"value_winner", winner_name(pv->value)},
                                  {"overall_winner", winner_name(pv->overall)}};
      else
        line["parsed_verdict"] = nullptr;
      verdicts += line.dump() + "\n";
    }
    CaseOutcome o{cases[i].case_id, cases[i].group, std::nullopt};
    if (v[0] || v[1]) o.score = score_pair(v[0], v[1]);
    io::Row row{o.case_id, o.group, v[0] ? "1" : "0", v[1] ? "1" : "0"};
    for (std::size_t c = 0; c < 3; ++c) row.push_back(o.score ? io::fixed(o.score->wr[c], 2) : "NA");
    cases_csv.row(row);
    outcomes.push_back(std::move(o));
  }
  save_text(dir / "verdicts.jsonl", verdicts, result);
  cases_csv.save(dir / "cases.csv", result);

  const bool self = options.evaluatee == options.baseline;
  const auto summaries = aggregate_win_rates_by_group(outcomes, self);
  CsvBuffer wr({"group", "n_cases", "n_single_pass", "n_excluded", "persona_wr", "value_wr", "overall_wr"});
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : summaries) {
    wr.row({s.group, std::to_string(s.n_cases), std::to_string(s.n_single_pass), std::to_string(s.n_excluded),
            csv_num(s.wr[0]), csv_num(s.wr[1]), csv_num(s.wr[2])});
    rows.push_back({s.group, std::to_string(s.n_cases), txt_num(s.wr[0]), txt_num(s.wr[1]), txt_num(s.wr[2]),
                    std::to_string(s.n_single_pass), std::to_string(s.n_excluded)});
  }
  wr.save(dir / "win_rates.csv", result);
  const auto& overall = summaries.back();
  std::string text = "Pairwise judge win rates: " + options.evaluatee + " vs " + options.baseline + " on " +
                     std::string(split_name(options.split)) + " (judge: " + config.judge_model + ")\n";
  if (self) text += "Self-comparison: rates are 0.5 by convention.\n";
  if (unusable) text += std::to_string(unusable) + " case(s) skipped for an empty or failed response.\n";
  text += "\n" + text_table({"Group", "Cases", "Persona", "Value", "Overall", "Single pass", "Excluded"}, rows);
  save_text(dir / "summary.txt", text, result);

  result.summary = "judge " + options.evaluatee + " vs " + options.baseline + ": persona " + txt_num(overall.wr[0]) +
                   ", value " + txt_num(overall.wr[1]) + ", overall " + txt_num(overall.wr[2]) + " over " +
                   std::to_string(overall.n_cases) + " case(s)\n";
  return result;
}

// ---- compare

namespace {

struct ScoredSample {
  std::string stratum;
  std::string subgroup;
  double correct = 0.0;
  std::optional<double> abs_err;
};

std::map<std::string, ScoredSample> read_scored(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::ConfigError, "no scored run at " + path.string() + "; run eval-numeric first");
  auto rows = io::read_delimited_file(path);
  if (rows.empty()) throw Error(Errc::MalformedRow, path.string() + " is empty");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
  for (const char* c : {"sample_id", "stratum", "subgroup", "correct", "abs_err_norm"})
    if (!col.count(c)) throw Error(Errc::MalformedRow, path.string() + " lacks column " + c);
  std::map<std::string, ScoredSample> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != rows[0].size()) throw Error(Errc::MalformedRow, path.string() + " row " + std::to_string(r));
    ScoredSample s;
    s.stratum = row[col["stratum"]];
    s.subgroup = s.stratum + "/" + row[col["subgroup"]];
    s.correct = row[col["correct"]] == "1" ? 1.0 : 0.0;
    if (!row[col["abs_err_norm"]].empty()) s.abs_err = std::stod(row[col["abs_err_norm"]]);
    if (!out.emplace(row[col["sample_id"]], s).second)
      throw Error(Errc::DuplicateResult, row[col["sample_id"]] + " in " + path.string());
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

CommandResult cmd_compare(const RunConfig& config, const CompareOptions& options) {
  config.validate();
  CommandResult result;
  const auto a = read_scored(run_dir(config, options.run_a, options.split, PromptKind::Numeric) / "records.csv");
  const auto b = read_scored(run_dir(config, options.run_b, options.split, PromptKind::Numeric) / "records.csv");
  {
    bool same = a.size() == b.size();
    for (auto ia = a.begin(), ib = b.begin(); same && ia != a.end(); ++ia, ++ib) same = ia->first == ib->first;
    if (!same)
      throw Error(Errc::SampleSetMismatch, options.run_a + " and " + options.run_b + " were scored on different samples");
  }

  // group -> paired per-sample values
  struct Paired {
    std::vector<double> acc_a, acc_b;   // every sample
    std::vector<double> err_a, err_b;   // samples parsable in both runs
    std::vector<double> nmae_a, nmae_b; // each run's own parsable samples
  };
  std::map<std::string, Paired> by_stratum, by_subgroup;
  Paired overall;
  std::map<std::string, std::string> stratum_of_subgroup;
  for (const auto& [id, sa] : a) {
    const auto& sb = b.at(id);
    for (Paired* p : {&overall, &by_stratum[sa.stratum], &by_subgroup[sa.subgroup]}) {
      p->acc_a.push_back(sa.correct);
      p->acc_b.push_back(sb.correct);
      if (sa.abs_err) p->nmae_a.push_back(*sa.abs_err);
      if (sb.abs_err) p->nmae_b.push_back(*sb.abs_err);
      if (sa.abs_err && sb.abs_err) {
        p->err_a.push_back(*sa.abs_err);
        p->err_b.push_back(*sb.abs_err);
      }
    }
    stratum_of_subgroup[sa.subgroup] = sa.stratum;
  }

  const fs::path dir = compare_dir(config, options.run_a, options.run_b, options.split);
  CsvBuffer boot({"level", "group", "metric", "n", "point_delta", "ci_lo", "ci_hi", "resamples", "level_pct", "seed"});
  CsvBuffer deltas({"level", "group", "metric", "value_a", "value_b", "delta", "improvement_rank", "ci_lo", "ci_hi"});
  std::vector<std::vector<std::string>> trows;

  auto ci = [&](const std::vector<double>& x, const std::vector<double>& y) -> std::optional<stats::BootstrapCI> {
    if (x.empty()) return std::nullopt;
    return stats::paired_bootstrap_ci(x, y, config.bootstrap_resamples, config.bootstrap_level, config.seed);
  };

  auto emit_level = [&](const std::string& level, const std::map<std::string, Paired>& groups, bool text) {
    std::map<std::string, double> acc_a, acc_b, nmae_a, nmae_b;
    for (const auto& [g, p] : groups) {
      acc_a[g] = mean(p.acc_a);
      acc_b[g] = mean(p.acc_b);
      if (!p.nmae_a.empty() && !p.nmae_b.empty()) {
        nmae_a[g] = mean(p.nmae_a);
        nmae_b[g] = mean(p.nmae_b);
      }
    }
    auto acc_rank = stats::improvement_ranks(acc_a, acc_b, true, 3);
    auto nmae_rank = stats::improvement_ranks(nmae_a, nmae_b, false, 3);
    for (const auto& [g, p] : groups) {
      auto acc_ci = ci(p.acc_a, p.acc_b);
      auto err_ci = ci(p.err_a, p.err_b);
      const auto& ar = acc_rank.at(g);
      io::Row arow{level, g, "accuracy", csv_num(acc_a[g]), csv_num(acc_b[g]), csv_num(ar.delta),
                   std::to_string(ar.rank), csv_num(acc_ci->lo), csv_num(acc_ci->hi)};
      deltas.row(arow);
      boot.row({level, g, "accuracy", std::to_string(p.acc_a.size()), csv_num(acc_ci->point_delta),
                csv_num(acc_ci->lo), csv_num(acc_ci->hi), std::to_string(acc_ci->resamples),
                io::fixed(acc_ci->level * 100, 1), std::to_string(acc_ci->seed)});
      std::string nd = "NA", nrank = "", nlo = "NA", nhi = "NA";
      if (nmae_rank.count(g)) {
        const auto& nr = nmae_rank.at(g);
        nd = csv_num(nr.delta);
        nrank = std::to_string(nr.rank);
      }
      if (err_ci) {
        nlo = csv_num(err_ci->lo);
        nhi = csv_num(err_ci->hi);
        boot.row({level, g, "nmae", std::to_string(p.err_a.size()), csv_num(err_ci->point_delta), nlo, nhi,
                  std::to_string(err_ci->resamples), io::fixed(err_ci->level * 100, 1), std::to_string(err_ci->seed)});
      }
      deltas.row({level, g, "nmae", nmae_a.count(g) ? csv_num(nmae_a[g]) : "NA",
                  nmae_b.count(g) ? csv_num(nmae_b[g]) : "NA", nd, nrank, nlo, nhi});
      if (text) {
        auto signed3 = [](double v) { return (v >= 0 ? "+" : "") + txt_num(v); };
        trows.push_back({g, txt_num(acc_a[g]), txt_num(acc_b[g]),
                         signed3(ar.delta) + (level == "overall" ? "" : " (" + std::to_string(ar.rank) + ")"),
                         "[" + txt_num(acc_ci->lo) + ", " + txt_num(acc_ci->hi) + "]",
                         nmae_a.count(g) ? txt_num(nmae_a[g]) : "NA", nmae_b.count(g) ? txt_num(nmae_b[g]) : "NA",
                         nmae_rank.count(g) ? signed3(nmae_rank.at(g).delta) +
                                                  (level == "overall" ? "" : " (" + nrank + ")")
                                            : "NA"});
      }
    }
  };
  emit_level("overall", {{"overall", overall}}, true);
  emit_level("stratum", by_stratum, true);
  emit_level("subgroup", by_subgroup, false);
  deltas.save(dir / "deltas.csv", result);
  boot.save(dir / "bootstrap.csv", result);

  // disparity before and after, per stratum
  std::map<std::string, std::vector<double>> acc_a, acc_b, nm_a, nm_b;
  for (const auto& [g, p] : by_subgroup) {
    const auto& st = stratum_of_subgroup[g];
    acc_a[st].push_back(mean(p.acc_a));
    acc_b[st].push_back(mean(p.acc_b));
    if (!p.nmae_a.empty() && !p.nmae_b.empty()) {
      nm_a[st].push_back(mean(p.nmae_a));
      nm_b[st].push_back(mean(p.nmae_b));
    }
  }
  auto multi = [](std::map<std::string, std::vector<double>> m) {
    for (auto it = m.begin(); it != m.end();) it = it->second.size() < 2 ? m.erase(it) : std::next(it);
    return m;
  };
  CsvBuffer disp({"metric", "stratum", "n_subgroups", "normalized_range_a", "normalized_range_b", "cv_a", "cv_b"});
  std::vector<std::vector<std::string>> drows;
  auto disparity_pair = [&](const std::string& metric, bool higher, const std::map<std::string, std::vector<double>>& x,
                            const std::map<std::string, std::vector<double>>& y) {
    auto mx = multi(x), my = multi(y);
    if (mx.empty()) return;
    auto ra = stats::stratum_disparity(mx, metric, higher, config.sd);
    auto rb = stats::stratum_disparity(my, metric, higher, config.sd);
    for (std::size_t i = 0; i < ra.strata.size(); ++i) {
      const auto& sa = ra.strata[i];
      const auto& sb = rb.strata[i];
      disp.row({metric, sa.stratum, std::to_string(sa.n_subgroups), csv_num(sa.normalized_range),
                csv_num(sb.normalized_range), csv_num(sa.cv), csv_num(sb.cv)});
    }
    disp.row({metric, "mean", "", csv_num(ra.mean_normalized_range), csv_num(rb.mean_normalized_range),
              csv_num(ra.mean_cv), csv_num(rb.mean_cv)});
    drows.push_back({metric, txt_num(ra.mean_normalized_range) + " -> " + txt_num(rb.mean_normalized_range),
                     txt_num(ra.mean_cv) + " -> " + txt_num(rb.mean_cv)});
  };
  disparity_pair("accuracy", true, acc_a, acc_b);
  disparity_pair("nmae", false, nm_a, nm_b);
  disp.save(dir / "disparity.csv", result);

  std::string text = "Comparison " + options.run_a + " -> " + options.run_b + " on " +
                     std::string(split_name(options.split)) + " (paired bootstrap, " +
                     std::to_string(config.bootstrap_resamples) + " resamples, " +
                     io::fixed(config.bootstrap_level * 100, 0) + "% interval, seed " + std::to_string(config.seed) +
                     "; ranks by improvement)\n\n";
  text += text_table({"Group", "Acc A", "Acc B", "Delta (rank)", "Acc CI", "NMAE A", "NMAE B", "Delta (rank)"}, trows);
  if (!drows.empty())
    text += "\nMean disparity across strata\n\n" + text_table({"Metric", "Normalized range", "CV"}, drows);
  save_text(dir / "summary.txt", text, result);

  const auto& o = trows.front();
  result.summary = "compare " + options.run_a + " -> " + options.run_b + ": accuracy " + o[1] + " -> " + o[2] +
                   ", NMAE " + o[5] + " -> " + o[6] + "\n";
  return result;
}

// ---- report

CommandResult cmd_report(const RunConfig& config, Split split, const std::string& baseline) {
  config.validate();
  CommandResult result;
  std::vector<std::vector<std::string>> rows;
  CsvBuffer csv({"model", "n_samples", "accuracy", "nmae", "refusal_rate", "baseline", "persona_wr", "value_wr",
                 "overall_wr"});
  const fs::path runs = config.output_dir / "runs";
  std::vector<std::string> models;
  if (fs::exists(runs))
    for (const auto& e : fs::directory_iterator(runs))
      if (fs::exists(e.path() / std::string(split_name(split)) / "numeric" / "overall.json"))
        models.push_back(e.path().filename().string());
  std::sort(models.begin(), models.end());
  if (models.empty()) throw Error(Errc::ConfigError, "no scored runs for split " + std::string(split_name(split)));

  for (const auto& m : models) {
    auto o = json::parse(io::read_file(run_dir(config, m, split, PromptKind::Numeric) / "overall.json"));
    std::string nmae = o["nmae"].is_null() ? "NA" : csv_num(o["nmae"].get<double>());
    std::array<std::string, 3> wr{"NA", "NA", "NA"};
    std::string against;
    if (!baseline.empty()) {
      auto path = judge_dir(config, m, baseline, split) / "win_rates.csv";
      if (fs::exists(path)) {
        against = baseline;
        for (const auto& row : io::read_delimited_file(path))
          if (!row.empty() && row[0] == "overall" && row.size() >= 7) wr = {row[4], row[5], row[6]};
      }
    }
    csv.row({m, std::to_string(o["n_samples"].get<int>()), csv_num(o["accuracy"].get<double>()), nmae,
             csv_num(o["refusal_rate"].get<double>()), against, wr[0], wr[1], wr[2]});
    auto short3 = [](const std::string& v) { return v == "NA" ? v : txt_num(std::stod(v)); };
    rows.push_back({m, short3(csv_num(o["accuracy"].get<double>())), short3(nmae),
                    short3(csv_num(o["refusal_rate"].get<double>())), short3(wr[0]), short3(wr[1]), short3(wr[2])});
  }
  const fs::path dir = config.output_dir / "report" / std::string(split_name(split));
  csv.save(dir / "main_table.csv", result);
  std::string text = "Results on " + std::string(split_name(split)) +
                     (baseline.empty() ? "" : " (win rates vs " + baseline + ")") + "\n\n" +
                     text_table({"Model", "Accuracy", "NMAE", "Refusals", "Persona WR", "Value WR", "Overall WR"}, rows);
  save_text(dir / "main_table.txt", text, result);
  result.summary = text;
  return result;
}

}  // namespace valuemap
