#include "causalft/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "causalft/error.hpp"
#include "causalft/seeds.hpp"
#include "causalft/stats.hpp"

namespace causalft {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::Causal: return "causal";
    case Selector::Correlation: return "correlation";
    case Selector::None: return "none";
  }
  return "none";
}

Selector selector_from_string(std::string_view name) {
  if (name == "causal") return Selector::Causal;
  if (name == "correlation") return Selector::Correlation;
  if (name == "none") return Selector::None;
  throw Error(ErrorCode::ConfigInvalid, "unknown selector '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::ConfigInvalid, why); };
  if (dataset.empty()) bad("dataset path missing");
  if (schema.empty()) bad("schema path missing");
  if (models.empty()) bad("at least one model is required");
  if (generators.empty()) bad("at least one generator is required");
  if (runs < 1) bad("runs must be at least 1");
  if (!(k_percent > 0 && k_percent <= 100)) bad("k_percent must lie in (0, 100]");
  if (!(train_fraction > 0 && train_fraction < 1)) bad("train_fraction must lie in (0, 1)");
  if (m < 1) bad("m must be at least 1");
  if (bootstrap_repeats < 1) bad("bootstrap_repeats must be at least 1");
  if (workers < 1) bad("workers must be at least 1");
  if (retest_runs < 1) bad("retest_runs must be at least 1");
  std::vector<std::string> names;
  for (const auto& m : models) {
    if (m.name.empty()) bad("model name missing");
    m.config.validate();
    names.push_back(m.name);
  }
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) bad("duplicate model name");
  std::vector<std::string> kinds;
  for (const auto& g : generators) {
    g.validate();
    kinds.emplace_back(to_string(g.kind));
  }
  std::sort(kinds.begin(), kinds.end());
  if (std::adjacent_find(kinds.begin(), kinds.end()) != kinds.end()) bad("duplicate generator kind");
}

json to_json(const ExperimentConfig& c) {
  json models = json::array();
  for (const auto& m : c.models) {
    json doc = to_json(m.config);
    doc["name"] = m.name;
    models.push_back(doc);
  }
  json generators = json::array();
  for (const auto& g : c.generators) generators.push_back(to_json(g));
  json rules = json::object();
  for (const auto& [feature, rule] : c.group_rules) rules[feature] = to_json(rule);
  return {{"dataset", c.dataset.generic_string()},
          {"schema", c.schema.generic_string()},
          {"sensitive", c.sensitive},
          {"models", models},
          {"generators", generators},
          {"selector", std::string(to_string(c.selector))},
          {"budget", c.budget},
          {"runs", c.runs},
          {"k_percent", c.k_percent},
          {"m", c.m},
          {"bootstrap_repeats", c.bootstrap_repeats},
          {"train_fraction", c.train_fraction},
          {"seed", c.seed},
          {"output_dir", c.output_dir.generic_string()},
          {"workers", c.workers},
          {"group_rules", rules},
          {"retrain", c.retrain},
          {"retest_runs", c.retest_runs}};
}

ExperimentConfig experiment_config_from_json(const json& doc, const fs::path& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    c.dataset = resolve(doc.at("dataset").get<std::string>());
    c.schema = resolve(doc.at("schema").get<std::string>());
    c.sensitive = doc.value("sensitive", c.sensitive);
    if (doc.contains("models")) {
      c.models.clear();
      for (const auto& m : doc.at("models")) {
        NamedModel nm;
        if (m.is_string()) {
          nm.config = model_config_from_json(json{{"preset", m.get<std::string>()}});
          nm.name = m.get<std::string>();
        } else {
          nm.config = model_config_from_json(m);
          nm.name = m.value("name", m.value("preset", std::string(nm.config.kind == ModelKind::Mlp ? "mlp" : "logistic")));
        }
        c.models.push_back(std::move(nm));
      }
    }
    if (doc.contains("generators")) {
      c.generators.clear();
      for (const auto& g : doc.at("generators")) c.generators.push_back(generator_spec_from_json(g));
    }
    if (doc.contains("selector")) c.selector = selector_from_string(doc.at("selector").get<std::string>());
    c.budget = doc.value("budget", c.budget);
    c.runs = doc.value("runs", c.runs);
    c.k_percent = doc.value("k_percent", c.k_percent);
    c.m = doc.value("m", c.m);
    c.bootstrap_repeats = doc.value("bootstrap_repeats", c.bootstrap_repeats);
    c.train_fraction = doc.value("train_fraction", c.train_fraction);
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    c.workers = doc.value("workers", c.workers);
    if (doc.contains("group_rules")) {
      for (const auto& [feature, rule] : doc.at("group_rules").items()) {
        json r = rule;
        if (!r.contains("feature")) r["feature"] = feature;
        c.group_rules[feature] = group_rule_from_json(r);
      }
    }
    c.retrain = doc.value("retrain", c.retrain);
    c.retest_runs = doc.value("retest_runs", c.retest_runs);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IOError, "write failed for " + path.string());
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_json(path), path.parent_path());
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::size_t run) {
  return mix_seed(mix_seed(base, hash_key(key)), run);
}

// ---------------------------------------------------------------- analysis

RunAnalysis analyze_run(const Dataset& train, const std::vector<std::string>& sensitive,
                        const ExperimentConfig& config, std::uint64_t seed) {
  if (sensitive.empty()) throw Error(ErrorCode::InvalidArgument, "no sensitive feature to analyse");
  const auto& schema = train.schema();
  RunAnalysis out;
  out.graph = discover_graph(train, sensitive.front(), seed, config.k_percent / 100.0);
  const auto& protected_names = schema.sensitive_features;
  const std::size_t m = std::min(config.m, train.n_rows());
  for (const auto& s : sensitive) {
    FeatureAnalysis fa;
    fa.sensitive = s;
    for (auto& f : direct_features(out.graph, s, schema.label_name)) {
      if (std::find(protected_names.begin(), protected_names.end(), f) != protected_names.end()) continue;
      fa.direct.push_back(std::move(f));
    }
    for (std::size_t i = 0; i < fa.direct.size(); ++i) {
      fa.effects.push_back(bootstrap_effect(out.graph, train, s, fa.direct[i], m, config.bootstrap_repeats,
                                            mix_seed(seed, i + 1)));
    }
    if (!fa.effects.empty()) fa.causal_feature = select_causal_feature(fa.effects, schema.feature_names);
    fa.correlation_feature = select_correlation_feature(train, s);
    out.features.push_back(std::move(fa));
  }
  return out;
}

json to_json(const RunAnalysis& a) {
  json edges = json::array();
  for (std::size_t to = 0; to < a.graph.size(); ++to) {
    for (std::size_t from = 0; from < a.graph.size(); ++from) {
      if (a.graph.has_edge(from, to)) {
        edges.push_back({{"from", a.graph.nodes[from]},
                         {"to", a.graph.nodes[to]},
                         {"weight", a.graph.coefficient(from, to)}});
      }
    }
  }
  json features = json::array();
  for (const auto& f : a.features) {
    json effects = json::array();
    for (const auto& e : f.effects) {
      effects.push_back({{"feature", e.feature}, {"effect", e.effect}, {"repeats", e.raw_repeats}});
    }
    features.push_back({{"sensitive", f.sensitive},
                        {"direct", f.direct},
                        {"effects", effects},
                        {"causal_feature", f.causal_feature ? json(*f.causal_feature) : json(nullptr)},
                        {"correlation_feature", f.correlation_feature}});
  }
  return {{"nodes", a.graph.nodes}, {"edges", edges}, {"features", features}};
}

// ---------------------------------------------------------------- execution

std::string CaseResult::key() const {
  return dataset + "/" + sensitive + "/" + model + "/" + generator + "/" + mode;
}

namespace {

std::string mode_name(Selector s) {
  switch (s) {
    case Selector::Causal: return "causalft";
    case Selector::Correlation: return "correlation";
    case Selector::None: return "base";
  }
  return "base";
}

struct Loaded {
  Dataset data;
  std::vector<std::string> sensitive;
  std::string name;
};

Loaded load_inputs(const ExperimentConfig& config) {
  Loaded l;
  const Schema schema = load_schema(config.schema);
  l.data = load_csv(config.dataset, schema);
  l.sensitive = config.sensitive.empty() ? schema.sensitive_features : config.sensitive;
  if (l.sensitive.empty()) throw Error(ErrorCode::ConfigInvalid, "no sensitive feature configured");
  for (const auto& s : l.sensitive) schema.require_index(s);
  l.name = config.dataset.stem().string();
  return l;
}

// Everything one bootstrap run produces, indexed like the case list.
struct RunOutput {
  std::vector<RunRecord> records;
  std::vector<std::optional<RetrainResult>> retrains;
  Timing timing;
};

struct CasePlan {
  std::size_t sensitive;  // index into Loaded::sensitive
  std::size_t model;
  std::size_t generator;
  bool causal_mode;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunOutput execute_run(const ExperimentConfig& config, const Loaded& in, const std::vector<CasePlan>& plan,
                      std::size_t run) {
  RunOutput out;
  out.records.resize(plan.size());
  out.retrains.resize(plan.size());
  out.timing.label = in.name + "/run" + std::to_string(run);
  const auto& schema = in.data.schema();

  const auto split = split_train_test(in.data, config.train_fraction, derive_seed(config.seed, in.name + "/split", run));

  auto t0 = Clock::now();
  std::optional<RunAnalysis> analysis;
  std::optional<std::string> analysis_error;
  if (config.selector != Selector::None) {
    try {
      analysis = analyze_run(split.train, in.sensitive, config, derive_seed(config.seed, in.name + "/analysis", run));
    } catch (const Error& e) {
      analysis_error = e.what();
      spdlog::error("{} run {}: causal analysis failed: {}", in.name, run, e.what());
    }
  }
  out.timing.analysis_seconds = seconds_since(t0);

  std::vector<std::optional<Model>> models(config.models.size());
  std::vector<std::string> model_errors(config.models.size());
  for (std::size_t i = 0; i < config.models.size(); ++i) {
    ModelConfig mc = config.models[i].config;
    mc.seed = derive_seed(config.seed, in.name + "/" + config.models[i].name, run);
    try {
      models[i] = train(split.train, mc);
    } catch (const Error& e) {
      model_errors[i] = e.what();
    }
  }

  t0 = Clock::now();
  for (std::size_t c = 0; c < plan.size(); ++c) {
    const auto& p = plan[c];
    const std::string& s_name = in.sensitive[p.sensitive];
    const auto& spec = config.generators[p.generator];
    const std::string case_key = in.name + "/" + s_name + "/" + config.models[p.model].name + "/" +
                                 std::string(to_string(spec.kind));
    RunRecord& rec = out.records[c];
    try {
      if (!models[p.model]) throw Error(ErrorCode::InvalidArgument, "model training failed: " + model_errors[p.model]);
      const Model& model = *models[p.model];
      const std::size_t s = schema.require_index(s_name);
      // both arms of a case share the run seed
      const std::uint64_t seed = derive_seed(config.seed, case_key, run);
      const GroupRule rule = config.group_rules.count(s_name) ? config.group_rules.at(s_name)
                                                              : default_group_rule(in.data, s_name);
      TestSuite suite;
      if (!p.causal_mode) {
        suite = run_base_generator(spec, model, split.test, s, config.budget, seed);
      } else {
        if (!analysis) throw Error(ErrorCode::InvalidArgument, "no causal analysis: " + analysis_error.value_or("?"));
        const auto& fa = analysis->features[p.sensitive];
        std::optional<std::string> chosen =
            config.selector == Selector::Causal ? fa.causal_feature : std::optional(fa.correlation_feature);
        if (chosen) {
          rec.causal_feature = chosen;
          suite = run_causalft(spec, model, split.test, s, schema.require_index(*chosen), config.budget, seed);
        } else {
          spdlog::warn("{} run {}: no direct feature for {}, using the base generator", case_key, run, s_name);
          suite = run_base_generator(spec, model, split.test, s, config.budget, seed);
          suite.fell_back_to_base = true;
        }
      }
      rec.fell_back = suite.fell_back_to_base;
      rec.budget_reached = suite.budget_reached;
      rec.ledger = suite.ledger;
      if (suite.unique_samples.empty()) {
        rec.fairness = FairnessReport{};
      } else {
        rec.fairness = evaluate_fairness(suite, model, schema, rule);
      }
      if (config.retrain && p.causal_mode && rec.causal_feature) {
        RetrainRequest req;
        req.model_config = config.models[p.model].config;
        req.sensitive = s;
        req.causal = schema.require_index(*rec.causal_feature);
        req.spec = spec;
        req.group_rule = rule;
        req.budget = config.budget;
        req.runs = config.retest_runs;
        req.seed = derive_seed(config.seed, case_key + "/retrain", run);
        out.retrains[c] = retrain_and_retest(req, model, split.train, correct_pairs(suite, model, split.test), split.test);
      }
    } catch (const Error& e) {
      rec.error = e.what();
      spdlog::error("{} run {}: {}", case_key, run, e.what());
    }
  }
  out.timing.generation_seconds = seconds_since(t0);
  return out;
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Loaded in = load_inputs(config);

  ExperimentResults results;
  results.config = config;
  std::vector<CasePlan> plan;
  for (std::size_t s = 0; s < in.sensitive.size(); ++s) {
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      for (std::size_t g = 0; g < config.generators.size(); ++g) {
        plan.push_back({s, m, g, false});
        if (config.selector != Selector::None) plan.push_back({s, m, g, true});
      }
    }
  }

  std::vector<RunOutput> outputs(config.runs);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t r = next++; r < config.runs; r = next++) {
      try {
        outputs[r] = execute_run(config, in, plan, r);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(config.workers, config.runs);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t c = 0; c < plan.size(); ++c) {
    const auto& p = plan[c];
    CaseResult cr;
    cr.dataset = in.name;
    cr.sensitive = in.sensitive[p.sensitive];
    cr.model = config.models[p.model].name;
    cr.generator = std::string(to_string(config.generators[p.generator].kind));
    cr.mode = p.causal_mode ? mode_name(config.selector) : "base";
    for (const auto& o : outputs) cr.runs.push_back(o.records[c]);
    results.cases.push_back(std::move(cr));
    if (config.retrain && p.causal_mode) {
      RetrainRecord rr{in.name, in.sensitive[p.sensitive], config.models[p.model].name,
                       std::string(to_string(config.generators[p.generator].kind)), {}};
      for (const auto& o : outputs) {
        if (o.retrains[c]) rr.runs.push_back(*o.retrains[c]);
      }
      results.retrain.push_back(std::move(rr));
    }
  }
  for (const auto& o : outputs) results.timings.push_back(o.timing);
  return results;
}

// ---------------------------------------------------------------- reporting

namespace {

json summary(const std::vector<std::optional<double>>& values) {
  std::vector<double> v;
  json all = json::array();
  for (const auto& x : values) {
    all.push_back(x ? json(*x) : json(nullptr));
    if (x) v.push_back(*x);
  }
  json out{{"values", all}};
  if (v.empty()) {
    out["mean"] = nullptr;
    out["stddev"] = nullptr;
    return out;
  }
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  out["mean"] = mean;
  out["stddev"] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return out;
}

std::vector<double> present(const json& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    if (!v.is_null()) out.push_back(v.get<double>());
  }
  return out;
}

json compare_metric(const json& a, const json& b) {
  const auto va = present(a), vb = present(b);
  try {
    return to_json(compare(va, vb));
  } catch (const Error& e) {
    return json{{"error", e.what()}};
  }
}

const char* const kMetrics[] = {"idi_ratio", "eod", "spd"};

}  // namespace

json build_report(const ExperimentResults& results) {
  json cases = json::object();
  for (const auto& c : results.cases) {
    std::vector<std::optional<double>> idi, eod_v, spd_v;
    PairLedger total;
    json features = json::array();
    json errors = json::array();
    std::size_t fell_back = 0, short_runs = 0;
    for (const auto& r : c.runs) {
      if (r.error) {
        errors.push_back(*r.error);
        idi.emplace_back();
        eod_v.emplace_back();
        spd_v.emplace_back();
        features.push_back(nullptr);
        continue;
      }
      idi.emplace_back(r.fairness.sample_count ? std::optional(r.fairness.idi_ratio) : std::nullopt);
      eod_v.push_back(r.fairness.eod);
      spd_v.push_back(r.fairness.spd);
      total += r.ledger;
      features.push_back(r.causal_feature ? json(*r.causal_feature) : json(nullptr));
      fell_back += r.fell_back;
      short_runs += !r.budget_reached;
    }
    cases[c.key()] = {{"dataset", c.dataset},
                      {"sensitive", c.sensitive},
                      {"model", c.model},
                      {"generator", c.generator},
                      {"mode", c.mode},
                      {"runs", c.runs.size()},
                      {"idi_ratio", summary(idi)},
                      {"eod", summary(eod_v)},
                      {"spd", summary(spd_v)},
                      {"ledger", to_json(total)},
                      {"causal_feature", features},
                      {"fell_back_runs", fell_back},
                      {"budget_unreached_runs", short_runs},
                      {"errors", errors}};
  }

  json comparisons = json::object();
  for (const auto& c : results.cases) {
    if (c.mode == "base") continue;
    const std::string base_key = c.dataset + "/" + c.sensitive + "/" + c.model + "/" + c.generator + "/base";
    if (!cases.contains(base_key)) continue;
    json cmp{{"mode", c.mode}, {"against", "base"}};
    for (const char* metric : kMetrics) {
      cmp[metric] = compare_metric(cases[c.key()][metric]["values"], cases[base_key][metric]["values"]);
    }
    comparisons[c.dataset + "/" + c.sensitive + "/" + c.model + "/" + c.generator] = cmp;
  }

  json retrain = json::object();
  for (const auto& r : results.retrain) {
    json runs = json::array();
    std::vector<std::optional<double>> before, after;
    for (const auto& rr : r.runs) {
      runs.push_back(to_json(rr));
      double b = 0, a = 0;
      for (const auto& x : rr.before) b += x.idi_ratio;
      for (const auto& x : rr.after) a += x.idi_ratio;
      before.emplace_back(b / static_cast<double>(rr.before.size()));
      after.emplace_back(a / static_cast<double>(rr.after.size()));
    }
    retrain[r.dataset + "/" + r.sensitive + "/" + r.model + "/" + r.generator] = {
        {"idi_ratio_before", summary(before)}, {"idi_ratio_after", summary(after)}, {"runs", runs}};
  }

  // output location and worker count do not affect results
  json config = to_json(results.config);
  config.erase("output_dir");
  config.erase("workers");
  return {{"schema_version", kReportSchemaVersion},
          {"config", config},
          {"cases", cases},
          {"comparisons", comparisons},
          {"retrain", retrain}};
}

json build_timings(const ExperimentResults& results) {
  json runs = json::array();
  for (const auto& t : results.timings) {
    runs.push_back({{"label", t.label},
                    {"analysis_seconds", t.analysis_seconds},
                    {"generation_seconds", t.generation_seconds}});
  }
  return {{"schema_version", kReportSchemaVersion}, {"runs", runs}};
}

std::string report_csv(const json& report) {
  std::ostringstream out;
  out << "dataset,sensitive,model,generator,mode,runs";
  for (const char* metric : kMetrics) out << ',' << metric << "_mean," << metric << "_stddev";
  out << ",pairs_without_relaxation,pairs_with_relaxation,invalid_pairs,repaired_pairs,failed_samples\n";
  auto cell = [](const json& v) { return v.is_null() ? std::string() : v.dump(); };
  for (const auto& [key, c] : report.at("cases").items()) {
    out << c.at("dataset").get<std::string>() << ',' << c.at("sensitive").get<std::string>() << ','
        << c.at("model").get<std::string>() << ',' << c.at("generator").get<std::string>() << ','
        << c.at("mode").get<std::string>() << ',' << c.at("runs").dump();
    for (const char* metric : kMetrics) {
      out << ',' << cell(c.at(metric).at("mean")) << ',' << cell(c.at(metric).at("stddev"));
    }
    const auto& l = c.at("ledger");
    for (const char* field : {"pairs_without_relaxation", "pairs_with_relaxation", "invalid_pairs",
                              "repaired_pairs", "failed_samples"}) {
      out << ',' << l.at(field).dump();
    }
    out << '\n';
  }
  return out.str();
}

void emit_report(const json& report, const fs::path& dir) {
  if (!report.contains("cases") || report.at("cases").empty()) {
    throw Error(ErrorCode::InvalidArgument, "report has no completed case");
  }
  fs::create_directories(dir);
  write_json(report, dir / "report.json");
  std::ofstream csv(dir / "report.csv", std::ios::binary);
  if (!csv) throw Error(ErrorCode::IOError, "cannot write " + (dir / "report.csv").string());
  csv << report_csv(report);
  if (!csv) throw Error(ErrorCode::IOError, "write failed for report.csv");
}

json compare_reports(const json& a, const json& b) {
  json out = json::object();
  for (const auto& [key, ca] : a.at("cases").items()) {
    if (!b.at("cases").contains(key)) continue;
    const auto& cb = b.at("cases").at(key);
    json cmp = json::object();
    for (const char* metric : kMetrics) {
      cmp[metric] = compare_metric(ca.at(metric).at("values"), cb.at(metric).at("values"));
    }
    out[key] = cmp;
  }
  return out;
}

}  // namespace causalft
