#pragma once

// Command-line surface: evaluate | calibrate | positional | confidence | correlate.
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keyscore/corpus.hpp"
#include "keyscore/embedding_http.hpp"
#include "keyscore/embeddings.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/evaluate.hpp"
#include "keyscore/report.hpp"

namespace keyscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

struct Options {
  std::string docs;
  std::string preds;
  std::string human;
  std::vector<std::string> metrics;
  std::vector<std::string> at;
  double threshold = 0.4;
  std::size_t bins = 10;
  std::string binning = "width";
  std::string embeddings;
  std::string embed_model;
  std::optional<double> rescale_baseline;
  std::string baselines;
  bool threshold_before_rescale = false;
  std::string out;
  std::string format = "json";
  std::size_t workers = 1;
  bool dedup_gold = false;
  bool logprobs = false;
  std::vector<std::string> delimiters;
  std::size_t positions = 5;
  double hist_lo = 1.0;
  double hist_hi = 5.0;
  double hist_width = 0.1;
  std::string soft_miss = "kmr";
};

namespace detail {

inline void add_shared(CLI::App* cmd, Options& o, bool needs_preds = true) {
  cmd->add_option("--docs", o.docs, "Documents JSONL")->required();
  auto* preds = cmd->add_option("--preds", o.preds, "Predictions JSONL");
  if (needs_preds) preds->required();
  cmd->add_option("--metric", o.metrics, "Score kernel(s): f1, kmr, embed (repeatable)")
      ->check(CLI::IsMember({"f1", "kmr", "embed"}));
  cmd->add_option("--at", o.at, "Selection(s): m or a positive K (repeatable)");
  cmd->add_option("--threshold", o.threshold, "Soft-score threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--bins", o.bins, "Calibration bins")->check(CLI::PositiveNumber);
  cmd->add_option("--binning", o.binning, "Calibration binning")->check(CLI::IsMember({"width", "mass"}));
  cmd->add_option("--embeddings", o.embeddings, "Embedding cache path or service URL");
  cmd->add_option("--embed-model", o.embed_model, "Embedding model id");
  cmd->add_option("--rescale-baseline", o.rescale_baseline, "Baseline b for (s-b)/(1-b) rescaling");
  cmd->add_option("--baselines", o.baselines, "JSON object mapping model id to rescale baseline");
  cmd->add_flag("--threshold-before-rescale", o.threshold_before_rescale, "Threshold raw embedding scores");
  cmd->add_option("--out", o.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv", "plotdata"}));
  cmd->add_option("--workers", o.workers, "Evaluation threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--dedup-gold", o.dedup_gold, "Also remove stemmed duplicates from gold sets");
  cmd->add_flag("--logprobs", o.logprobs, "Prediction probs are natural-log probabilities");
  cmd->add_option("--delimiters", o.delimiters, "Delimiter tokens (replaces the default set)");
  cmd->add_option("--positions", o.positions, "Token positions for probability box plots")->check(CLI::PositiveNumber);
  cmd->add_option("--hist-lo", o.hist_lo, "KPP histogram lower edge");
  cmd->add_option("--hist-hi", o.hist_hi, "KPP histogram upper edge (overflow above)");
  cmd->add_option("--hist-width", o.hist_width, "KPP histogram bin width");
  cmd->add_option("--soft-miss", o.soft_miss, "Kernel for soft positional misses")
      ->check(CLI::IsMember({"f1", "kmr", "embed"}));
}

inline Format parse_format(const std::string& f) {
  if (f == "csv") return Format::Csv;
  if (f == "plotdata") return Format::PlotData;
  return Format::Json;
}

inline Selection parse_selection(const std::string& s) {
  if (s == "m" || s == "M") return Selection::at_m();
  std::size_t pos = 0;
  long long k = 0;
  try {
    k = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ValidationError("--at expects m or a positive integer, got '" + s + "'");
  }
  if (pos != s.size() || k <= 0) throw ValidationError("--at expects m or a positive integer, got '" + s + "'");
  return Selection::at_k(static_cast<std::size_t>(k));
}

inline bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

struct Session {
  Options options;
  std::unique_ptr<EmbeddingProvider> provider;
  std::optional<double> baseline;

  ScoreFunction kernel(const std::string& name) const {
    if (name == "f1") return ScoreFunction::exact();
    if (name == "kmr") return ScoreFunction::kmr(options.threshold);
    ScoreFunction fn = ScoreFunction::embedding(options.threshold, baseline);
    fn.threshold_before_rescale = options.threshold_before_rescale;
    return fn;
  }
};

inline bool uses_embeddings(const Options& o, bool include_soft_miss) {
  for (const auto& m : o.metrics)
    if (m == "embed") return true;
  return include_soft_miss && o.soft_miss == "embed";
}

inline void open_embeddings(Session& s, bool include_soft_miss) {
  auto& o = s.options;
  if (!uses_embeddings(o, include_soft_miss)) return;
  std::string source = o.embeddings;
  if (const char* env = std::getenv("KEYSCORE_EMBED_URL"); env && *env && (source.empty() || is_url(source)))
    source = env;
  if (source.empty()) throw ValidationError("embedding kernel selected: pass --embeddings or set KEYSCORE_EMBED_URL");

  std::string model = o.embed_model;
  if (is_url(source)) {
    if (model.empty()) throw ValidationError("--embed-model is required with an embedding service");
    s.provider = std::make_unique<HttpEmbeddingProvider>(source, model);
  } else {
    auto cache = std::make_unique<CacheEmbeddingProvider>(CacheEmbeddingProvider::from_file(source, model));
    model = cache->model_id();
    s.provider = std::move(cache);
  }

  s.baseline = o.rescale_baseline;
  if (!s.baseline && !o.baselines.empty()) {
    auto in = keyscore::detail::open_input(o.baselines);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("'" + o.baselines + "' is not a JSON object");
    if (auto it = j.find(model); it != j.end()) {
      if (!it->is_number()) throw ValidationError("baseline for '" + model + "' is not a number");
      s.baseline = it->get<double>();
    }
  }
}

inline Corpus load(const Options& o) {
  LoadOptions lo;
  lo.log_probs = o.logprobs;
  if (!o.delimiters.empty()) lo.delimiters = {o.delimiters.begin(), o.delimiters.end()};
  if (o.preds.empty()) {
    auto in = keyscore::detail::open_input(o.docs);
    return Corpus(read_documents(in, o.docs), {});
  }
  return load_corpus(o.docs, o.preds, lo);
}

inline EvaluationOptions evaluation_options(const Session& s, std::vector<std::string> default_at) {
  const auto& o = s.options;
  EvaluationOptions eo;
  eo.workers = o.workers;
  eo.dedup_gold = o.dedup_gold;
  eo.soft_miss_kernel = s.kernel(o.soft_miss);
  eo.metrics.clear();
  const auto metrics = o.metrics.empty() ? std::vector<std::string>{"f1"} : o.metrics;
  const auto ats = o.at.empty() ? default_at : o.at;
  for (const auto& m : metrics)
    for (const auto& a : ats) eo.metrics.push_back(MetricConfig{s.kernel(m), parse_selection(a), true});
  return eo;
}

inline ReportOptions report_options(const Options& o) {
  ReportOptions ro;
  ro.calibration_bins = o.bins;
  ro.binning = o.binning == "mass" ? Binning::EqualMass : Binning::EqualWidth;
  ro.histogram = {o.hist_lo, o.hist_hi, o.hist_width};
  ro.n_positions = o.positions;
  return ro;
}

inline int run_evaluate(Session& s) {
  open_embeddings(s, true);
  const auto corpus = load(s.options);
  const auto eo = evaluation_options(s, {"m", "5"});
  const auto evals = evaluate_corpus(corpus, eo, s.provider.get());
  const auto report = build_report(evals, eo, report_options(s.options));
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  emit(report, parse_format(s.options.format), s.options.out);
  return kExitOk;
}

inline int run_calibrate(Session& s) {
  const auto corpus = load(s.options);
  auto eo = evaluation_options(s, {"m"});
  eo.metrics.clear();
  eo.soft_miss_kernel = ScoreFunction::exact();
  const auto evals = evaluate_corpus(corpus, eo);
  const auto ro = report_options(s.options);
  const auto summary = calibration_summary(evals, ro);
  if (!summary.all) throw ValidationError("calibration over zero keyphrases");
  switch (parse_format(s.options.format)) {
    case Format::Json: emit(render_json(to_json(summary)), s.options.out); break;
    case Format::Csv: emit(calibration_csv(summary), s.options.out); break;
    case Format::PlotData: emit(render_json(reliability_plotdata(summary)), s.options.out); break;
  }
  return kExitOk;
}

inline int run_positional(Session& s) {
  open_embeddings(s, true);
  const auto corpus = load(s.options);
  auto eo = evaluation_options(s, {"m"});
  eo.metrics.clear();
  const auto evals = evaluate_corpus(corpus, eo, s.provider.get());
  const auto report = positional_report(evals);
  switch (parse_format(s.options.format)) {
    case Format::Json: emit(render_json(to_json(report)), s.options.out); break;
    case Format::Csv: emit(positional_csv(report), s.options.out); break;
    case Format::PlotData: emit(render_json(positional_plotdata(report)), s.options.out); break;
  }
  return kExitOk;
}

inline int run_confidence(Session& s) {
  const auto corpus = load(s.options);
  auto eo = evaluation_options(s, {"m"});
  eo.metrics.clear();
  eo.soft_miss_kernel = ScoreFunction::exact();
  const auto evals = evaluate_corpus(corpus, eo);
  const auto summary = confidence_summary(evals, report_options(s.options));
  switch (parse_format(s.options.format)) {
    case Format::Json: emit(render_json(to_json(summary)), s.options.out); break;
    case Format::Csv: emit(confidence_csv(summary), s.options.out); break;
    case Format::PlotData: emit(render_json(confidence_plotdata(summary)), s.options.out); break;
  }
  return kExitOk;
}

inline int run_correlate(Session& s) {
  if (s.options.human.empty()) throw ValidationError("correlate needs --human");
  open_embeddings(s, false);
  const auto corpus = load(s.options);
  const auto human = load_human_scores(s.options.human);
  auto eo = evaluation_options(s, {"m"});
  eo.soft_miss_kernel = ScoreFunction::exact();
  const auto evals = evaluate_corpus(corpus, eo, s.provider.get());

  nlohmann::ordered_json results = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "metric,pearson_r,n,n_unpaired\n";
  nlohmann::ordered_json plot = nlohmann::ordered_json::object();
  std::map<std::string, double> human_by_id;
  for (const auto& h : human) human_by_id.emplace(h.doc_id, h.score);

  for (std::size_t m = 0; m < eo.metrics.size(); ++m) {
    const auto name = eo.metrics[m].name();
    std::map<std::string, double> scores;
    for (const auto& e : evals)
      if (e.metrics[m].all.defined) scores[e.doc_id] = e.metrics[m].all.f_score;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& [id, v] : scores)
      if (auto it = human_by_id.find(id); it != human_by_id.end()) pairs.push_back({v, it->second});
    plot[name] = pairs;
    try {
      const auto r = correlate(name, scores, human);
      results.push_back(to_json(r));
      csv << name << ',' << fixed4(r.pearson_r) << ',' << r.n << ',' << r.n_unpaired << '\n';
    } catch (const ValidationError& e) {
      results.push_back({{"metric", name}, {"pearson_r", nullptr}, {"error", e.what()}});
      csv << name << ",,,\n";
      std::cerr << "warning: " << name << ": " << e.what() << '\n';
    }
  }
  switch (parse_format(s.options.format)) {
    case Format::Json:
      emit(render_json({{"n_human", human.size()}, {"correlations", results}}), s.options.out);
      break;
    case Format::Csv: emit(csv.str(), s.options.out); break;
    case Format::PlotData: emit(render_json(plot), s.options.out); break;
  }
  return kExitOk;
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"keyscore: keyphrase-generation evaluation toolkit"};
  app.require_subcommand(1);
  Options options;

  auto* evaluate = app.add_subcommand("evaluate", "Exact and soft-match F scores, split by presence");
  auto* calibrate = app.add_subcommand("calibrate", "Keyphrase-level ECE and reliability data");
  auto* positional = app.add_subcommand("positional", "Gold positions by document section and miss rates");
  auto* confidence = app.add_subcommand("confidence", "KPP histograms and per-position token probabilities");
  auto* correlate = app.add_subcommand("correlate", "Pearson correlation of metrics with human scores");
  for (auto* cmd : {evaluate, calibrate, positional, confidence}) detail::add_shared(cmd, options);
  detail::add_shared(correlate, options);
  correlate->add_option("--human", options.human, "Human scores JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  detail::Session session{options, nullptr, std::nullopt};
  try {
    if (*evaluate) return detail::run_evaluate(session);
    if (*calibrate) return detail::run_calibrate(session);
    if (*positional) return detail::run_positional(session);
    if (*confidence) return detail::run_confidence(session);
    if (*correlate) return detail::run_correlate(session);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace keyscore::cli
