#pragma once

// Corpus-level macro averages, correlation with human judgments and report
// rendering (JSON at full precision; CSV and tables at 4 decimals).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "keyscore/calibration.hpp"
#include "keyscore/confidence.hpp"
#include "keyscore/corpus.hpp"
#include "keyscore/errors.hpp"
#include "keyscore/evaluate.hpp"
#include "keyscore/positional.hpp"
#include "keyscore/softkeyscore.hpp"

namespace keyscore {

struct MacroAverage {
  double p_score = 0.0;
  double r_score = 0.0;
  double f_score = 0.0;
  std::size_t n_defined = 0;
  std::size_t n_excluded = 0;
};

/// Arithmetic mean over documents with defined results; nullopt when none is
/// defined.
inline std::optional<MacroAverage> aggregate(std::span<const MetricResult> per_doc) {
  MacroAverage m;
  for (const auto& r : per_doc) {
    if (!r.defined) {
      ++m.n_excluded;
      continue;
    }
    ++m.n_defined;
    m.p_score += r.p_score;
    m.r_score += r.r_score;
    m.f_score += r.f_score;
  }
  if (m.n_defined == 0) return std::nullopt;
  const double n = static_cast<double>(m.n_defined);
  m.p_score /= n;
  m.r_score /= n;
  m.f_score /= n;
  return m;
}

struct MetricSummary {
  std::string name;
  std::optional<MacroAverage> all;
  std::optional<MacroAverage> present;
  std::optional<MacroAverage> absent;
};

struct CalibrationSummary {
  std::optional<CalibrationReport> all;
  std::optional<CalibrationReport> present;
  std::optional<CalibrationReport> absent;
};

struct ConfidenceSummary {
  KppHistogram all;
  KppHistogram present;
  KppHistogram absent;
  PositionStatsResult positions_all;
  PositionStatsResult positions_present;
  PositionStatsResult positions_absent;
};

struct ReportOptions {
  std::size_t calibration_bins = 10;
  Binning binning = Binning::EqualWidth;
  HistogramConfig histogram;
  std::size_t n_positions = 5;
};

struct CorpusReport {
  std::size_t n_docs = 0;
  std::size_t n_keyphrases = 0;
  std::size_t n_unnormalizable = 0;
  std::size_t n_duplicates = 0;
  std::vector<MetricSummary> metrics;
  CalibrationSummary calibration;
  PositionalReport positional;
  ConfidenceSummary confidence;
  std::vector<std::string> warnings;
};

inline CalibrationSummary calibration_summary(std::span<const DocumentEvaluation> evals, const ReportOptions& options,
                                              std::vector<std::string>* warnings = nullptr) {
  CalibrationSummary s;
  const auto run = [&](PresenceFilter f) -> std::optional<CalibrationReport> {
    const auto samples = collect_calibration(evals, f);
    if (samples.empty()) {
      if (warnings) warnings->push_back(std::string("no ") + to_string(f) + " keyphrases to calibrate");
      return std::nullopt;
    }
    return calibrate(samples, options.calibration_bins, options.binning);
  };
  s.all = run(PresenceFilter::All);
  s.present = run(PresenceFilter::Present);
  s.absent = run(PresenceFilter::Absent);
  return s;
}

inline ConfidenceSummary confidence_summary(std::span<const DocumentEvaluation> evals, const ReportOptions& options) {
  const auto kps = collect_keyphrases(evals);
  ConfidenceSummary s;
  s.all = kpp_histogram(kps, PresenceFilter::All, options.histogram);
  s.present = kpp_histogram(kps, PresenceFilter::Present, options.histogram);
  s.absent = kpp_histogram(kps, PresenceFilter::Absent, options.histogram);
  s.positions_all = position_stats(kps, options.n_positions, PresenceFilter::All);
  s.positions_present = position_stats(kps, options.n_positions, PresenceFilter::Present);
  s.positions_absent = position_stats(kps, options.n_positions, PresenceFilter::Absent);
  return s;
}

inline CorpusReport build_report(std::span<const DocumentEvaluation> evals, const EvaluationOptions& eval_options,
                                 const ReportOptions& options = {}) {
  if (evals.empty()) throw ValidationError("report over an empty corpus");
  CorpusReport r;
  r.n_docs = evals.size();
  for (const auto& e : evals) {
    r.n_keyphrases += e.keyphrases.size();
    r.n_unnormalizable += e.n_unnormalizable;
    r.n_duplicates += e.n_duplicates;
  }
  for (std::size_t m = 0; m < eval_options.metrics.size(); ++m) {
    MetricSummary s;
    s.name = eval_options.metrics[m].name();
    std::vector<MetricResult> all, present, absent;
    for (const auto& e : evals) {
      all.push_back(e.metrics[m].all);
      present.push_back(e.metrics[m].present);
      absent.push_back(e.metrics[m].absent);
    }
    s.all = aggregate(all);
    s.present = aggregate(present);
    s.absent = aggregate(absent);
    for (auto [avg, split] : {std::pair{&s.all, "all"}, std::pair{&s.present, "present"}, std::pair{&s.absent, "absent"}})
      if (!*avg) r.warnings.push_back(s.name + " (" + split + "): no document with a non-empty gold set; omitted");
    r.metrics.push_back(std::move(s));
  }
  r.calibration = calibration_summary(evals, options, &r.warnings);
  r.positional = positional_report(evals);
  r.confidence = confidence_summary(evals, options);
  return r;
}

// --- correlation -------------------------------------------------------------

struct CorrelationResult {
  std::string metric;
  double pearson_r = 0.0;
  std::size_t n = 0;
  std::size_t n_unpaired = 0;
};

/// Sample Pearson correlation. Throws on fewer than two points, on length
/// mismatch or when either series is constant.
inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y, std::string metric = {}) {
  if (x.size() != y.size()) throw ValidationError("pearson: series lengths differ");
  if (x.size() < 2) throw ValidationError("pearson: need at least two paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: correlation undefined for a constant series");
  CorrelationResult r;
  r.metric = std::move(metric);
  r.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  r.n = x.size();
  return r;
}

/// Joins per-document metric values with human scores by doc_id (sorted by
/// doc_id) and correlates them. Ids present on only one side are dropped
/// and counted.
inline CorrelationResult correlate(const std::string& metric, const std::map<std::string, double>& metric_scores,
                                   std::span<const HumanScoreRecord> human) {
  std::map<std::string, double> human_by_id;
  for (const auto& h : human) human_by_id.emplace(h.doc_id, h.score);
  std::vector<double> x, y;
  std::size_t unpaired = 0;
  for (const auto& [id, v] : metric_scores) {
    auto it = human_by_id.find(id);
    if (it == human_by_id.end()) {
      ++unpaired;
      continue;
    }
    x.push_back(v);
    y.push_back(it->second);
  }
  for (const auto& [id, _] : human_by_id)
    if (!metric_scores.count(id)) ++unpaired;
  auto r = pearson(x, y, metric);
  r.n_unpaired = unpaired;
  return r;
}

// --- rendering ---------------------------------------------------------------

enum class Format { Json, Csv, PlotData };

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

namespace detail {

using nlohmann::ordered_json;

template <class T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const MacroAverage& m) {
  return {{"p", m.p_score}, {"r", m.r_score}, {"f", m.f_score}, {"n_defined", m.n_defined}, {"n_excluded", m.n_excluded}};
}

inline nlohmann::ordered_json to_json(const std::optional<MacroAverage>& m) {
  return m ? to_json(*m) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const CalibrationReport& r) {
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"mean_conf", b.mean_confidence}, {"acc", b.accuracy}});
  return {{"k", r.k}, {"ece_percent", r.ece_percent}, {"ece", r.ece}, {"n", r.n}, {"bins", bins}};
}

inline nlohmann::ordered_json to_json(const std::optional<CalibrationReport>& r) {
  return r ? to_json(*r) : nlohmann::ordered_json(nullptr);
}

inline nlohmann::ordered_json to_json(const CalibrationSummary& s) {
  // Pooled report at the top level, presence splits alongside.
  auto j = s.all ? to_json(*s.all) : nlohmann::ordered_json::object();
  j["present"] = to_json(s.present);
  j["absent"] = to_json(s.absent);
  return j;
}

inline nlohmann::ordered_json to_json(const PositionalReport& r) {
  nlohmann::ordered_json miss = nlohmann::ordered_json::array();
  nlohmann::ordered_json soft = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kSections; ++i) {
    miss.push_back(detail::optional_json(r.miss_percent[i]));
    soft.push_back(detail::optional_json(r.soft_miss_percent[i]));
  }
  return {{"gold_counts", r.gold_counts}, {"miss_percent", miss}, {"missed", r.missed}, {"soft_miss_percent", soft}};
}

inline nlohmann::ordered_json to_json(const KppHistogram& h) {
  return {{"edges", h.edges},
          {"counts", h.counts},
          {"overflow", h.overflow},
          {"n", h.n},
          {"median", detail::optional_json(h.median)},
          {"empty", h.empty()}};
}

inline nlohmann::ordered_json to_json(const PositionStatsResult& p) {
  nlohmann::ordered_json positions = nlohmann::ordered_json::array();
  for (const auto& s : p.positions)
    positions.push_back({{"position", s.position},
                         {"count", s.count},
                         {"q1", s.q1},
                         {"median", s.median},
                         {"q3", s.q3},
                         {"whisker_low", s.whisker_low},
                         {"whisker_high", s.whisker_high}});
  return {{"positions", positions}, {"omitted", p.omitted}};
}

inline nlohmann::ordered_json to_json(const ConfidenceSummary& c) {
  return {{"histogram", {{"all", to_json(c.all)}, {"present", to_json(c.present)}, {"absent", to_json(c.absent)}}},
          {"positions",
           {{"all", to_json(c.positions_all)},
            {"present", to_json(c.positions_present)},
            {"absent", to_json(c.positions_absent)}}}};
}

inline nlohmann::ordered_json metrics_json(const std::vector<MetricSummary>& metrics) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& m : metrics)
    j[m.name] = {{"present", to_json(m.present)}, {"absent", to_json(m.absent)}, {"all", to_json(m.all)}};
  return j;
}

inline nlohmann::ordered_json to_json(const CorpusReport& r) {
  return {{"n_docs", r.n_docs},
          {"n_keyphrases", r.n_keyphrases},
          {"n_unnormalizable", r.n_unnormalizable},
          {"n_duplicates_removed", r.n_duplicates},
          {"metrics", metrics_json(r.metrics)},
          {"calibration", to_json(r.calibration)},
          {"positional", to_json(r.positional)},
          {"confidence", to_json(r.confidence)},
          {"warnings", r.warnings}};
}

inline nlohmann::ordered_json to_json(const CorrelationResult& c) {
  return {{"metric", c.metric}, {"pearson_r", c.pearson_r}, {"n", c.n}, {"n_unpaired", c.n_unpaired}};
}

/// Table-shaped CSV: header row, then one row per metric with present,
/// absent and pooled P/R/F. Undefined cells are left empty.
inline std::string metrics_csv(const std::vector<MetricSummary>& metrics) {
  std::ostringstream os;
  os << "metric,present_p,present_r,present_f,absent_p,absent_r,absent_f,all_p,all_r,all_f\n";
  const auto cells = [&](const std::optional<MacroAverage>& m) {
    if (m)
      os << ',' << fixed4(m->p_score) << ',' << fixed4(m->r_score) << ',' << fixed4(m->f_score);
    else
      os << ",,,";
  };
  for (const auto& m : metrics) {
    os << m.name;
    cells(m.present);
    cells(m.absent);
    cells(m.all);
    os << '\n';
  }
  return os.str();
}

inline std::string calibration_csv(const CalibrationSummary& s) {
  std::ostringstream os;
  os << "split,bin,lo,hi,count,mean_conf,acc\n";
  for (auto [report, split] : {std::pair{&s.all, "all"}, std::pair{&s.present, "present"}, std::pair{&s.absent, "absent"}}) {
    if (!*report) continue;
    for (const auto& b : (*report)->bins)
      os << split << ',' << b.index << ',' << fixed4(b.lo) << ',' << fixed4(b.hi) << ',' << b.count << ','
         << fixed4(b.mean_confidence) << ',' << fixed4(b.accuracy) << '\n';
  }
  for (auto [report, split] : {std::pair{&s.all, "all"}, std::pair{&s.present, "present"}, std::pair{&s.absent, "absent"}})
    if (*report) os << "# ece_percent " << split << ',' << fixed4((*report)->ece_percent) << '\n';
  return os.str();
}

inline std::string positional_csv(const PositionalReport& r) {
  std::ostringstream os;
  os << "section,gold_count,missed,miss_percent,soft_miss_percent\n";
  for (std::size_t i = 0; i < kSections; ++i) {
    os << i + 1 << ',' << r.gold_counts[i] << ',' << r.missed[i] << ',';
    if (r.miss_percent[i]) os << fixed4(*r.miss_percent[i]);
    os << ',';
    if (r.soft_miss_percent[i]) os << fixed4(*r.soft_miss_percent[i]);
    os << '\n';
  }
  return os.str();
}

inline std::string confidence_csv(const ConfidenceSummary& c) {
  std::ostringstream os;
  os << "split,lo,hi,count\n";
  for (auto [h, split] : {std::pair{&c.present, "present"}, std::pair{&c.absent, "absent"}, std::pair{&c.all, "all"}}) {
    for (std::size_t i = 0; i < h->counts.size(); ++i)
      os << split << ',' << fixed4(h->edges[i]) << ',' << fixed4(h->edges[i + 1]) << ',' << h->counts[i] << '\n';
    os << split << ',' << fixed4(h->edges.back()) << ",inf," << h->overflow << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json reliability_json(const std::optional<CalibrationReport>& r) {
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  if (r)
    for (const auto& p : reliability_data(*r)) pts.push_back({p.midpoint, p.accuracy, p.count});
  return pts;
}

inline nlohmann::ordered_json reliability_plotdata(const CalibrationSummary& s) {
  return {{"all", reliability_json(s.all)}, {"present", reliability_json(s.present)}, {"absent", reliability_json(s.absent)}};
}

inline nlohmann::ordered_json positional_plotdata(const PositionalReport& r) {
  nlohmann::ordered_json miss = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < kSections; ++i) miss.push_back({i + 1, detail::optional_json(r.miss_percent[i])});
  return miss;
}

inline nlohmann::ordered_json histogram_plotdata(const KppHistogram& h) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < h.counts.size(); ++i) out.push_back({h.edges[i], h.edges[i + 1], h.counts[i]});
  return out;
}

inline nlohmann::ordered_json position_box_plotdata(const PositionStatsResult& p) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& s : p.positions)
    out.push_back({s.position, s.whisker_low, s.q1, s.median, s.q3, s.whisker_high, s.count});
  return out;
}

inline nlohmann::ordered_json confidence_plotdata(const ConfidenceSummary& c) {
  return {{"kpp_histogram",
           {{"present", histogram_plotdata(c.present)},
            {"absent", histogram_plotdata(c.absent)},
            {"all", histogram_plotdata(c.all)}}},
          {"kpp_median",
           {{"present", detail::optional_json(c.present.median)}, {"absent", detail::optional_json(c.absent.median)}}},
          {"token_position_boxes",
           {{"present", position_box_plotdata(c.positions_present)},
            {"absent", position_box_plotdata(c.positions_absent)},
            {"all", position_box_plotdata(c.positions_all)}}}};
}

inline std::string render_json(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

/// Writes text to path, or to stdout when path is empty or "-".
inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::string render(const CorpusReport& r, Format format) {
  switch (format) {
    case Format::Json:
      return render_json(to_json(r));
    case Format::Csv:
      return metrics_csv(r.metrics);
    case Format::PlotData:
      return render_json({{"reliability", reliability_plotdata(r.calibration)},
                          {"positional_miss", positional_plotdata(r.positional)},
                          {"confidence", confidence_plotdata(r.confidence)}});
  }
  return {};
}

inline void emit(const CorpusReport& r, Format format, const std::string& path) { emit(render(r, format), path); }

}  // namespace keyscore
