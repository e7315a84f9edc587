// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file eval.hpp
 * @brief Correlation and classification metrics, threshold tuning, sweeps.
 *
 * Sequence scores are judged by Pearson correlation against gold scores;
 * token scores by MCC against OK/BAD labels after thresholding (score >=
 * threshold means OK). Confusion counts treat OK as the positive class; MCC
 * is symmetric in that choice anyway.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "boostedprob/distribution.hpp"
#include "boostedprob/parallel.hpp"
#include "boostedprob/scoring.hpp"

namespace boostedprob {

// ---------------------------------------------------------------------------
// Pearson
// ---------------------------------------------------------------------------

/// Sample Pearson correlation. Returns nullopt when either input is constant,
/// since the coefficient is undefined there. Throws DataError on a length
/// mismatch or fewer than two points.
[[nodiscard]] inline std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DataError("pearson: length mismatch (" + std::to_string(xs.size()) + " vs " + std::to_string(ys.size()) +
                    ")");
  }
  if (xs.size() < 2) throw DataError("pearson: need at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// MCC
// ---------------------------------------------------------------------------

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  void add(bool predicted_ok, bool label_ok) noexcept {
    if (predicted_ok) {
      label_ok ? ++tp : ++fp;
    } else {
      label_ok ? ++fn : ++tn;
    }
  }

  [[nodiscard]] std::uint64_t total() const noexcept { return tp + fp + tn + fn; }

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Matthews correlation coefficient; 0 when any marginal is empty.
[[nodiscard]] inline double mcc(const Confusion& c) noexcept {
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn);
  const auto fn = static_cast<double>(c.fn);
  const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  if (denom == 0.0) return 0.0;
  return std::clamp((tp * tn - fp * fn) / std::sqrt(denom), -1.0, 1.0);
}

[[nodiscard]] inline double mcc(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) noexcept {
  return mcc(Confusion{tp, fp, tn, fn});
}

// ---------------------------------------------------------------------------
// Threshold tuning
// ---------------------------------------------------------------------------

struct ThresholdChoice {
  double threshold = 0.0;
  double mcc = 0.0;
  Confusion confusion;
};

/// Midpoint of two distinct sorted scores, nudged so that lo < mid <= hi.
[[nodiscard]] inline double threshold_midpoint(double lo, double hi) noexcept {
  const double mid = lo + (hi - lo) / 2.0;
  return mid > lo ? mid : hi;
}

/// Picks the threshold with the highest MCC. Candidates are the smallest
/// score (all OK), midpoints between consecutive distinct scores, and the
/// next double above the largest score (all BAD); ties go to the smallest.
/// Throws DataError unless both labels occur.
[[nodiscard]] inline ThresholdChoice tune_threshold(std::span<const double> scores,
                                                    std::span<const TokenLabel> labels) {
  if (scores.size() != labels.size()) throw DataError("tune_threshold: scores and labels differ in length");
  const auto n_ok = static_cast<std::uint64_t>(std::count(labels.begin(), labels.end(), TokenLabel::Ok));
  const auto n_bad = static_cast<std::uint64_t>(labels.size()) - n_ok;
  if (n_ok == 0 || n_bad == 0) throw DataError("tune_threshold: dev labels contain a single class");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Start with everything predicted OK and move score groups to BAD.
  Confusion conf{n_ok, n_bad, 0, 0};
  ThresholdChoice best{scores[order.front()], mcc(conf), conf};
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == value; ++i) {
      if (labels[order[i]] == TokenLabel::Ok) {
        --conf.tp;
        ++conf.fn;
      } else {
        --conf.fp;
        ++conf.tn;
      }
    }
    const double t = i < order.size() ? threshold_midpoint(value, scores[order[i]])
                                      : std::nextafter(value, std::numeric_limits<double>::infinity());
    const double m = mcc(conf);
    if (m > best.mcc) best = {t, m, conf};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Corpus-level evaluation
// ---------------------------------------------------------------------------

struct EvalReport {
  std::string method;
  std::string grouping;
  std::optional<double> pearson;
  std::optional<double> mcc;
  std::optional<double> threshold;
  std::size_t n = 0;
  // Jump-cut hyperparameters, when the report comes from a sweep.
  std::optional<double> x_percent;
  std::optional<double> epsilon;

  [[nodiscard]] std::string metric_name() const { return mcc ? "mcc" : "pearson"; }
  [[nodiscard]] std::optional<double> value() const { return mcc ? mcc : pearson; }
};

enum class TokenAveraging { Micro, Macro };

namespace detail {

inline std::unordered_map<std::string, const QEResult*> index_results(std::span<const QEResult> results) {
  std::unordered_map<std::string, const QEResult*> by_id;
  by_id.reserve(results.size());
  for (const auto& r : results) by_id.emplace(r.sequence_id, &r);
  return by_id;
}

inline const QEResult& result_for(const std::unordered_map<std::string, const QEResult*>& by_id,
                                  const SequenceRecord& rec) {
  const auto it = by_id.find(rec.sequence_id);
  if (it == by_id.end()) throw DataError("no score for record '" + rec.sequence_id + "'");
  return *it->second;
}

inline std::string method_of(std::span<const QEResult> results) {
  return results.empty() ? std::string{} : results.front().method;
}

}  // namespace detail

/// Pearson correlation between sequence scores and gold scores.
[[nodiscard]] inline EvalReport evaluate_sequence(const Corpus& corpus, std::span<const QEResult> results,
                                                  std::string grouping = {}) {
  const auto by_id = detail::index_results(results);
  std::vector<double> scores, gold;
  scores.reserve(corpus.records.size());
  gold.reserve(corpus.records.size());
  for (const auto& rec : corpus.records) {
    if (!rec.gold_score) throw DataError("record '" + rec.sequence_id + "' has no gold_score");
    scores.push_back(detail::result_for(by_id, rec).sequence_score);
    gold.push_back(*rec.gold_score);
  }
  if (scores.size() < 2) throw DataError("sequence evaluation needs at least two records");
  EvalReport report;
  report.method = detail::method_of(results);
  report.grouping = std::move(grouping);
  report.n = scores.size();
  report.pearson = pearson(scores, gold);
  return report;
}

/// All token scores and labels of a corpus, flattened in record order.
struct TokenSample {
  std::vector<double> scores;
  std::vector<TokenLabel> labels;
};

[[nodiscard]] inline TokenSample collect_tokens(const Corpus& corpus, std::span<const QEResult> results) {
  const auto by_id = detail::index_results(results);
  TokenSample out;
  for (const auto& rec : corpus.records) {
    if (!rec.token_labels) throw DataError("record '" + rec.sequence_id + "' has no token labels");
    const auto& res = detail::result_for(by_id, rec);
    if (res.token_scores.size() != rec.token_labels->size()) {
      throw DataError("record '" + rec.sequence_id + "': token scores do not align with labels");
    }
    out.scores.insert(out.scores.end(), res.token_scores.begin(), res.token_scores.end());
    out.labels.insert(out.labels.end(), rec.token_labels->begin(), rec.token_labels->end());
  }
  return out;
}

[[nodiscard]] inline ThresholdChoice tune_threshold(const Corpus& dev, std::span<const QEResult> results) {
  const auto tokens = collect_tokens(dev, results);
  return tune_threshold(tokens.scores, tokens.labels);
}

/// Token-level MCC at a fixed threshold. Micro pools one confusion matrix
/// over all tokens; macro averages per-record MCC.
[[nodiscard]] inline EvalReport evaluate_tokens(const Corpus& corpus, std::span<const QEResult> results,
                                                double threshold, TokenAveraging averaging = TokenAveraging::Micro,
                                                std::string grouping = {}) {
  const auto by_id = detail::index_results(results);
  Confusion pooled;
  double macro_sum = 0.0;
  std::size_t n_tokens = 0;
  for (const auto& rec : corpus.records) {
    if (!rec.token_labels) throw DataError("record '" + rec.sequence_id + "' has no token labels");
    const auto& res = detail::result_for(by_id, rec);
    if (res.token_scores.size() != rec.token_labels->size()) {
      throw DataError("record '" + rec.sequence_id + "': token scores do not align with labels");
    }
    Confusion local;
    for (std::size_t t = 0; t < res.token_scores.size(); ++t) {
      local.add(res.token_scores[t] >= threshold, (*rec.token_labels)[t] == TokenLabel::Ok);
    }
    pooled.tp += local.tp;
    pooled.fp += local.fp;
    pooled.tn += local.tn;
    pooled.fn += local.fn;
    macro_sum += mcc(local);
    n_tokens += res.token_scores.size();
  }
  if (corpus.records.empty()) throw DataError("token evaluation on an empty corpus");
  EvalReport report;
  report.method = detail::method_of(results);
  report.grouping = std::move(grouping);
  report.threshold = threshold;
  report.n = n_tokens;
  report.mcc = averaging == TokenAveraging::Micro ? mcc(pooled)
                                                   : macro_sum / static_cast<double>(corpus.records.size());
  return report;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweep
// ---------------------------------------------------------------------------

enum class SweepTarget { PearsonVsGold, MccVsLabels };

inline const std::vector<double> kDefaultGridX{0.2, 0.3, 0.4, 0.5, 0.6};
inline const std::vector<double> kDefaultGridEpsilon{0.005, 0.01, 0.1};

/// Scores `corpus` with `config` and measures it against `target`. For MCC the
/// threshold is tuned on the same corpus. Throws DataError if any record
/// fails to score or the metric is undefined.
[[nodiscard]] inline EvalReport evaluate_config(const Corpus& corpus, const MethodConfig& config, SweepTarget target,
                                                std::string grouping = {}) {
  auto outcome = score_corpus(corpus, config);
  if (!outcome.ok()) {
    throw DataError("record '" + outcome.errors.front().sequence_id + "': " + outcome.errors.front().message);
  }
  if (target == SweepTarget::PearsonVsGold) {
    auto report = evaluate_sequence(corpus, outcome.results, std::move(grouping));
    if (!report.pearson) throw DataError("undefined correlation (constant scores or gold)");
    return report;
  }
  const auto choice = tune_threshold(corpus, outcome.results);
  return evaluate_tokens(corpus, outcome.results, choice.threshold, TokenAveraging::Micro, std::move(grouping));
}

struct SweepEntry {
  double x_percent = 0.0;
  double epsilon = 0.0;
  std::optional<EvalReport> report;  // empty when the cell failed
  std::string error;

  [[nodiscard]] std::optional<double> metric() const { return report ? report->value() : std::nullopt; }
};

struct SweepTable {
  SweepTarget target = SweepTarget::PearsonVsGold;
  std::vector<SweepEntry> entries;  // best first; failed cells last
};

/// Evaluates jump-cut BoostedProb on every (x, epsilon) pair. `base` supplies
/// the aggregation; its cluster settings are overridden per cell.
[[nodiscard]] inline SweepTable sweep(const Corpus& dev, std::span<const double> grid_x,
                                      std::span<const double> grid_eps, SweepTarget target,
                                      const MethodConfig& base = {}, std::size_t workers = 1) {
  SweepTable table;
  table.target = target;
  table.entries.resize(grid_x.size() * grid_eps.size());
  parallel_for(table.entries.size(), workers, [&](std::size_t cell) {
    SweepEntry& entry = table.entries[cell];
    entry.x_percent = grid_x[cell / grid_eps.size()];
    entry.epsilon = grid_eps[cell % grid_eps.size()];
    MethodConfig config = base;
    config.method = ScoreMethod::BoostedProb;
    config.cluster.method = ClusterMethod::JumpCut;
    config.cluster.x_percent = entry.x_percent;
    config.cluster.epsilon = entry.epsilon;
    try {
      config.validate();
      entry.report = evaluate_config(dev, config, target);
      entry.report->x_percent = entry.x_percent;
      entry.report->epsilon = entry.epsilon;
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
  });
  std::stable_sort(table.entries.begin(), table.entries.end(), [](const SweepEntry& a, const SweepEntry& b) {
    const auto ma = a.metric();
    const auto mb = b.metric();
    if (ma && mb) return *ma > *mb;
    return ma.has_value() && !mb.has_value();
  });
  return table;
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline constexpr const char* kReportCsvHeader = "method,grouping,metric,value,n,threshold,x,epsilon";

inline void write_report_csv_row(std::ostream& out, const EvalReport& r) {
  out << detail::csv_field(r.method) << ',' << detail::csv_field(r.grouping) << ',' << r.metric_name() << ','
      << (r.value() ? detail::format_number(*r.value()) : std::string("undefined")) << ',' << r.n << ','
      << detail::format_optional(r.threshold) << ',' << detail::format_optional(r.x_percent) << ','
      << detail::format_optional(r.epsilon) << '\n';
}

inline void write_reports_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << kReportCsvHeader << '\n';
  for (const auto& r : reports) write_report_csv_row(out, r);
}

/// One CSV row per sweep cell, in table order. Failed cells carry the error
/// in place of a value.
inline void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  out << kReportCsvHeader << ",status\n";
  const char* metric = table.target == SweepTarget::PearsonVsGold ? "pearson" : "mcc";
  for (const auto& e : table.entries) {
    if (e.report) {
      std::ostringstream row;
      write_report_csv_row(row, *e.report);
      std::string line = row.str();
      line.pop_back();
      out << line << ",ok\n";
    } else {
      out << "boostedprob,," << metric << ",,0,," << detail::format_number(e.x_percent) << ','
          << detail::format_number(e.epsilon) << ',' << detail::csv_field("error: " + e.error) << '\n';
    }
  }
}

/// Fixed-width text table for terminals.
inline void write_reports_table(std::ostream& out, std::span<const EvalReport> reports) {
  out << std::left << std::setw(22) << "method" << std::setw(18) << "grouping" << std::setw(9) << "metric"
      << std::setw(12) << "value" << std::setw(9) << "n" << "threshold\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(22) << r.method << std::setw(18) << (r.grouping.empty() ? "-" : r.grouping)
        << std::setw(9) << r.metric_name() << std::setw(12)
        << (r.value() ? detail::format_number(std::round(*r.value() * 1e6) / 1e6) : std::string("undefined"))
        << std::setw(9) << r.n << (r.threshold ? detail::format_number(*r.threshold) : std::string("-")) << '\n';
  }
}

}  // namespace boostedprob
