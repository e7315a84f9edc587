// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file compare.hpp
 * @brief Compares dominant-cluster finders under BoostedProb.
 *
 * Each finder is tuned on a dev corpus over its own hyperparameter grid, then
 * scored once on the test corpus with the winning setting (and, for token
 * MCC, the dev-tuned threshold). Rows are ranked by the test metric.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "boostedprob/cluster.hpp"
#include "boostedprob/eval.hpp"
#include "boostedprob/scoring.hpp"

namespace boostedprob {

struct FinderCandidate {
  std::string name;
  std::vector<ClusterFinderConfig> grid;
};

/// The hyperparameter grid searched for each finder when none is given.
[[nodiscard]] inline std::vector<ClusterFinderConfig> default_finder_grid(ClusterMethod method) {
  std::vector<ClusterFinderConfig> grid;
  auto with = [&](auto&& set) {
    ClusterFinderConfig c;
    c.method = method;
    set(c);
    grid.push_back(c);
  };
  switch (method) {
    case ClusterMethod::JumpCut:
      for (double x : kDefaultGridX) {
        for (double eps : kDefaultGridEpsilon) with([&](auto& c) {
          c.x_percent = x;
          c.epsilon = eps;
        });
      }
      break;
    case ClusterMethod::TopK:
      for (std::size_t k = 1; k <= 10; ++k) with([&](auto& c) { c.k = k; });
      break;
    case ClusterMethod::TopP:
      for (double p : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) with([&](auto& c) { c.p = p; });
      break;
    case ClusterMethod::EpsilonCut:
      for (double eps : {0.005, 0.01, 0.05, 0.1, 0.2}) with([&](auto& c) { c.epsilon = eps; });
      break;
    case ClusterMethod::EtaCut:
      for (double eta : {0.005, 0.01, 0.05, 0.1, 0.2}) with([&](auto& c) { c.eta = eta; });
      break;
    case ClusterMethod::MinP:
      for (double p : {0.5, 0.6, 0.7, 0.8, 0.9, 0.95}) with([&](auto& c) { c.p = p; });
      break;
  }
  return grid;
}

[[nodiscard]] inline FinderCandidate default_finder(ClusterMethod method) {
  return {std::string(to_string(method)), default_finder_grid(method)};
}

struct FinderResult {
  std::string name;
  std::optional<ClusterFinderConfig> best;
  double dev_metric = 0.0;
  std::optional<EvalReport> test;  // empty when the finder failed
  std::string error;

  [[nodiscard]] std::optional<double> test_metric() const { return test ? test->value() : std::nullopt; }
};

/// Tunes every finder on `dev` and evaluates it on `test`. A finder that
/// fails keeps its row with the error and the run continues. Throws
/// std::invalid_argument for an empty finder list.
[[nodiscard]] inline std::vector<FinderResult> compare_finders(const Corpus& dev, const Corpus& test,
                                                               const std::vector<FinderCandidate>& finders,
                                                               SweepTarget target,
                                                               Aggregation aggregation = Aggregation::Mean) {
  if (finders.empty()) throw std::invalid_argument("compare_finders: no finders given");
  std::vector<FinderResult> rows;
  rows.reserve(finders.size());
  for (const auto& finder : finders) {
    FinderResult row;
    row.name = finder.name;
    try {
      if (finder.grid.empty()) throw std::invalid_argument("finder '" + finder.name + "' has an empty grid");
      std::string last_error;
      for (const auto& cfg : finder.grid) {
        MethodConfig config;
        config.method = ScoreMethod::BoostedProb;
        config.cluster = cfg;
        config.aggregation = aggregation;
        try {
          config.validate();
          const auto report = evaluate_config(dev, config, target);
          if (!row.best || *report.value() > row.dev_metric) {
            row.best = cfg;
            row.dev_metric = *report.value();
          }
        } catch (const std::exception& e) {
          last_error = e.what();
        }
      }
      if (!row.best) throw DataError("no grid point could be evaluated on dev: " + last_error);

      MethodConfig config;
      config.method = ScoreMethod::BoostedProb;
      config.cluster = *row.best;
      config.aggregation = aggregation;
      if (target == SweepTarget::PearsonVsGold) {
        row.test = evaluate_config(test, config, target, "test");
      } else {
        const auto dev_scores = score_corpus(dev, config);
        const auto choice = tune_threshold(dev, dev_scores.results);
        const auto test_scores = score_corpus(test, config);
        if (!test_scores.ok()) {
          throw DataError("record '" + test_scores.errors.front().sequence_id +
                          "': " + test_scores.errors.front().message);
        }
        row.test = evaluate_tokens(test, test_scores.results, choice.threshold, TokenAveraging::Micro, "test");
      }
      row.test->method = "boostedprob/" + row.best->describe();
    } catch (const std::exception& e) {
      row.test.reset();
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const FinderResult& a, const FinderResult& b) {
    const auto ma = a.test_metric();
    const auto mb = b.test_metric();
    if (ma && mb) return *ma > *mb;
    return ma.has_value() && !mb.has_value();
  });
  return rows;
}

inline void write_finder_table(std::ostream& out, const std::vector<FinderResult>& rows) {
  out << std::left << std::setw(5) << "rank" << std::setw(14) << "finder" << std::setw(34) << "best (dev)"
      << std::setw(12) << "dev" << "test\n";
  std::size_t rank = 1;
  for (const auto& r : rows) {
    out << std::left << std::setw(5) << rank++ << std::setw(14) << r.name << std::setw(34)
        << (r.best ? r.best->describe() : std::string("-")) << std::setw(12)
        << (r.best ? detail::format_number(std::round(r.dev_metric * 1e6) / 1e6) : std::string("-"));
    if (r.test_metric()) {
      out << detail::format_number(std::round(*r.test_metric() * 1e6) / 1e6) << '\n';
    } else {
      out << "error: " << r.error << '\n';
    }
  }
}

inline void write_finder_csv(std::ostream& out, const std::vector<FinderResult>& rows) {
  out << "rank,finder,best,dev_metric,test_metric,threshold,status\n";
  std::size_t rank = 1;
  for (const auto& r : rows) {
    out << rank++ << ',' << detail::csv_field(r.name) << ','
        << detail::csv_field(r.best ? r.best->describe() : std::string{}) << ','
        << (r.best ? detail::format_number(r.dev_metric) : std::string{}) << ','
        << detail::format_optional(r.test_metric()) << ','
        << detail::format_optional(r.test ? r.test->threshold : std::nullopt) << ','
        << (r.test ? std::string("ok") : detail::csv_field("error: " + r.error)) << '\n';
  }
}

}  // namespace boostedprob
