// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file scoring.hpp
 * @brief Token- and sequence-level quality scores.
 *
 * Methods:
 *  - boostedprob: the dominant cluster's mass when the emitted token is in the
 *    cluster, its own probability otherwise;
 *  - raw-probability: the emitted token's probability;
 *  - entropy: minus the step entropy (so higher is better everywhere);
 *  - monte-carlo-entropy: sequence-level only, the mean log-probability of
 *    independently sampled outputs.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "boostedprob/cluster.hpp"
#include "boostedprob/distribution.hpp"
#include "boostedprob/entropy.hpp"
#include "boostedprob/parallel.hpp"

namespace boostedprob {

enum class Aggregation { Mean, Median, Min, NrDominant };
enum class ScoreMethod { BoostedProb, RawProbability, Entropy, MonteCarloEntropy };

[[nodiscard]] inline std::string_view to_string(Aggregation a) noexcept {
  switch (a) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Median: return "median";
    case Aggregation::Min: return "min";
    case Aggregation::NrDominant: return "nr-dominant";
  }
  return "?";
}

[[nodiscard]] inline std::string_view to_string(ScoreMethod m) noexcept {
  switch (m) {
    case ScoreMethod::BoostedProb: return "boostedprob";
    case ScoreMethod::RawProbability: return "raw-probability";
    case ScoreMethod::Entropy: return "entropy";
    case ScoreMethod::MonteCarloEntropy: return "monte-carlo-entropy";
  }
  return "?";
}

[[nodiscard]] inline Aggregation parse_aggregation(std::string_view s) {
  for (auto a : {Aggregation::Mean, Aggregation::Median, Aggregation::Min, Aggregation::NrDominant}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown aggregation '" + std::string(s) + "'");
}

[[nodiscard]] inline ScoreMethod parse_score_method(std::string_view s) {
  for (auto m : {ScoreMethod::BoostedProb, ScoreMethod::RawProbability, ScoreMethod::Entropy,
                 ScoreMethod::MonteCarloEntropy}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

struct MethodConfig {
  ScoreMethod method = ScoreMethod::BoostedProb;
  ClusterFinderConfig cluster;  // boostedprob only
  Aggregation aggregation = Aggregation::Mean;
  // Monte-Carlo entropy: divide each sample log-probability by its length.
  bool length_normalize = false;

  void validate() const {
    if (aggregation == Aggregation::NrDominant && method != ScoreMethod::BoostedProb) {
      throw std::invalid_argument("nr-dominant aggregation requires the boostedprob method");
    }
    if (method == ScoreMethod::BoostedProb) cluster.validate();
  }
};

struct QEResult {
  std::string sequence_id;
  std::string method;
  std::vector<double> token_scores;  // empty for sequence-only methods
  double sequence_score = 0.0;
  Aggregation aggregation = Aggregation::Mean;
};

// ---------------------------------------------------------------------------
// Token level
// ---------------------------------------------------------------------------

[[nodiscard]] inline bool is_dominant(const StepDistribution& step, const DominantCluster& cluster) noexcept {
  return step.chosen.index && cluster.contains(*step.chosen.index);
}

/// Cluster mass for a dominant emitted token, otherwise its own probability.
[[nodiscard]] inline double token_boostedprob(const StepDistribution& step, const DominantCluster& cluster) noexcept {
  return is_dominant(step, cluster) ? cluster.mass : step.chosen_probability();
}

[[nodiscard]] inline double token_raw(const StepDistribution& step) noexcept { return step.chosen_probability(); }

// ---------------------------------------------------------------------------
// Sequence level
// ---------------------------------------------------------------------------

/// Reduces token scores to one sequence score. `dominant_flags` is only read
/// (and then required) for nr-dominant, which returns the dominant fraction.
[[nodiscard]] inline double sequence_score(std::span<const double> token_scores, Aggregation aggregation,
                                           const std::vector<bool>* dominant_flags = nullptr) {
  if (token_scores.empty()) throw DataError("cannot aggregate an empty score list");
  switch (aggregation) {
    case Aggregation::Mean:
      return std::accumulate(token_scores.begin(), token_scores.end(), 0.0) /
             static_cast<double>(token_scores.size());
    case Aggregation::Median: {
      std::vector<double> sorted(token_scores.begin(), token_scores.end());
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    case Aggregation::Min: return *std::min_element(token_scores.begin(), token_scores.end());
    case Aggregation::NrDominant: {
      if (!dominant_flags) throw std::invalid_argument("nr-dominant aggregation requires dominant flags");
      if (dominant_flags->size() != token_scores.size()) {
        throw std::invalid_argument("dominant flags must align with token scores");
      }
      const auto count = std::count(dominant_flags->begin(), dominant_flags->end(), true);
      return static_cast<double>(count) / static_cast<double>(dominant_flags->size());
    }
  }
  throw std::logic_error("unhandled aggregation");
}

/// Monte-Carlo sequence entropy: -(1/M) * sum of the M sampled log-probabilities.
/// With `length_normalize`, each log-probability is first divided by its length.
[[nodiscard]] inline double monte_carlo_entropy_estimate(const SequenceRecord& record, bool length_normalize = false) {
  if (!record.sampled_sequence_logprobs || record.sampled_sequence_logprobs->empty()) {
    throw DataError("record '" + record.sequence_id + "' has no sampled sequence log-probabilities");
  }
  const auto& lp = *record.sampled_sequence_logprobs;
  double total = 0.0;
  if (length_normalize) {
    if (!record.sampled_sequence_lengths || record.sampled_sequence_lengths->size() != lp.size()) {
      throw DataError("record '" + record.sequence_id + "' needs one sample length per sampled log-probability");
    }
    for (std::size_t m = 0; m < lp.size(); ++m) {
      const double len = (*record.sampled_sequence_lengths)[m];
      if (!(len > 0.0)) throw DataError("record '" + record.sequence_id + "' has a non-positive sample length");
      total += lp[m] / len;
    }
  } else {
    total = std::accumulate(lp.begin(), lp.end(), 0.0);
  }
  return -total / static_cast<double>(lp.size());
}

/// The entropy estimate negated into a higher-is-better score.
[[nodiscard]] inline double monte_carlo_entropy(const SequenceRecord& record, bool length_normalize = false) {
  return -monte_carlo_entropy_estimate(record, length_normalize);
}

/// Scores one record. Throws DataError on data the method cannot handle.
[[nodiscard]] inline QEResult score_record(const SequenceRecord& record, const MethodConfig& config) {
  QEResult result;
  result.sequence_id = record.sequence_id;
  result.method = std::string(to_string(config.method));
  result.aggregation = config.aggregation;
  if (config.method == ScoreMethod::MonteCarloEntropy) {
    result.sequence_score = monte_carlo_entropy(record, config.length_normalize);
    return result;
  }
  if (record.steps.empty()) throw DataError("record '" + record.sequence_id + "' has no steps");

  result.token_scores.reserve(record.steps.size());
  std::vector<bool> flags;
  for (std::size_t t = 0; t < record.steps.size(); ++t) {
    const auto& step = record.steps[t];
    switch (config.method) {
      case ScoreMethod::BoostedProb: {
        DominantCluster cluster;
        try {
          cluster = find_cluster(step, config.cluster);
        } catch (const DataError& e) {
          throw DataError("record '" + record.sequence_id + "' step " + std::to_string(t) + ": " + e.what());
        }
        result.token_scores.push_back(token_boostedprob(step, cluster));
        flags.push_back(is_dominant(step, cluster));
        break;
      }
      case ScoreMethod::RawProbability: result.token_scores.push_back(token_raw(step)); break;
      case ScoreMethod::Entropy: result.token_scores.push_back(-step_entropy(step)); break;
      case ScoreMethod::MonteCarloEntropy: break;
    }
  }
  result.sequence_score = sequence_score(result.token_scores, config.aggregation, &flags);
  return result;
}

struct RecordError {
  std::string sequence_id;
  std::string message;
};

struct ScoreOutcome {
  std::vector<QEResult> results;  // successfully scored records, in input order
  std::vector<RecordError> errors;

  [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
};

/// Scores every record. A failing record is reported in `errors` and skipped;
/// the rest are still scored. Output order is input order for any `workers`.
[[nodiscard]] inline ScoreOutcome score_corpus(const Corpus& corpus, const MethodConfig& config,
                                               std::size_t workers = 1) {
  config.validate();
  const std::size_t n = corpus.records.size();
  std::vector<std::optional<QEResult>> slots(n);
  std::vector<std::optional<std::string>> failures(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      slots[i] = score_record(corpus.records[i], config);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  ScoreOutcome out;
  out.results.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      out.results.push_back(std::move(*slots[i]));
    } else {
      out.errors.push_back({corpus.records[i].sequence_id, failures[i].value_or("unknown error")});
    }
  }
  return out;
}

}  // namespace boostedprob
