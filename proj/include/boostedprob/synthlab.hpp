// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file synthlab.hpp
 * @brief Synthetic corpora with controlled ambiguity and known quality.
 *
 * A competent step spreads mass q uniformly over k correct tokens, i.e. an
 * ambiguous step with k valid continuations. An incompetent step either puts
 * a single wrong token on top (overconfident error) or spreads all mass thinly
 * (uncertain error). Leftover mass is always split into tokens below eps/2, so
 * the jump-cut boundary is exercised without ever promoting them.
 *
 * The emitted token is sampled from the step distribution; a token is OK iff
 * it is one of the correct tokens, and a sequence's gold score is its OK
 * fraction. Every head enumerates all non-zero tokens (tail_count = 0).
 *
 * Randomness: std::mt19937_64 seeded with SynthSpec::seed. Its output is fixed
 * by the C++ standard; the floating/integer draws below are implemented here
 * (not via <random> distributions) so corpora are identical on every platform.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boostedprob/cluster.hpp"
#include "boostedprob/distribution.hpp"
#include "boostedprob/scoring.hpp"

namespace boostedprob::synth {

/// Seeded generator with platform-independent draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi], by rejection.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
    const std::uint64_t range = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return lo + v % range;
  }

 private:
  std::mt19937_64 engine_;
};

enum class ErrorMode { Overconfident, Uncertain, Mixed };

[[nodiscard]] inline std::string_view to_string(ErrorMode m) noexcept {
  switch (m) {
    case ErrorMode::Overconfident: return "overconfident";
    case ErrorMode::Uncertain: return "uncertain";
    case ErrorMode::Mixed: return "mixed";
  }
  return "?";
}

[[nodiscard]] inline ErrorMode parse_error_mode(std::string_view s) {
  for (auto m : {ErrorMode::Overconfident, ErrorMode::Uncertain, ErrorMode::Mixed}) {
    if (to_string(m) == s) return m;
  }
  throw std::invalid_argument("unknown error mode '" + std::string(s) + "'");
}

struct SynthSpec {
  std::size_t n_sequences = 100;
  std::size_t steps_min = 10;
  std::size_t steps_max = 30;
  std::size_t k_min = 2;
  std::size_t k_max = 5;
  double q_min = 0.85;
  double q_max = 0.95;
  double competence = 0.8;
  ErrorMode error_mode = ErrorMode::Overconfident;
  std::uint64_t seed = 42;
  std::size_t vocab_size = 1000;
  double epsilon = 0.005;  // leftover mass is split into tokens below epsilon / 2

  void validate() const;
};

/// Number of equal tokens needed so that `mass` splits into pieces < epsilon / 2.
[[nodiscard]] inline std::size_t residue_token_count(double mass, double epsilon) noexcept {
  if (!(mass > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(mass / (epsilon / 2.0))) + 1;
}

/// Mass range of the wrong token in overconfident errors: the range of the
/// probability a correct token gets on a competent step, q / k.
[[nodiscard]] inline std::pair<double, double> wrong_token_mass_range(const SynthSpec& spec) noexcept {
  const double lo = spec.q_min / static_cast<double>(spec.k_max);
  const double hi = spec.q_max / static_cast<double>(spec.k_min);
  return {std::min(lo, 1.0), std::min(hi, 1.0)};
}

inline void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("synth settings: " + what); };
  if (n_sequences == 0) fail("n_sequences must be positive");
  if (steps_min == 0 || steps_min > steps_max) fail("steps range must be non-empty and positive");
  if (k_min == 0 || k_min > k_max) fail("k range must be non-empty and positive");
  if (!(q_min > 0.0 && q_min <= q_max && q_max <= 1.0)) fail("correct_mass range must lie in (0,1]");
  if (!(competence >= 0.0 && competence <= 1.0)) fail("competence must lie in [0,1]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0,1)");
  if (vocab_size <= k_max) fail("vocab_size must exceed the largest k");
  std::size_t needed = k_max + residue_token_count(1.0 - q_min, epsilon);
  if (competence < 1.0) {
    if (error_mode != ErrorMode::Uncertain) {
      needed = std::max(needed, 1 + residue_token_count(1.0 - wrong_token_mass_range(*this).first, epsilon));
    }
    if (error_mode != ErrorMode::Overconfident) {
      needed = std::max(needed, residue_token_count(1.0, epsilon));
    }
  }
  if (vocab_size < needed) {
    fail("vocab_size " + std::to_string(vocab_size) + " too small; need at least " + std::to_string(needed));
  }
}

/// Builds a step from probabilities already in descending order. Token ids
/// are `first_id + j` modulo `vocab_size`; ties end up ordered by token id.
[[nodiscard]] inline StepDistribution make_step(const std::vector<double>& sorted_probs, std::size_t chosen,
                                                std::uint64_t first_id = 0, std::uint64_t vocab_size = 0) {
  if (sorted_probs.empty()) throw std::invalid_argument("make_step: no probabilities");
  if (chosen >= sorted_probs.size()) throw std::invalid_argument("make_step: chosen index outside head");
  const std::uint64_t modulus = vocab_size == 0 ? std::numeric_limits<std::uint64_t>::max() : vocab_size;
  StepDistribution step;
  step.head.reserve(sorted_probs.size());
  for (std::size_t j = 0; j < sorted_probs.size(); ++j) {
    step.head.push_back({static_cast<std::int64_t>((first_id + j) % modulus), sorted_probs[j]});
  }
  const std::int64_t chosen_id = step.head[chosen].token_id;
  std::stable_sort(step.head.begin(), step.head.end(), [](const TokenProb& a, const TokenProb& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.token_id < b.token_id;
  });
  for (std::size_t i = 0; i < step.head.size(); ++i) {
    if (step.head[i].token_id == chosen_id) step.chosen = {i, step.head[i].prob};
  }
  return step;
}

/// Probabilities of a k-way ambiguous step: k tokens at q / k, then the
/// remaining 1 - q split evenly into tokens below epsilon / 2.
[[nodiscard]] inline std::vector<double> k_way_probabilities(std::size_t k, double q, double epsilon) {
  std::vector<double> probs(k, q / static_cast<double>(k));
  const std::size_t m = residue_token_count(1.0 - q, epsilon);
  probs.insert(probs.end(), m, (1.0 - q) / static_cast<double>(m == 0 ? 1 : m));
  return probs;
}

/// One dominant token of mass `top` followed by thin residue.
[[nodiscard]] inline std::vector<double> single_top_probabilities(double top, double epsilon) {
  std::vector<double> probs{top};
  const std::size_t m = residue_token_count(1.0 - top, epsilon);
  probs.insert(probs.end(), m, (1.0 - top) / static_cast<double>(m == 0 ? 1 : m));
  return probs;
}

struct SynthTruth {
  std::vector<double> gold_scores;
  std::vector<std::vector<bool>> correct;  // per sequence, per step
};

struct SynthCorpus {
  Corpus corpus;
  SynthTruth truth;
};

namespace detail {

inline std::size_t sample_index(const std::vector<double>& probs, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return probs.size() - 1;
}

inline std::string sequence_name(std::size_t i) {
  std::string digits = std::to_string(i);
  return "synth-" + std::string(digits.size() < 6 ? 6 - digits.size() : 0, '0') + digits;
}

}  // namespace detail

/// Generates a labelled corpus. Identical specs yield identical corpora.
[[nodiscard]] inline SynthCorpus generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto [wrong_lo, wrong_hi] = wrong_token_mass_range(spec);
  SynthCorpus out;
  auto& corpus = out.corpus;
  corpus.metadata = {{"source", "synthlab"},
                     {"seed", std::to_string(spec.seed)},
                     {"error_mode", std::string(to_string(spec.error_mode))},
                     {"grouping", "synthetic"}};
  corpus.records.reserve(spec.n_sequences);
  for (std::size_t s = 0; s < spec.n_sequences; ++s) {
    SequenceRecord rec;
    rec.sequence_id = detail::sequence_name(s);
    const auto n_steps = static_cast<std::size_t>(rng.uniform_int(spec.steps_min, spec.steps_max));
    std::vector<bool> correct;
    std::vector<TokenLabel> labels;
    std::size_t n_ok = 0;
    for (std::size_t t = 0; t < n_steps; ++t) {
      const bool competent = rng.uniform() < spec.competence;
      std::vector<double> probs;
      std::size_t n_correct = 0;
      if (competent) {
        const auto k = static_cast<std::size_t>(rng.uniform_int(spec.k_min, spec.k_max));
        const double q = rng.uniform(spec.q_min, spec.q_max);
        probs = k_way_probabilities(k, q, spec.epsilon);
        n_correct = k;
      } else {
        bool overconfident = spec.error_mode == ErrorMode::Overconfident;
        if (spec.error_mode == ErrorMode::Mixed) overconfident = rng.uniform() < 0.5;
        probs = overconfident ? single_top_probabilities(rng.uniform(wrong_lo, wrong_hi), spec.epsilon)
                              : std::vector<double>(residue_token_count(1.0, spec.epsilon),
                                                    1.0 / static_cast<double>(residue_token_count(1.0, spec.epsilon)));
      }
      const std::size_t chosen = detail::sample_index(probs, rng.uniform());
      const std::uint64_t first_id = rng.uniform_int(0, spec.vocab_size - 1);
      rec.steps.push_back(make_step(probs, chosen, first_id, spec.vocab_size));
      const bool ok = chosen < n_correct;
      correct.push_back(ok);
      labels.push_back(ok ? TokenLabel::Ok : TokenLabel::Bad);
      n_ok += ok ? 1 : 0;
    }
    const double gold = static_cast<double>(n_ok) / static_cast<double>(n_steps);
    rec.gold_score = gold;
    rec.token_labels = std::move(labels);
    out.truth.gold_scores.push_back(gold);
    out.truth.correct.push_back(std::move(correct));
    corpus.records.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Underconfidence bound
// ---------------------------------------------------------------------------

struct TheoryCell {
  std::size_t k = 0;
  double q = 0.0;
  double raw = 0.0;      // raw probability of a correct token
  double boosted = 0.0;  // BoostedProb of a correct token
  std::size_t cutting_index = 0;
  bool pass = false;
  std::string detail;  // first failed check, empty on pass
};

inline constexpr double kTheoryTolerance = 1e-12;

/// Builds the canonical k-way step and checks, for every correct token as the
/// emitted one: raw probability = q/k <= 1/k, jump-cut finds exactly the k
/// correct tokens, and BoostedProb = q.
[[nodiscard]] inline TheoryCell check_theory_cell(std::size_t k, double q, double x_percent = 0.3,
                                                  double epsilon = 0.005) {
  TheoryCell cell;
  cell.k = k;
  cell.q = q;
  const auto probs = k_way_probabilities(k, q, epsilon);
  auto fail = [&cell](std::string what) {
    if (cell.pass) cell.detail = std::move(what);
    cell.pass = false;
  };
  cell.pass = true;
  for (std::size_t j = 0; j < k; ++j) {
    const auto step = make_step(probs, j);
    const auto cluster = jump_cut(step, x_percent, epsilon);
    const double raw = token_raw(step);
    const double boosted = token_boostedprob(step, cluster);
    if (j == 0) {
      cell.raw = raw;
      cell.boosted = boosted;
      cell.cutting_index = cluster.cutting_index;
    }
    if (std::abs(raw - q / static_cast<double>(k)) > kTheoryTolerance) fail("raw probability differs from q/k");
    if (raw > 1.0 / static_cast<double>(k) + kTheoryTolerance) fail("raw probability exceeds 1/k");
    if (cluster.cutting_index != k) fail("jump-cut cluster size " + std::to_string(cluster.cutting_index));
    if (std::abs(boosted - q) > kTheoryTolerance) fail("boosted score differs from q");
  }
  return cell;
}

/// check_theory_cell for every k in [2, k_max] and every q.
[[nodiscard]] inline std::vector<TheoryCell> theory_check(std::size_t k_max, const std::vector<double>& q_list,
                                                          double x_percent = 0.3, double epsilon = 0.005) {
  if (k_max < 2) throw std::invalid_argument("theory_check: k_max must be >= 2");
  std::vector<TheoryCell> cells;
  for (std::size_t k = 2; k <= k_max; ++k) {
    for (double q : q_list) cells.push_back(check_theory_cell(k, q, x_percent, epsilon));
  }
  return cells;
}

}  // namespace boostedprob::synth
