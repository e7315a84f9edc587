// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file distribution.hpp
 * @brief Per-step output distributions and the sequence/corpus data model.
 *
 * A StepDistribution stores only the sorted head of a model's output
 * distribution plus a summary of the remainder (tail_mass spread over
 * tail_count tokens). Every consumer in this library works on that shape.
 *
 * A head is "epsilon-complete" when no token left out of it can exceed
 * epsilon, which is what lets the jump-cut scan work on the head alone.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace boostedprob {

/// Allowed deviation of head + tail mass from 1.
inline constexpr double kMassTolerance = 1e-4;

/// Thrown for malformed or invariant-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TokenProb {
  std::int64_t token_id = 0;
  double prob = 0.0;

  friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

/// The token finally emitted at a step. `index` is empty when the token is
/// not part of the stored head; `probability` is always its own probability.
struct Chosen {
  std::optional<std::size_t> index;
  double probability = 0.0;

  friend bool operator==(const Chosen&, const Chosen&) = default;
};

struct StepDistribution {
  std::vector<TokenProb> head;  // sorted by prob descending
  double tail_mass = 0.0;
  std::uint64_t tail_count = 0;
  Chosen chosen;

  [[nodiscard]] double chosen_probability() const noexcept { return chosen.probability; }
  [[nodiscard]] bool chosen_in_head() const noexcept { return chosen.index.has_value(); }

  /// Mean probability of one tail token, 0 without a tail.
  [[nodiscard]] double tail_mean() const noexcept {
    return tail_count == 0 ? 0.0 : tail_mass / static_cast<double>(tail_count);
  }

  [[nodiscard]] double head_mass() const noexcept {
    double total = 0.0;
    for (const auto& entry : head) total += entry.prob;
    return total;
  }

  friend bool operator==(const StepDistribution&, const StepDistribution&) = default;
};

enum class TokenLabel { Ok, Bad };

inline const char* to_string(TokenLabel label) noexcept { return label == TokenLabel::Ok ? "OK" : "BAD"; }

struct SequenceRecord {
  std::string sequence_id;
  std::vector<StepDistribution> steps;
  std::optional<double> gold_score;
  std::optional<std::vector<TokenLabel>> token_labels;
  std::optional<std::vector<double>> sampled_sequence_logprobs;
  // Token counts of the sampled sequences; only needed for length-normalized
  // Monte-Carlo entropy.
  std::optional<std::vector<double>> sampled_sequence_lengths;
  std::optional<std::string> text;
};

struct Corpus {
  std::vector<SequenceRecord> records;
  std::map<std::string, std::string> metadata;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ViolationKind {
  EmptyHead,
  NegativeProbability,
  HeadNotSorted,
  MassOutOfTolerance,
  TailWithoutTokens,
  TailMeanAboveHead,
  ChosenIndexOutOfRange,
  ChosenProbabilityMismatch,
  ChosenProbabilityOutOfRange,
  NotEpsilonComplete,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

namespace detail {

template <typename... Parts>
std::string concat(const Parts&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

}  // namespace detail

/// True when every token omitted from the head is guaranteed to be <= epsilon.
/// That holds if the head spans the vocabulary, if the tail carries no mass,
/// or if the smallest head entry is already <= epsilon (heads are sorted).
[[nodiscard]] inline bool is_epsilon_complete(const StepDistribution& step, double epsilon) noexcept {
  if (step.tail_count == 0 || step.tail_mass <= 0.0) return true;
  return !step.head.empty() && step.head.back().prob <= epsilon;
}

/// Checks every structural invariant of a step. Violations are returned, not
/// thrown; an empty result means the step is valid.
[[nodiscard]] inline std::vector<Violation> validate_step(const StepDistribution& step) {
  std::vector<Violation> out;
  if (step.head.empty()) {
    out.push_back({ViolationKind::EmptyHead, "head is empty"});
    return out;
  }
  for (std::size_t i = 0; i < step.head.size(); ++i) {
    if (!(step.head[i].prob >= 0.0) || step.head[i].prob > 1.0 + kMassTolerance) {
      out.push_back({ViolationKind::NegativeProbability,
                     detail::concat("head probability ", step.head[i].prob, " at position ", i, " not in [0,1]")});
    }
  }
  for (std::size_t i = 1; i < step.head.size(); ++i) {
    if (step.head[i].prob > step.head[i - 1].prob) {
      out.push_back({ViolationKind::HeadNotSorted,
                     detail::concat("head not non-increasing at position ", i, " (", step.head[i - 1].prob, " < ",
                                    step.head[i].prob, ")")});
      break;
    }
  }
  if (!(step.tail_mass >= 0.0)) {
    out.push_back({ViolationKind::NegativeProbability, detail::concat("tail_mass ", step.tail_mass, " is negative")});
  }
  const double mass = step.head_mass() + step.tail_mass;
  if (!(std::abs(mass - 1.0) <= kMassTolerance)) {
    out.push_back({ViolationKind::MassOutOfTolerance, detail::concat("mass ", mass, " outside tolerance")});
  }
  if (step.tail_count == 0 && step.tail_mass > kMassTolerance) {
    out.push_back({ViolationKind::TailWithoutTokens,
                   detail::concat("tail_mass ", step.tail_mass, " with tail_count 0")});
  }
  // Rounding in tail_mass / tail_count can overshoot equal-valued tails by an ulp.
  if (step.tail_count > 0 && step.tail_mean() > step.head.back().prob * (1.0 + 1e-9) + 1e-15) {
    out.push_back({ViolationKind::TailMeanAboveHead,
                   detail::concat("mean tail probability ", step.tail_mean(), " exceeds last head probability ",
                                  step.head.back().prob)});
  }
  if (step.chosen.index) {
    const std::size_t idx = *step.chosen.index;
    if (idx >= step.head.size()) {
      out.push_back({ViolationKind::ChosenIndexOutOfRange,
                     detail::concat("chosen index ", idx, " outside head of length ", step.head.size())});
    } else if (step.chosen.probability != step.head[idx].prob) {
      out.push_back({ViolationKind::ChosenProbabilityMismatch,
                     detail::concat("chosen probability ", step.chosen.probability, " differs from head entry ",
                                    step.head[idx].prob)});
    }
  } else if (!(step.chosen.probability >= 0.0) || step.chosen.probability > step.tail_mass + kMassTolerance) {
    out.push_back({ViolationKind::ChosenProbabilityOutOfRange,
                   detail::concat("chosen probability ", step.chosen.probability, " outside tail mass ",
                                  step.tail_mass)});
  }
  return out;
}

/// validate_step plus the epsilon-completeness requirement.
[[nodiscard]] inline std::vector<Violation> validate_step(const StepDistribution& step, double epsilon) {
  auto out = validate_step(step);
  if (!step.head.empty() && !is_epsilon_complete(step, epsilon)) {
    out.push_back({ViolationKind::NotEpsilonComplete,
                   detail::concat("head not epsilon-complete: last head probability ", step.head.back().prob,
                                  " > epsilon ", epsilon, " with tail_count ", step.tail_count)});
  }
  return out;
}

/// Builds a step from a full vocabulary distribution (index = token id).
///
/// Tokens are ordered by (probability desc, token id asc). The head keeps every
/// token with probability > epsilon plus the first one at or below it, which
/// is the shortest epsilon-complete head.
[[nodiscard]] inline StepDistribution truncate_distribution(std::span<const double> probs, std::size_t chosen_token,
                                                            double epsilon) {
  if (probs.empty()) throw DataError("cannot truncate an empty distribution");
  if (chosen_token >= probs.size()) throw DataError("chosen token outside vocabulary");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  StepDistribution step;
  std::size_t cut = 0;
  while (cut < order.size() && probs[order[cut]] > epsilon) ++cut;
  if (cut < order.size()) ++cut;  // first entry <= epsilon
  step.head.reserve(cut);
  for (std::size_t i = 0; i < cut; ++i) {
    step.head.push_back({static_cast<std::int64_t>(order[i]), probs[order[i]]});
    if (order[i] == chosen_token) step.chosen.index = i;
  }
  for (std::size_t i = cut; i < order.size(); ++i) step.tail_mass += probs[order[i]];
  step.tail_count = order.size() - cut;
  step.chosen.probability = probs[chosen_token];
  return step;
}

}  // namespace boostedprob
