// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file cluster.hpp
 * @brief Dominant-cluster finders over a sorted step distribution.
 *
 * Every finder returns the number c of leading head entries that form the
 * dominant cluster, together with their summed probability. Jump-cut looks for
 * the last "significant" drop between consecutive sorted probabilities; the
 * other five are the usual truncation rules from sampling, reused here only to
 * pick a cluster.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "boostedprob/distribution.hpp"
#include "boostedprob/entropy.hpp"

namespace boostedprob {

struct DominantCluster {
  std::size_t cutting_index = 1;  // c: head entries [0, c) are dominant
  double mass = 0.0;

  [[nodiscard]] std::size_t size() const noexcept { return cutting_index; }
  [[nodiscard]] bool contains(std::size_t head_index) const noexcept { return head_index < cutting_index; }

  friend bool operator==(const DominantCluster&, const DominantCluster&) = default;
};

enum class ClusterMethod { JumpCut, TopK, TopP, EpsilonCut, EtaCut, MinP };

inline constexpr ClusterMethod kAllClusterMethods[] = {ClusterMethod::JumpCut,    ClusterMethod::TopK,
                                                       ClusterMethod::TopP,       ClusterMethod::EpsilonCut,
                                                       ClusterMethod::EtaCut,     ClusterMethod::MinP};

[[nodiscard]] inline std::string_view to_string(ClusterMethod m) noexcept {
  switch (m) {
    case ClusterMethod::JumpCut: return "jump-cut";
    case ClusterMethod::TopK: return "top-k";
    case ClusterMethod::TopP: return "top-p";
    case ClusterMethod::EpsilonCut: return "epsilon-cut";
    case ClusterMethod::EtaCut: return "eta-cut";
    case ClusterMethod::MinP: return "min-p";
  }
  return "?";
}

[[nodiscard]] inline ClusterMethod parse_cluster_method(std::string_view name) {
  for (auto m : kAllClusterMethods) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown cluster method '" + std::string(name) + "'");
}

struct ClusterFinderConfig {
  ClusterMethod method = ClusterMethod::JumpCut;
  double x_percent = 0.3;
  double epsilon = 0.005;
  std::size_t k = 1;
  double p = 0.9;  // top-p mass, or the min-p scale
  double eta = 0.01;
  // Cut at the first significant drop instead of the last (jump-cut only).
  bool first_significant_drop = false;

  /// Throws std::invalid_argument when a parameter used by `method` is out of range.
  void validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    switch (method) {
      case ClusterMethod::JumpCut:
        if (!(x_percent > 0.0 && x_percent < 1.0)) fail("x_percent must be in (0,1)");
        if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must be in (0,1)");
        break;
      case ClusterMethod::EpsilonCut:
        if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must be in (0,1)");
        break;
      case ClusterMethod::TopK:
        if (k < 1) fail("k must be >= 1");
        break;
      case ClusterMethod::TopP:
      case ClusterMethod::MinP:
        if (!(p > 0.0 && p <= 1.0)) fail("p must be in (0,1]");
        break;
      case ClusterMethod::EtaCut:
        if (!(eta > 0.0 && eta < 1.0)) fail("eta must be in (0,1)");
        break;
    }
  }

  /// Short "name(param=value)" label used in reports.
  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os << to_string(method) << '(';
    switch (method) {
      case ClusterMethod::JumpCut:
        os << "x=" << x_percent << ",eps=" << epsilon;
        if (first_significant_drop) os << ",first";
        break;
      case ClusterMethod::TopK: os << "k=" << k; break;
      case ClusterMethod::TopP:
      case ClusterMethod::MinP: os << "p=" << p; break;
      case ClusterMethod::EpsilonCut: os << "eps=" << epsilon; break;
      case ClusterMethod::EtaCut: os << "eta=" << eta; break;
    }
    os << ')';
    return os.str();
  }
};

namespace detail {

inline DominantCluster prefix_cluster(const StepDistribution& step, std::size_t c) {
  c = std::clamp<std::size_t>(c, 1, step.head.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < c; ++i) mass += step.head[i].prob;
  return {c, mass};
}

inline void require_head(const StepDistribution& step) {
  if (step.head.empty()) throw DataError("step has an empty head");
}

}  // namespace detail

/// Jump-cut without the epsilon-completeness precondition.
///
/// Position i (1-based) is significant when p_(i) - p_(i+1) > max(x * p_(i), eps).
/// Past the last head entry the next value is the mean tail probability, or 0
/// when there is no tail mass. The cluster ends at the last significant
/// position (or the first, with `first_drop`); with none, c = 1.
[[nodiscard]] inline DominantCluster jump_cut_unchecked(const StepDistribution& step, double x_percent, double epsilon,
                                                        bool first_drop = false) {
  detail::require_head(step);
  const auto& head = step.head;
  const double end_value = step.tail_mean();
  std::size_t c = 0;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const double upper = head[i].prob;
    const double lower = i + 1 < head.size() ? head[i + 1].prob : end_value;
    if (upper - lower > std::max(upper * x_percent, epsilon)) {
      c = i + 1;
      if (first_drop) break;
    }
  }
  return detail::prefix_cluster(step, c == 0 ? 1 : c);
}

/// Jump-cut dominant cluster. Throws DataError when the head is not
/// epsilon-complete, since a significant drop could then hide in the tail.
[[nodiscard]] inline DominantCluster jump_cut(const StepDistribution& step, double x_percent, double epsilon,
                                              bool first_drop = false) {
  if (!is_epsilon_complete(step, epsilon)) {
    std::ostringstream os;
    os << "head not epsilon-complete for epsilon " << epsilon << " (last head probability "
       << (step.head.empty() ? 0.0 : step.head.back().prob) << ", tail_count " << step.tail_count << ')';
    throw DataError(os.str());
  }
  return jump_cut_unchecked(step, x_percent, epsilon, first_drop);
}

[[nodiscard]] inline DominantCluster top_k(const StepDistribution& step, std::size_t k) {
  detail::require_head(step);
  return detail::prefix_cluster(step, std::min(k, step.head.size()));
}

/// Shortest prefix whose cumulative mass reaches p, clamped to the head.
[[nodiscard]] inline DominantCluster top_p(const StepDistribution& step, double p) {
  detail::require_head(step);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < step.head.size(); ++i) {
    cumulative += step.head[i].prob;
    if (cumulative >= p) return {i + 1, cumulative};
  }
  return {step.head.size(), cumulative};
}

[[nodiscard]] inline DominantCluster epsilon_cut(const StepDistribution& step, double epsilon) {
  detail::require_head(step);
  std::size_t c = 0;
  while (c < step.head.size() && step.head[c].prob > epsilon) ++c;
  return detail::prefix_cluster(step, c);
}

/// Threshold min(eta, sqrt(eta) * exp(-H)) with H the step entropy.
[[nodiscard]] inline double eta_threshold(const StepDistribution& step, double eta) noexcept {
  return std::min(eta, std::sqrt(eta) * std::exp(-step_entropy(step)));
}

[[nodiscard]] inline DominantCluster eta_cut(const StepDistribution& step, double eta) {
  detail::require_head(step);
  const double t = eta_threshold(step, eta);
  std::size_t c = 0;
  while (c < step.head.size() && step.head[c].prob > t) ++c;
  return detail::prefix_cluster(step, c);
}

[[nodiscard]] inline DominantCluster min_p(const StepDistribution& step, double p) {
  detail::require_head(step);
  const double t = step.head.front().prob * p;
  std::size_t c = 0;
  while (c < step.head.size() && step.head[c].prob >= t) ++c;
  return detail::prefix_cluster(step, c);
}

[[nodiscard]] inline DominantCluster find_cluster(const StepDistribution& step, const ClusterFinderConfig& config) {
  switch (config.method) {
    case ClusterMethod::JumpCut:
      return jump_cut(step, config.x_percent, config.epsilon, config.first_significant_drop);
    case ClusterMethod::TopK: return top_k(step, config.k);
    case ClusterMethod::TopP: return top_p(step, config.p);
    case ClusterMethod::EpsilonCut: return epsilon_cut(step, config.epsilon);
    case ClusterMethod::EtaCut: return eta_cut(step, config.eta);
    case ClusterMethod::MinP: return min_p(step, config.p);
  }
  throw std::logic_error("unhandled cluster method");
}

}  // namespace boostedprob
