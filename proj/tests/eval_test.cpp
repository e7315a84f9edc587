// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "boostedprob/eval.hpp"
#include "oracles.hpp"
#include "sweep_corpus.hpp"
#include "test_util.hpp"

using namespace boostedprob;
using testutil::step;

namespace {

constexpr TokenLabel OK = TokenLabel::Ok;
constexpr TokenLabel BAD = TokenLabel::Bad;

std::vector<double> v(std::initializer_list<double> xs) { return xs; }

Corpus gold_corpus(const std::vector<double>& gold) {
  Corpus c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    SequenceRecord rec;
    rec.sequence_id = "g" + std::to_string(i);
    rec.steps.push_back(step({1.0}));
    rec.gold_score = gold[i];
    c.records.push_back(rec);
  }
  return c;
}

std::vector<QEResult> results_for(const Corpus& c, const std::vector<double>& scores) {
  std::vector<QEResult> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    QEResult r;
    r.sequence_id = c.records[i].sequence_id;
    r.method = "test";
    r.sequence_score = scores[i];
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST(Pearson, ClosedForms) {
  EXPECT_NEAR(*pearson(v({1, 2, 3}), v({2, 4, 6})), 1.0, 1e-12);
  EXPECT_NEAR(*pearson(v({1, 2, 3}), v({6, 4, 2})), -1.0, 1e-12);
  EXPECT_NEAR(*pearson(v({1, 2, 3}), v({1, 1, 2})), std::sqrt(3.0) / 2.0, 1e-12);
  EXPECT_FALSE(pearson(v({1, 2, 3}), v({5, 5, 5})).has_value());
  EXPECT_THROW((void)pearson(v({1, 2}), v({1, 2, 3})), DataError);
  EXPECT_THROW((void)pearson(v({1}), v({1})), DataError);
}

TEST(Mcc, ClosedForms) {
  EXPECT_DOUBLE_EQ(mcc(1, 0, 1, 0), 1.0);
  EXPECT_DOUBLE_EQ(mcc(1, 1, 1, 1), 0.0);
  EXPECT_NEAR(mcc(3, 1, 4, 2), 10.0 / std::sqrt(600.0), 1e-12);
  EXPECT_DOUBLE_EQ(mcc(5, 3, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(mcc(0, 2, 0, 2), -1.0);
}

TEST(TuneThreshold, Examples) {
  const auto perfect = tune_threshold(v({0.1, 0.4, 0.6, 0.9}), std::vector<TokenLabel>{BAD, BAD, OK, OK});
  EXPECT_DOUBLE_EQ(perfect.threshold, 0.5);
  EXPECT_DOUBLE_EQ(perfect.mcc, 1.0);

  const auto inverted = tune_threshold(v({0.2, 0.8}), std::vector<TokenLabel>{OK, BAD});
  const auto want = oracle::exhaustive_threshold({0.2, 0.8}, {OK, BAD});
  EXPECT_DOUBLE_EQ(inverted.threshold, 0.2);
  EXPECT_DOUBLE_EQ(inverted.threshold, want.threshold);
  EXPECT_DOUBLE_EQ(inverted.mcc, 0.0);

  const auto flat = tune_threshold(v({0.3, 0.3, 0.3}), std::vector<TokenLabel>{OK, BAD, OK});
  EXPECT_DOUBLE_EQ(flat.threshold, 0.3);
  EXPECT_DOUBLE_EQ(flat.mcc, 0.0);

  EXPECT_THROW((void)tune_threshold(v({0.1, 0.2}), std::vector<TokenLabel>{OK, OK}), DataError);
}

TEST(TuneThreshold, MidpointBetweenAdjacentDoubles) {
  const double lo = 0.5;
  const double hi = std::nextafter(lo, 1.0);
  EXPECT_EQ(threshold_midpoint(lo, hi), hi);
  const auto choice = tune_threshold(std::vector<double>{lo, hi}, std::vector<TokenLabel>{BAD, OK});
  EXPECT_EQ(choice.threshold, hi);
  EXPECT_DOUBLE_EQ(choice.mcc, 1.0);
}

// Property: the incremental scan agrees with recounting every candidate.
TEST(TuneThreshold, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(8);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t n = 2 + rng() % 60;
    const int levels = 1 + static_cast<int>(rng() % 12);
    std::vector<double> scores(n);
    std::vector<TokenLabel> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % levels) / levels;
      labels[i] = rng() % 2 ? OK : BAD;
    }
    labels[0] = OK;
    labels[1] = BAD;
    const auto got = tune_threshold(scores, labels);
    const auto want = oracle::exhaustive_threshold(scores, labels);
    ASSERT_EQ(got.threshold, want.threshold) << "iter " << iter;
    ASSERT_EQ(got.mcc, want.mcc) << "iter " << iter;
  }
}

TEST(EvaluateSequence, Correlation) {
  const auto corpus = gold_corpus({10, 50, 90});
  EXPECT_NEAR(*evaluate_sequence(corpus, results_for(corpus, {0.1, 0.5, 0.9})).pearson, 1.0, 1e-12);
  EXPECT_NEAR(*evaluate_sequence(corpus, results_for(corpus, {-10, -50, -90})).pearson, -1.0, 1e-12);
  const auto report = evaluate_sequence(corpus, results_for(corpus, {10, 50, 90}), "g");
  EXPECT_EQ(report.n, 3u);
  EXPECT_EQ(report.grouping, "g");
  EXPECT_EQ(report.metric_name(), "pearson");

  auto missing = corpus;
  missing.records[1].gold_score.reset();
  EXPECT_THROW((void)evaluate_sequence(missing, results_for(corpus, {1, 2, 3})), DataError);
  EXPECT_THROW((void)evaluate_sequence(gold_corpus({1}), results_for(gold_corpus({1}), {1})), DataError);
}

TEST(EvaluateTokens, MicroAndMacro) {
  Corpus c;
  for (int r = 0; r < 2; ++r) {
    SequenceRecord rec;
    rec.sequence_id = "t" + std::to_string(r);
    rec.steps = {step({1.0}), step({1.0})};
    rec.token_labels = std::vector<TokenLabel>{OK, BAD};
    c.records.push_back(rec);
  }
  std::vector<QEResult> res(2);
  res[0].sequence_id = "t0";
  res[0].token_scores = {0.9, 0.1};  // perfectly separated at 0.5
  res[1].sequence_id = "t1";
  res[1].token_scores = {0.9, 0.9};  // both predicted OK
  const auto micro = evaluate_tokens(c, res, 0.5);
  // pooled: tp=2, fp=1, tn=1, fn=0
  EXPECT_NEAR(*micro.mcc, mcc(2, 1, 1, 0), 1e-15);
  EXPECT_EQ(micro.n, 4u);
  const auto macro = evaluate_tokens(c, res, 0.5, TokenAveraging::Macro);
  EXPECT_NEAR(*macro.mcc, 0.5, 1e-15);
  EXPECT_EQ(micro.metric_name(), "mcc");
}

TEST(Sweep, DefaultGridShapeAndOrder) {
  const auto corpus = testcorpus::sweep_corpus();
  const auto table = sweep(corpus, kDefaultGridX, kDefaultGridEpsilon, SweepTarget::MccVsLabels);
  ASSERT_EQ(table.entries.size(), 15u);
  std::set<std::pair<double, double>> cells;
  for (const auto& e : table.entries) {
    ASSERT_TRUE(e.report) << e.error;
    cells.insert({e.x_percent, e.epsilon});
  }
  EXPECT_EQ(cells.size(), 15u);
  for (std::size_t i = 1; i < table.entries.size(); ++i) {
    EXPECT_GE(*table.entries[i - 1].metric(), *table.entries[i].metric());
  }
  // The corpus is built so that only the default setting separates the labels.
  EXPECT_DOUBLE_EQ(table.entries[0].x_percent, 0.3);
  EXPECT_DOUBLE_EQ(table.entries[0].epsilon, 0.005);
  EXPECT_DOUBLE_EQ(*table.entries[0].metric(), 1.0);
  EXPECT_LT(*table.entries[1].metric(), 1.0);
}

TEST(Sweep, FailedCellsSortLastAndWorkersAgree) {
  const auto corpus = testcorpus::sweep_corpus(12);
  const std::vector<double> xs{0.3, 1.5};
  const std::vector<double> eps{0.005};
  const auto table = sweep(corpus, xs, eps, SweepTarget::PearsonVsGold);
  ASSERT_EQ(table.entries.size(), 2u);
  EXPECT_TRUE(table.entries[0].report);
  EXPECT_FALSE(table.entries[1].report);
  EXPECT_FALSE(table.entries[1].error.empty());

  std::ostringstream a, b;
  write_sweep_csv(a, sweep(corpus, kDefaultGridX, kDefaultGridEpsilon, SweepTarget::MccVsLabels, {}, 1));
  write_sweep_csv(b, sweep(corpus, kDefaultGridX, kDefaultGridEpsilon, SweepTarget::MccVsLabels, {}, 6));
  EXPECT_EQ(a.str(), b.str());
}

TEST(ReportCsv, Format) {
  EvalReport r;
  r.method = "boostedprob";
  r.grouping = "en,de";
  r.pearson = 0.5;
  r.n = 3;
  std::ostringstream out;
  write_reports_csv(out, std::vector<EvalReport>{r});
  EXPECT_EQ(out.str(), "method,grouping,metric,value,n,threshold,x,epsilon\nboostedprob,\"en,de\",pearson,0.5,3,,,\n");
}
