// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "boostedprob/corpus_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace boostedprob;

namespace {

Corpus parse(const std::string& text, double eps = 0.005) {
  std::istringstream in(text);
  return parse_corpus(in, eps);
}

std::size_t error_line(const std::string& text, std::string* message = nullptr) {
  try {
    (void)parse(text);
  } catch (const ParseError& e) {
    if (message) *message = e.what();
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(ParseCorpus, OneHotRecord) {
  const auto corpus =
      parse(R"({"id":"s1","steps":[{"head":[[5,1.0]],"tail_mass":0,"tail_count":0,"chosen":{"index":0}}]})");
  ASSERT_EQ(corpus.records.size(), 1u);
  const auto& step = corpus.records[0].steps.at(0);
  EXPECT_EQ(step.head.at(0).token_id, 5);
  EXPECT_EQ(step.chosen.index, std::optional<std::size_t>(0));
  EXPECT_DOUBLE_EQ(step.chosen.probability, 1.0);
}

TEST(ParseCorpus, SumAboveToleranceIsRejected) {
  std::string msg;
  EXPECT_EQ(error_line(R"({"id":"s","steps":[{"head":[[1,0.6],[2,0.5]],"tail_mass":0,"tail_count":0,"chosen":{"index":0}}]})",
                       &msg),
            1u);
  EXPECT_NE(msg.find("mass 1.1 outside tolerance"), std::string::npos) << msg;
}

TEST(ParseCorpus, NotEpsilonCompleteIsRejected) {
  std::string msg;
  EXPECT_EQ(error_line(R"({"id":"s","steps":[{"head":[[1,0.7],[2,0.2]],"tail_mass":0.1,"tail_count":100,"chosen":{"index":0}}]})",
                       &msg),
            1u);
  EXPECT_NE(msg.find("epsilon"), std::string::npos) << msg;
  // The same step passes with a large enough epsilon.
  EXPECT_NO_THROW((void)parse(
      R"({"id":"s","steps":[{"head":[[1,0.7],[2,0.2]],"tail_mass":0.1,"tail_count":100,"chosen":{"index":0}}]})", 0.25));
}

TEST(ParseCorpus, ReportsLineOfFirstBadRecord) {
  const std::string good = R"({"id":"a","steps":[{"head":[[1,1.0]],"tail_mass":0,"tail_count":0,"chosen":{"index":0}}]})";
  const std::string text = good + "\n\n" + R"({"id":"b","steps":[]})" + "\n";
  EXPECT_EQ(error_line(text), 3u);
  EXPECT_EQ(error_line(good + "\n" + good), 2u);  // duplicate id
  EXPECT_EQ(error_line("{not json"), 1u);
  EXPECT_EQ(error_line(R"({"id":"a","steps":[{"head":[[1,1.0]],"tail_mass":0,"tail_count":0,"chosen":{"index":3}}]})"), 1u);
  EXPECT_EQ(error_line(R"({"id":"a","steps":[{"head":[[1,1.0]],"tail_mass":0,"tail_count":0,"chosen":{}}]})"), 1u);
  EXPECT_EQ(
      error_line(
          R"({"id":"a","steps":[{"head":[[1,1.0]],"tail_mass":0,"tail_count":0,"chosen":{"index":0}}],"labels":["OK","BAD"]})"),
      1u);
}

TEST(ParseCorpus, MetadataAndOptionalFields) {
  const auto corpus = parse(
      R"({"metadata":{"grouping":"en-de","model":"m"}})"
      "\n"
      R"({"id":"a","steps":[{"head":[[1,0.9],[7,0.004]],"tail_mass":0.096,"tail_count":40,"chosen":{"prob":0.001}}],)"
      R"("gold_score":0.25,"labels":["BAD"],"sample_logprobs":[-1.0,-3.0],"sample_lengths":[4,6],"text":"x"})");
  EXPECT_EQ(corpus.metadata.at("grouping"), "en-de");
  const auto& rec = corpus.records.at(0);
  EXPECT_FALSE(rec.steps[0].chosen.index.has_value());
  EXPECT_DOUBLE_EQ(rec.steps[0].chosen.probability, 0.001);
  EXPECT_EQ(rec.gold_score, std::optional<double>(0.25));
  ASSERT_TRUE(rec.token_labels);
  EXPECT_EQ(rec.token_labels->at(0), TokenLabel::Bad);
  EXPECT_EQ(rec.sampled_sequence_lengths->at(1), 6.0);
  EXPECT_EQ(rec.text, std::optional<std::string>("x"));
}

TEST(ParseCorpus, EmptyInputGivesEmptyCorpus) {
  EXPECT_TRUE(parse("").records.empty());
  EXPECT_TRUE(parse("\n  \n").records.empty());
}

// Property: write then parse reproduces every record, in order.
TEST(ParseCorpus, RoundTrip) {
  std::mt19937_64 rng(11);
  Corpus corpus;
  corpus.metadata["grouping"] = "rt";
  for (int r = 0; r < 200; ++r) {
    SequenceRecord rec;
    rec.sequence_id = "r" + std::to_string(r);
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int t = 0; t < n; ++t) rec.steps.push_back(oracle::random_epsilon_complete_step(rng, 0.005));
    if (rng() % 2) rec.gold_score = std::uniform_real_distribution<double>(-5, 5)(rng);
    if (rng() % 2) {
      rec.token_labels.emplace();
      for (int t = 0; t < n; ++t) rec.token_labels->push_back(rng() % 2 ? TokenLabel::Ok : TokenLabel::Bad);
    }
    if (rng() % 3 == 0) rec.sampled_sequence_logprobs = std::vector<double>{-0.1 * static_cast<double>(r), -2.5};
    corpus.records.push_back(std::move(rec));
  }
  std::stringstream buf;
  write_corpus(buf, corpus);
  const auto back = parse_corpus(buf, 0.005);
  ASSERT_EQ(back.records.size(), corpus.records.size());
  EXPECT_EQ(back.metadata, corpus.metadata);
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& a = corpus.records[i];
    const auto& b = back.records[i];
    ASSERT_EQ(a.sequence_id, b.sequence_id);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
      ASSERT_EQ(a.steps[t].head.size(), b.steps[t].head.size());
      for (std::size_t h = 0; h < a.steps[t].head.size(); ++h) {
        EXPECT_EQ(a.steps[t].head[h].token_id, b.steps[t].head[h].token_id);
        EXPECT_NEAR(a.steps[t].head[h].prob, b.steps[t].head[h].prob, 1e-12);
      }
      EXPECT_NEAR(a.steps[t].tail_mass, b.steps[t].tail_mass, 1e-12);
      EXPECT_EQ(a.steps[t].tail_count, b.steps[t].tail_count);
      EXPECT_EQ(a.steps[t].chosen.index, b.steps[t].chosen.index);
      EXPECT_NEAR(a.steps[t].chosen.probability, b.steps[t].chosen.probability, 1e-12);
    }
    EXPECT_EQ(a.gold_score, b.gold_score);
    EXPECT_EQ(a.token_labels, b.token_labels);
    EXPECT_EQ(a.sampled_sequence_logprobs, b.sampled_sequence_logprobs);
  }
}

TEST(LoadCorpus, MissingFileAndPathInMessage) {
  EXPECT_THROW((void)load_corpus(testutil::temp_path("does-not-exist.jsonl"), 0.005), DataError);
  const auto path = testutil::temp_path("corpus_io_bad.jsonl");
  {
    std::ofstream out(path);
    out << "\n[1,2]\n";
  }
  try {
    (void)load_corpus(path, 0.005);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
}
