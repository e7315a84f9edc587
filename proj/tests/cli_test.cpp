// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "boostedprob/cli.hpp"
#include "test_util.hpp"

using boostedprob::cli::run;
using testutil::temp_path;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(BOOSTEDPROB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kGood =
    R"({"id":"a","steps":[{"head":[[1,0.48],[2,0.47],[3,0.004]],"tail_mass":0.046,"tail_count":12,"chosen":{"index":1}}],"gold_score":1})"
    "\n"
    R"({"id":"b","steps":[{"head":[[1,0.9],[2,0.004]],"tail_mass":0.096,"tail_count":48,"chosen":{"prob":0.002}}],"gold_score":0})"
    "\n";

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, 1);
  EXPECT_EQ(call({"frobnicate"}).code, 1);
  EXPECT_EQ(call({"score", "--in", "x.jsonl"}).code, 1);  // --out missing
  const auto in = temp_path("cli_good.jsonl");
  write(in, kGood);
  const auto bad_method = call({"score", "--in", in, "--out", temp_path("o.jsonl"), "--method", "bleu"});
  EXPECT_EQ(bad_method.code, 1);
  EXPECT_NE(bad_method.err.find("usage error"), std::string::npos);
  EXPECT_EQ(call({"score", "--in", in, "--out", temp_path("o.jsonl"), "--x", "1.5"}).code, 1);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST(Cli, ScoreWritesJsonlCsvAndSidecar) {
  const auto in = temp_path("cli_score_in.jsonl");
  const auto out = temp_path("cli_score_out.jsonl");
  const auto csv = temp_path("cli_score_out.csv");
  write(in, kGood);
  const auto r = call({"score", "--in", in, "--out", out, "--csv", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto jsonl = slurp(out);
  EXPECT_EQ(count_lines(jsonl), 2u);
  EXPECT_NE(jsonl.find(R"({"id":"a","method":"boostedprob","token_scores":[0.95)"), std::string::npos) << jsonl;
  EXPECT_EQ(slurp(csv), "id,method,sequence_score\na,boostedprob,0.95\nb,boostedprob,0.002\n");
  EXPECT_NE(slurp(out + ".meta.json").find("created_utc"), std::string::npos);
}

TEST(Cli, DataErrors) {
  EXPECT_EQ(call({"score", "--in", temp_path("missing.jsonl"), "--out", temp_path("o.jsonl")}).code, 2);
  const auto bad = temp_path("cli_bad.jsonl");
  write(bad, R"({"id":"x","steps":[{"head":[[1,0.6],[2,0.5]],"tail_mass":0,"tail_count":0,"chosen":{"index":0}}]})");
  const auto r = call({"score", "--in", bad, "--out", temp_path("o.jsonl")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;

  // A record the method cannot score: the rest are still written.
  const auto partial = temp_path("cli_partial.jsonl");
  write(partial, kGood);
  const auto out = temp_path("cli_partial_out.jsonl");
  const auto mc = call({"score", "--in", partial, "--out", out, "--method", "monte-carlo-entropy"});
  EXPECT_EQ(mc.code, 2);
  EXPECT_NE(mc.err.find("record 'a'"), std::string::npos);
  EXPECT_EQ(count_lines(slurp(out)), 0u);
}

TEST(Cli, EvalSequenceAndTokens) {
  const auto in = temp_path("cli_eval.jsonl");
  write(in, kGood);
  const auto csv = temp_path("cli_eval.csv");
  const auto r = call({"eval", "--in", in, "--csv", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(csv).find(",pearson,1,2,,,\n"), std::string::npos) << slurp(csv);

  const auto synth = temp_path("cli_eval_synth.jsonl");
  ASSERT_EQ(call({"synth", "--out", synth, "--n", "40"}).code, 0);
  const auto tok = call({"eval", "--tokens", "--dev", synth, "--test", synth});
  ASSERT_EQ(tok.code, 0) << tok.err;
  EXPECT_NE(tok.out.find("mcc"), std::string::npos);
  EXPECT_EQ(call({"eval", "--tokens", "--dev", synth}).code, 1);
  EXPECT_EQ(call({"tune", "--dev", synth}).code, 0);
  EXPECT_EQ(call({"tune", "--dev", in}).code, 2);  // no labels
}

TEST(Cli, SynthIsByteIdentical) {
  const auto a = temp_path("cli_synth_a.jsonl");
  const auto b = temp_path("cli_synth_b.jsonl");
  ASSERT_EQ(call({"synth", "--out", a, "--n", "30", "--seed", "9"}).code, 0);
  ASSERT_EQ(call({"synth", "--out", b, "--n", "30", "--seed", "9"}).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(count_lines(slurp(a)), 31u);  // metadata + records
  EXPECT_EQ(call({"synth", "--out", a, "--k-min", "7"}).code, 1);
}

TEST(Cli, SweepTableShapeAndDeterminism) {
  const auto dev = temp_path("cli_sweep_dev.jsonl");
  ASSERT_EQ(call({"synth", "--out", dev, "--n", "60"}).code, 0);
  const auto a = temp_path("cli_sweep_a.csv");
  const auto b = temp_path("cli_sweep_b.csv");
  ASSERT_EQ(call({"sweep", "--dev", dev, "--out", a}).code, 0);
  ASSERT_EQ(call({"--workers", "4", "sweep", "--dev", dev, "--out", b}).code, 0);
  const auto text = slurp(a);
  EXPECT_EQ(count_lines(text), 16u);
  EXPECT_EQ(text, slurp(b));
  EXPECT_EQ(call({"sweep", "--dev", dev, "--out", a, "--target", "bleu"}).code, 1);
}

TEST(Cli, TheoryAndCompareFinders) {
  const auto theory = call({"theory"});
  EXPECT_EQ(theory.code, 0);
  EXPECT_NE(theory.out.find("27/27 cells pass"), std::string::npos);

  const auto dev = temp_path("cli_cmp_dev.jsonl");
  const auto test = temp_path("cli_cmp_test.jsonl");
  ASSERT_EQ(call({"synth", "--out", dev, "--n", "40", "--seed", "1"}).code, 0);
  ASSERT_EQ(call({"synth", "--out", test, "--n", "40", "--seed", "2"}).code, 0);
  const auto csv = temp_path("cli_cmp.csv");
  const auto r = call({"compare-finders", "--dev", dev, "--test", test, "--finders", "jump-cut,top-k=1/8,min-p",
                       "--csv", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(csv)), 4u);
  EXPECT_EQ(call({"compare-finders", "--dev", dev, "--test", test, "--finders", ""}).code, 1);
  EXPECT_EQ(call({"compare-finders", "--dev", dev, "--test", test, "--finders", "top-k=x"}).code, 1);
  EXPECT_EQ(call({"compare-finders", "--dev", dev, "--test", test, "--finders", "beam"}).code, 1);
}

TEST(CliBinary, ExitCodes) {
  const auto in = temp_path("cli_bin.jsonl");
  write(in, kGood);
  EXPECT_EQ(run_binary(""), 1);
  EXPECT_EQ(run_binary("--help"), 0);
  EXPECT_EQ(run_binary("score --in " + in + " --out " + temp_path("cli_bin_out.jsonl")), 0);
  EXPECT_EQ(run_binary("score --in " + temp_path("nope.jsonl") + " --out " + temp_path("x.jsonl")), 2);
  EXPECT_EQ(run_binary("theory --k-max 1"), 1);
}

TEST(CliBinary, ConfigFileAndEnvironmentWorkers) {
  const auto in = temp_path("cli_cfg_in.jsonl");
  write(in, kGood);
  const auto cfg = temp_path("cli.toml");
  write(cfg, "[score]\nmethod = \"raw-probability\"\n");
  const auto out = temp_path("cli_cfg_out.jsonl");
  EXPECT_EQ(run_binary("--config " + cfg + " score --in " + in + " --out " + out), 0);
  EXPECT_NE(slurp(out).find("raw-probability"), std::string::npos) << slurp(out);
  EXPECT_EQ(run_binary("score --in " + in + " --out " + out), 0);
  const std::string env = "BOOSTEDPROB_WORKERS=3 ";
  const int status = std::system((env + BOOSTEDPROB_CLI_PATH + " score --in " + in + " --out " + out +
                                  " >/dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(status), 0);
}
