// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file cli.hpp
 * @brief The `boostedprob` command line.
 *
 * Subcommands: score, eval, tune, sweep, synth, theory, compare-finders.
 * Exit codes: 0 success, 1 usage error, 2 data error. Output files are
 * written to a temporary sibling and renamed into place; run metadata
 * (arguments, wall-clock time) goes to `<out>.meta.json`, never into the
 * data files themselves.
 */
#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "boostedprob/cluster.hpp"
#include "boostedprob/compare.hpp"
#include "boostedprob/corpus_io.hpp"
#include "boostedprob/eval.hpp"
#include "boostedprob/parallel.hpp"
#include "boostedprob/scoring.hpp"
#include "boostedprob/synthlab.hpp"

namespace boostedprob::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Writes a file atomically: content goes to `<path>.tmp` first and is
/// renamed over `path` only once fully written.
inline void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move output into '" + path + "'");
  }
}

namespace detail {

struct MethodFlags {
  std::string method = "boostedprob";
  std::string finder = "jump-cut";
  double x = 0.3;
  double eps = 0.005;
  std::size_t k = 1;
  double p = 0.9;
  double eta = 0.01;
  bool first_drop = false;
  std::string aggregation = "mean";
  bool length_normalize = false;
  double ingest_eps = 0.0;  // 0: use eps

  void attach(CLI::App& app) {
    app.add_option("--method", method, "boostedprob | raw-probability | entropy | monte-carlo-entropy")
        ->capture_default_str();
    app.add_option("--finder", finder, "cluster finder for boostedprob")->capture_default_str();
    app.add_option("--x", x, "jump-cut relative drop threshold")->capture_default_str();
    app.add_option("--eps", eps, "jump-cut absolute drop threshold / epsilon-cut threshold")->capture_default_str();
    app.add_option("--k", k, "top-k cluster size")->capture_default_str();
    app.add_option("--p", p, "top-p mass or min-p scale")->capture_default_str();
    app.add_option("--eta", eta, "eta-cut parameter")->capture_default_str();
    app.add_flag("--first-drop", first_drop, "jump-cut: cut at the first significant drop");
    app.add_option("--aggregation", aggregation, "mean | median | min | nr-dominant")->capture_default_str();
    app.add_flag("--length-normalize", length_normalize, "monte-carlo-entropy: divide by sample length");
    app.add_option("--ingest-eps", ingest_eps, "epsilon-completeness required when reading (default: --eps)");
  }

  [[nodiscard]] MethodConfig config() const {
    MethodConfig c;
    c.method = parse_score_method(method);
    c.cluster.method = parse_cluster_method(finder);
    c.cluster.x_percent = x;
    c.cluster.epsilon = eps;
    c.cluster.k = k;
    c.cluster.p = p;
    c.cluster.eta = eta;
    c.cluster.first_significant_drop = first_drop;
    c.aggregation = parse_aggregation(aggregation);
    c.length_normalize = length_normalize;
    c.validate();
    return c;
  }

  [[nodiscard]] double ingestion_epsilon() const { return ingest_eps > 0.0 ? ingest_eps : eps; }
};

inline SweepTarget parse_target(const std::string& s) {
  if (s == "pearson") return SweepTarget::PearsonVsGold;
  if (s == "mcc") return SweepTarget::MccVsLabels;
  throw std::invalid_argument("unknown target '" + s + "' (expected pearson or mcc)");
}

inline std::string grouping_of(const Corpus& corpus, const std::string& fallback) {
  if (const auto it = corpus.metadata.find("grouping"); it != corpus.metadata.end()) return it->second;
  return fallback;
}

/// Finder argument: `name` for the default grid, or `name=v1/v2/...` with values
/// of the finder's main parameter (k, p, epsilon or eta); jump-cut values are
/// `x@eps` pairs.
inline FinderCandidate parse_finder_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  const std::string name = spec.substr(0, eq);
  const ClusterMethod method = parse_cluster_method(name);
  if (eq == std::string::npos) return default_finder(method);
  FinderCandidate out{spec, {}};
  std::stringstream values(spec.substr(eq + 1));
  std::string item;
  while (std::getline(values, item, '/')) {
    ClusterFinderConfig c;
    c.method = method;
    try {
      switch (method) {
        case ClusterMethod::JumpCut: {
          const auto at = item.find('@');
          if (at == std::string::npos) throw std::invalid_argument("jump-cut values must be x@eps");
          c.x_percent = std::stod(item.substr(0, at));
          c.epsilon = std::stod(item.substr(at + 1));
          break;
        }
        case ClusterMethod::TopK: c.k = static_cast<std::size_t>(std::stoul(item)); break;
        case ClusterMethod::TopP:
        case ClusterMethod::MinP: c.p = std::stod(item); break;
        case ClusterMethod::EpsilonCut: c.epsilon = std::stod(item); break;
        case ClusterMethod::EtaCut: c.eta = std::stod(item); break;
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad finder value '" + item + "' in '" + spec + "'");
    }
    c.validate();
    out.grid.push_back(c);
  }
  if (out.grid.empty()) throw std::invalid_argument("finder '" + spec + "' lists no values");
  return out;
}

inline void write_sidecar(const std::string& out_path, const std::vector<std::string>& args,
                          const nlohmann::ordered_json& extra) {
  nlohmann::ordered_json meta;
  meta["args"] = args;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ts;
  ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  meta["created_utc"] = ts.str();
  for (const auto& [key, value] : extra.items()) meta[key] = value;
  write_file_atomic(out_path + ".meta.json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
}

inline void report_record_errors(std::ostream& err, const std::vector<RecordError>& errors) {
  for (const auto& e : errors) err << "error: record '" << e.sequence_id << "': " << e.message << '\n';
}

}  // namespace detail

/// Runs the command line. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality estimation from per-step output distributions", "boostedprob"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file mirroring the flags; flags win on conflict");
  std::size_t workers = default_workers();
  app.add_option("--workers", workers, "parallel scoring threads (env BOOSTEDPROB_WORKERS)")->capture_default_str();

  // score
  auto* score_cmd = app.add_subcommand("score", "score a corpus with one method");
  detail::MethodFlags score_flags;
  std::string score_in, score_out, score_csv;
  score_flags.attach(*score_cmd);
  score_cmd->add_option("--in", score_in, "input corpus (.jsonl)")->required();
  score_cmd->add_option("--out", score_out, "output scores (.jsonl)")->required();
  score_cmd->add_option("--csv", score_csv, "also write id,method,sequence_score CSV");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a method against gold scores or token labels");
  detail::MethodFlags eval_flags;
  std::vector<std::string> eval_in;
  std::string eval_dev, eval_test, eval_csv;
  bool eval_tokens = false, eval_macro = false, eval_pooled = false;
  eval_flags.attach(*eval_cmd);
  eval_cmd->add_option("--in", eval_in, "corpora for sequence-level Pearson, one group per file");
  eval_cmd->add_flag("--tokens", eval_tokens, "token-level MCC: tune threshold on --dev, report on --test");
  eval_cmd->add_option("--dev", eval_dev, "dev corpus for threshold tuning");
  eval_cmd->add_option("--test", eval_test, "test corpus");
  eval_cmd->add_flag("--macro", eval_macro, "average MCC per sequence instead of pooling tokens");
  eval_cmd->add_flag("--pooled", eval_pooled, "also report Pearson over all --in files pooled");
  eval_cmd->add_option("--csv", eval_csv, "write the report as CSV");

  // tune
  auto* tune_cmd = app.add_subcommand("tune", "find the OK/BAD threshold maximizing dev MCC");
  detail::MethodFlags tune_flags;
  std::string tune_dev;
  tune_flags.attach(*tune_cmd);
  tune_cmd->add_option("--dev", tune_dev, "dev corpus with token labels")->required();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "grid search over jump-cut x and epsilon");
  std::string sweep_dev, sweep_out, sweep_target = "pearson", sweep_aggregation = "mean";
  std::vector<double> grid_x = kDefaultGridX, grid_eps = kDefaultGridEpsilon;
  double sweep_ingest_eps = 0.0;
  sweep_cmd->add_option("--dev", sweep_dev, "dev corpus")->required();
  sweep_cmd->add_option("--out", sweep_out, "output CSV")->required();
  sweep_cmd->add_option("--grid-x", grid_x, "candidate x values")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--grid-eps", grid_eps, "candidate epsilon values")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--target", sweep_target, "pearson | mcc")->capture_default_str();
  sweep_cmd->add_option("--aggregation", sweep_aggregation, "mean | median | min | nr-dominant")
      ->capture_default_str();
  sweep_cmd->add_option("--ingest-eps", sweep_ingest_eps, "epsilon-completeness on read (default: smallest grid eps)");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labelled corpus");
  synth::SynthSpec spec;
  std::string synth_out, synth_mode = "overconfident";
  synth_cmd->add_option("--out", synth_out, "output corpus (.jsonl)")->required();
  synth_cmd->add_option("--n", spec.n_sequences, "number of sequences")->capture_default_str();
  synth_cmd->add_option("--steps-min", spec.steps_min)->capture_default_str();
  synth_cmd->add_option("--steps-max", spec.steps_max)->capture_default_str();
  synth_cmd->add_option("--k-min", spec.k_min, "smallest correct-token cluster")->capture_default_str();
  synth_cmd->add_option("--k-max", spec.k_max, "largest correct-token cluster")->capture_default_str();
  synth_cmd->add_option("--q-min", spec.q_min, "smallest correct-token mass")->capture_default_str();
  synth_cmd->add_option("--q-max", spec.q_max, "largest correct-token mass")->capture_default_str();
  synth_cmd->add_option("--competence", spec.competence, "probability a step is competent")->capture_default_str();
  synth_cmd->add_option("--error-mode", synth_mode, "overconfident | uncertain | mixed")->capture_default_str();
  synth_cmd->add_option("--seed", spec.seed)->capture_default_str();
  synth_cmd->add_option("--vocab", spec.vocab_size, "vocabulary size")->capture_default_str();
  synth_cmd->add_option("--residue-eps", spec.epsilon, "leftover mass is split below this / 2")
      ->capture_default_str();

  // theory
  auto* theory_cmd = app.add_subcommand("theory", "check the k-way underconfidence bound");
  std::size_t theory_k_max = 10;
  std::vector<double> theory_q{0.9, 0.95, 0.99};
  double theory_x = 0.3, theory_eps = 0.005;
  theory_cmd->add_option("--k-max", theory_k_max)->capture_default_str();
  theory_cmd->add_option("--q", theory_q, "cluster masses")->delimiter(',')->capture_default_str();
  theory_cmd->add_option("--x", theory_x)->capture_default_str();
  theory_cmd->add_option("--eps", theory_eps)->capture_default_str();

  // compare-finders
  auto* cmp_cmd = app.add_subcommand("compare-finders", "tune each cluster finder on dev, rank on test");
  std::string cmp_dev, cmp_test, cmp_target = "mcc", cmp_csv, cmp_aggregation = "mean";
  std::vector<std::string> cmp_finders{"jump-cut", "top-k", "top-p", "epsilon-cut", "eta-cut", "min-p"};
  double cmp_ingest_eps = 0.005;
  cmp_cmd->add_option("--dev", cmp_dev)->required();
  cmp_cmd->add_option("--test", cmp_test)->required();
  cmp_cmd->add_option("--finders", cmp_finders, "finders: name or name=v1/v2 (jump-cut: x@eps)")
      ->delimiter(',')
      ->capture_default_str();
  cmp_cmd->add_option("--target", cmp_target, "pearson | mcc")->capture_default_str();
  cmp_cmd->add_option("--aggregation", cmp_aggregation)->capture_default_str();
  cmp_cmd->add_option("--csv", cmp_csv, "write the ranking as CSV");
  cmp_cmd->add_option("--ingest-eps", cmp_ingest_eps)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (score_cmd->parsed()) {
      const auto config = score_flags.config();
      const auto corpus = load_corpus(score_in, score_flags.ingestion_epsilon());
      const auto outcome = score_corpus(corpus, config, workers);
      write_file_atomic(score_out, [&](std::ostream& os) {
        for (const auto& r : outcome.results) {
          nlohmann::ordered_json j;
          j["id"] = r.sequence_id;
          j["method"] = r.method;
          j["token_scores"] = r.token_scores;
          j["sequence_score"] = r.sequence_score;
          os << j.dump() << '\n';
        }
      });
      if (!score_csv.empty()) {
        write_file_atomic(score_csv, [&](std::ostream& os) {
          os << "id,method,sequence_score\n";
          for (const auto& r : outcome.results) {
            os << boostedprob::detail::csv_field(r.sequence_id) << ',' << r.method << ','
               << boostedprob::detail::format_number(r.sequence_score) << '\n';
          }
        });
      }
      detail::write_sidecar(score_out, args,
                            {{"records", corpus.records.size()}, {"scored", outcome.results.size()},
                             {"failed", outcome.errors.size()}});
      detail::report_record_errors(err, outcome.errors);
      out << "scored " << outcome.results.size() << " of " << corpus.records.size() << " records\n";
      return outcome.ok() ? kExitOk : kExitData;
    }

    if (eval_cmd->parsed()) {
      const auto config = eval_flags.config();
      const double ingest = eval_flags.ingestion_epsilon();
      std::vector<EvalReport> reports;
      if (eval_tokens) {
        if (eval_dev.empty() || eval_test.empty()) throw std::invalid_argument("--tokens needs --dev and --test");
        const auto dev = load_corpus(eval_dev, ingest);
        const auto test = load_corpus(eval_test, ingest);
        const auto dev_scores = score_corpus(dev, config, workers);
        const auto test_scores = score_corpus(test, config, workers);
        detail::report_record_errors(err, dev_scores.errors);
        detail::report_record_errors(err, test_scores.errors);
        if (!dev_scores.ok() || !test_scores.ok()) return kExitData;
        const auto choice = tune_threshold(dev, dev_scores.results);
        reports.push_back(evaluate_tokens(test, test_scores.results, choice.threshold,
                                          eval_macro ? TokenAveraging::Macro : TokenAveraging::Micro,
                                          detail::grouping_of(test, "test")));
      } else {
        if (eval_in.empty()) throw std::invalid_argument("eval needs --in (or --tokens with --dev/--test)");
        Corpus pooled_corpus;
        std::vector<QEResult> pooled_results;
        for (const auto& path : eval_in) {
          auto corpus = load_corpus(path, ingest);
          auto scored = score_corpus(corpus, config, workers);
          detail::report_record_errors(err, scored.errors);
          if (!scored.ok()) return kExitData;
          reports.push_back(evaluate_sequence(corpus, scored.results, detail::grouping_of(corpus, path)));
          if (!reports.back().pearson) {
            err << "warning: correlation undefined for '" << path << "' (constant scores or gold)\n";
          }
          if (eval_pooled) {
            for (auto& rec : corpus.records) {
              rec.sequence_id = path + "#" + rec.sequence_id;
              pooled_corpus.records.push_back(std::move(rec));
            }
            for (auto& r : scored.results) {
              r.sequence_id = path + "#" + r.sequence_id;
              pooled_results.push_back(std::move(r));
            }
          }
        }
        if (eval_pooled) reports.push_back(evaluate_sequence(pooled_corpus, pooled_results, "pooled"));
      }
      write_reports_table(out, reports);
      if (!eval_csv.empty()) write_file_atomic(eval_csv, [&](std::ostream& os) { write_reports_csv(os, reports); });
      return kExitOk;
    }

    if (tune_cmd->parsed()) {
      const auto config = tune_flags.config();
      const auto dev = load_corpus(tune_dev, tune_flags.ingestion_epsilon());
      const auto scored = score_corpus(dev, config, workers);
      detail::report_record_errors(err, scored.errors);
      if (!scored.ok()) return kExitData;
      const auto choice = tune_threshold(dev, scored.results);
      out << "threshold " << boostedprob::detail::format_number(choice.threshold) << " dev_mcc "
          << boostedprob::detail::format_number(choice.mcc) << '\n';
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      const auto target = detail::parse_target(sweep_target);
      if (grid_x.empty() || grid_eps.empty()) throw std::invalid_argument("sweep grids must be non-empty");
      MethodConfig base;
      base.aggregation = parse_aggregation(sweep_aggregation);
      const double ingest = sweep_ingest_eps > 0.0 ? sweep_ingest_eps : *std::min_element(grid_eps.begin(), grid_eps.end());
      const auto dev = load_corpus(sweep_dev, ingest);
      const auto table = sweep(dev, grid_x, grid_eps, target, base, workers);
      write_file_atomic(sweep_out, [&](std::ostream& os) { write_sweep_csv(os, table); });
      detail::write_sidecar(sweep_out, args, {{"cells", table.entries.size()}});
      for (const auto& e : table.entries) {
        out << "x=" << e.x_percent << " eps=" << e.epsilon << ' ';
        if (e.metric()) {
          out << (target == SweepTarget::PearsonVsGold ? "pearson " : "mcc ")
              << boostedprob::detail::format_number(*e.metric()) << '\n';
        } else {
          out << "error: " << e.error << '\n';
        }
      }
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      spec.error_mode = synth::parse_error_mode(synth_mode);
      spec.validate();
      const auto generated = synth::generate(spec);
      write_file_atomic(synth_out, [&](std::ostream& os) { write_corpus(os, generated.corpus); });
      detail::write_sidecar(synth_out, args, {{"records", generated.corpus.records.size()}});
      out << "wrote " << generated.corpus.records.size() << " sequences\n";
      return kExitOk;
    }

    if (theory_cmd->parsed()) {
      const auto cells = synth::theory_check(theory_k_max, theory_q, theory_x, theory_eps);
      std::size_t passed = 0;
      for (const auto& c : cells) {
        out << "k=" << c.k << " q=" << c.q << " raw=" << boostedprob::detail::format_number(c.raw)
            << " boosted=" << boostedprob::detail::format_number(c.boosted) << " c=" << c.cutting_index << ' '
            << (c.pass ? "PASS" : "FAIL: " + c.detail) << '\n';
        passed += c.pass ? 1 : 0;
      }
      out << passed << '/' << cells.size() << " cells pass\n";
      return passed == cells.size() ? kExitOk : kExitData;
    }

    if (cmp_cmd->parsed()) {
      const auto target = detail::parse_target(cmp_target);
      std::vector<FinderCandidate> finders;
      for (const auto& f : cmp_finders) {
        if (!f.empty()) finders.push_back(detail::parse_finder_spec(f));
      }
      if (finders.empty()) throw std::invalid_argument("compare-finders needs at least one finder");
      const auto dev = load_corpus(cmp_dev, cmp_ingest_eps);
      const auto test = load_corpus(cmp_test, cmp_ingest_eps);
      const auto rows = compare_finders(dev, test, finders, target, parse_aggregation(cmp_aggregation));
      write_finder_table(out, rows);
      if (!cmp_csv.empty()) write_file_atomic(cmp_csv, [&](std::ostream& os) { write_finder_csv(os, rows); });
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace boostedprob::cli
