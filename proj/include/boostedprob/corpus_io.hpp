// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

/**
 * @file corpus_io.hpp
 * @brief Newline-delimited corpus reader and writer.
 *
 * One record per line:
 *
 *   {"id": "s1",
 *    "steps": [{"head": [[17, 0.61], [4, 0.30], [9, 0.004]],
 *               "tail_mass": 0.086, "tail_count": 32000,
 *               "chosen": {"index": 1}}],
 *    "gold_score": 0.8, "labels": ["OK"], "sample_logprobs": [-3.2, -4.0]}
 *
 * `chosen` is either {"index": i} into the head or {"prob": p} for a token
 * outside it. An optional first line {"metadata": {...}} carries string
 * key/value pairs for the whole corpus. Blank lines are ignored.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <utility>

#include "json.hpp"

#include "boostedprob/distribution.hpp"

namespace boostedprob {

/// A malformed or invalid input line. `line()` is 1-based.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line), detail_(what) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

namespace detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline double require_number(const Json& j, const char* field) {
  if (!j.is_number()) throw DataError(std::string("field '") + field + "' must be a number");
  return j.get<double>();
}

inline std::vector<double> number_array(const Json& j, const char* field) {
  if (!j.is_array()) throw DataError(std::string("field '") + field + "' must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(require_number(v, field));
  return out;
}

inline StepDistribution step_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("step must be an object");
  StepDistribution step;
  const auto head = j.find("head");
  if (head == j.end() || !head->is_array()) throw DataError("step missing 'head' array");
  step.head.reserve(head->size());
  for (const auto& pair : *head) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number()) {
      throw DataError("head entries must be [token_id, prob] pairs");
    }
    step.head.push_back({pair[0].get<std::int64_t>(), pair[1].get<double>()});
  }
  const auto tail_mass = j.find("tail_mass");
  const auto tail_count = j.find("tail_count");
  if (tail_mass == j.end() || tail_count == j.end()) throw DataError("step missing 'tail_mass' or 'tail_count'");
  step.tail_mass = require_number(*tail_mass, "tail_mass");
  if (!tail_count->is_number_unsigned() && !(tail_count->is_number_integer() && tail_count->get<std::int64_t>() >= 0)) {
    throw DataError("field 'tail_count' must be a non-negative integer");
  }
  step.tail_count = tail_count->get<std::uint64_t>();

  const auto chosen = j.find("chosen");
  if (chosen == j.end() || !chosen->is_object()) throw DataError("step missing 'chosen' object");
  if (const auto idx = chosen->find("index"); idx != chosen->end()) {
    if (!idx->is_number_integer() || idx->get<std::int64_t>() < 0) throw DataError("chosen.index must be >= 0");
    const auto i = idx->get<std::size_t>();
    if (i >= step.head.size()) {
      throw DataError("chosen.index " + std::to_string(i) + " outside head of length " +
                      std::to_string(step.head.size()));
    }
    step.chosen = {i, step.head[i].prob};
  } else if (const auto p = chosen->find("prob"); p != chosen->end()) {
    step.chosen = {std::nullopt, require_number(*p, "chosen.prob")};
  } else {
    throw DataError("chosen must carry 'index' or 'prob'");
  }
  return step;
}

inline SequenceRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw DataError("record must be a JSON object");
  SequenceRecord rec;
  const auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw DataError("record missing string 'id'");
  rec.sequence_id = id->get<std::string>();

  const auto steps = j.find("steps");
  if (steps == j.end() || !steps->is_array()) throw DataError("record '" + rec.sequence_id + "' missing 'steps'");
  if (steps->empty()) throw DataError("record '" + rec.sequence_id + "' has no steps");
  rec.steps.reserve(steps->size());
  for (std::size_t t = 0; t < steps->size(); ++t) {
    try {
      rec.steps.push_back(step_from_json((*steps)[t]));
    } catch (const DataError& e) {
      throw DataError("record '" + rec.sequence_id + "' step " + std::to_string(t) + ": " + e.what());
    }
  }
  if (const auto g = j.find("gold_score"); g != j.end() && !g->is_null()) {
    rec.gold_score = require_number(*g, "gold_score");
  }
  if (const auto labels = j.find("labels"); labels != j.end() && !labels->is_null()) {
    if (!labels->is_array()) throw DataError("field 'labels' must be an array");
    std::vector<TokenLabel> out;
    out.reserve(labels->size());
    for (const auto& l : *labels) {
      if (l == "OK") {
        out.push_back(TokenLabel::Ok);
      } else if (l == "BAD") {
        out.push_back(TokenLabel::Bad);
      } else {
        throw DataError("labels must be \"OK\" or \"BAD\"");
      }
    }
    if (out.size() != rec.steps.size()) {
      throw DataError("record '" + rec.sequence_id + "' has " + std::to_string(out.size()) + " labels for " +
                      std::to_string(rec.steps.size()) + " steps");
    }
    rec.token_labels = std::move(out);
  }
  if (const auto s = j.find("sample_logprobs"); s != j.end() && !s->is_null()) {
    rec.sampled_sequence_logprobs = number_array(*s, "sample_logprobs");
  }
  if (const auto s = j.find("sample_lengths"); s != j.end() && !s->is_null()) {
    rec.sampled_sequence_lengths = number_array(*s, "sample_lengths");
  }
  if (const auto t = j.find("text"); t != j.end() && t->is_string()) rec.text = t->get<std::string>();
  return rec;
}

inline OrderedJson step_to_json(const StepDistribution& step) {
  OrderedJson head = OrderedJson::array();
  for (const auto& e : step.head) head.push_back(OrderedJson::array({e.token_id, e.prob}));
  OrderedJson chosen = step.chosen.index ? OrderedJson{{"index", *step.chosen.index}}
                                         : OrderedJson{{"prob", step.chosen.probability}};
  return OrderedJson{{"head", std::move(head)},
                     {"tail_mass", step.tail_mass},
                     {"tail_count", step.tail_count},
                     {"chosen", std::move(chosen)}};
}

}  // namespace detail

/// Serializes one record as a single JSON line (no trailing newline).
[[nodiscard]] inline std::string record_to_line(const SequenceRecord& rec) {
  detail::OrderedJson j;
  j["id"] = rec.sequence_id;
  auto& steps = j["steps"] = detail::OrderedJson::array();
  for (const auto& s : rec.steps) steps.push_back(detail::step_to_json(s));
  if (rec.gold_score) j["gold_score"] = *rec.gold_score;
  if (rec.token_labels) {
    auto& labels = j["labels"] = detail::OrderedJson::array();
    for (auto l : *rec.token_labels) labels.push_back(to_string(l));
  }
  if (rec.sampled_sequence_logprobs) j["sample_logprobs"] = *rec.sampled_sequence_logprobs;
  if (rec.sampled_sequence_lengths) j["sample_lengths"] = *rec.sampled_sequence_lengths;
  if (rec.text) j["text"] = *rec.text;
  return j.dump();
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  if (!corpus.metadata.empty()) {
    detail::OrderedJson meta;
    meta["metadata"] = corpus.metadata;
    out << meta.dump() << '\n';
  }
  for (const auto& rec : corpus.records) out << record_to_line(rec) << '\n';
}

/// Reads and validates a corpus. Every step must satisfy validate_step(step,
/// epsilon); the first failure throws ParseError with its line number.
[[nodiscard]] inline Corpus parse_corpus(std::istream& in, double epsilon) {
  Corpus corpus;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  bool any_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    detail::Json j;
    try {
      j = detail::Json::parse(line);
    } catch (const detail::Json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!any_content && j.is_object() && j.contains("metadata") && !j.contains("id")) {
      any_content = true;
      const auto& meta = j["metadata"];
      if (!meta.is_object()) throw ParseError(lineno, "metadata must be an object");
      for (const auto& [key, value] : meta.items()) {
        corpus.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
      continue;
    }
    any_content = true;
    SequenceRecord rec;
    try {
      rec = detail::record_from_json(j);
    } catch (const DataError& e) {
      throw ParseError(lineno, e.what());
    } catch (const detail::Json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    for (std::size_t t = 0; t < rec.steps.size(); ++t) {
      const auto violations = validate_step(rec.steps[t], epsilon);
      if (!violations.empty()) {
        std::string msg = "record '" + rec.sequence_id + "' step " + std::to_string(t) + ": ";
        for (std::size_t v = 0; v < violations.size(); ++v) msg += (v ? "; " : "") + violations[v].message;
        throw ParseError(lineno, msg);
      }
    }
    if (!seen.insert(rec.sequence_id).second) {
      throw ParseError(lineno, "duplicate sequence id '" + rec.sequence_id + "'");
    }
    corpus.records.push_back(std::move(rec));
  }
  return corpus;
}

[[nodiscard]] inline Corpus load_corpus(const std::string& path, double epsilon) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  try {
    return parse_corpus(in, epsilon);
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.detail());
  }
}

}  // namespace boostedprob
