#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "qabias/corpus.hpp"
#include "qabias/heuristics.hpp"
#include "qabias/textproc.hpp"

namespace fixtures {

// Sample whose first answer is located by substring search in `context`.
inline qabias::QaSample sample(std::string id, std::string context, std::string question,
                               std::vector<std::string> answers) {
  qabias::QaSample s;
  s.id = std::move(id);
  s.context = std::move(context);
  s.question = std::move(question);
  const auto u = qabias::to_u32(s.context);
  for (auto& a : answers) {
    const auto pos = u.find(qabias::to_u32(a));
    s.answers.push_back(qabias::AnswerSpan{a, pos == std::u32string::npos ? 0 : pos});
  }
  return s;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qabias_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Dataset of n samples with the given attribute values and per-sample correctness.
struct Scored {
  qabias::Dataset dataset;
  qabias::AttributeTable attrs;
  qabias::PredictionSet predictions;
};

inline Scored scored(const std::vector<double>& attrs, const std::vector<bool>& correct,
                     qabias::HeuristicId h = qabias::HeuristicId::AnsLen) {
  Scored out;
  out.dataset.name = "fixture";
  out.attrs.heuristic = h;
  out.attrs.dataset_name = "fixture";
  out.predictions.model_name = "model";
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    const std::string id = "s" + std::to_string(i);
    out.dataset.samples.push_back(sample(id, "Answer token" + std::to_string(i) + " here.", "What?",
                                         {"token" + std::to_string(i)}));
    out.attrs.values[id] = attrs[i];
    out.predictions.predictions[id] = correct[i] ? "token" + std::to_string(i) : "wrong";
  }
  return out;
}

}  // namespace fixtures
