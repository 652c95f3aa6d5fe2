#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qabias/error.hpp"

namespace qabias {

struct AnswerSpan {
  std::string text;
  /// Code-point offset into the context.
  std::size_t start_char = 0;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

struct QaSample {
  std::string id;
  std::optional<std::string> title;
  std::string context;
  std::string question;
  /// Gold answers in annotator order; the first one is canonical for
  /// positional heuristics.
  std::vector<AnswerSpan> answers;

  const AnswerSpan& canonical_answer() const { return answers.front(); }
  std::vector<std::string> answer_texts() const;

  friend bool operator==(const QaSample&, const QaSample&) = default;
};

struct Dataset {
  std::string name;
  std::vector<QaSample> samples;

  std::size_t size() const { return samples.size(); }
  /// Position of `id` in `samples`, or nullopt.
  std::optional<std::size_t> find(std::string_view id) const;
};

struct PredictionSet {
  std::string model_name;
  std::map<std::string, std::string, std::less<>> predictions;

  /// Throws ValidationError naming the id when it has no prediction.
  const std::string& at(std::string_view id) const;
};

/// Closed entity-label vocabulary; anything else is coerced to FB-OTHER.
bool is_known_entity_label(std::string_view label);
inline constexpr std::string_view kFallbackEntityLabel = "FB-OTHER";

struct EntitySpan {
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string label;

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

struct SubjectSpan {
  std::string text;
  /// Code-point offset into the question.
  std::size_t start_char = 0;

  friend bool operator==(const SubjectSpan&, const SubjectSpan&) = default;
};

struct SampleAnnotation {
  std::vector<EntitySpan> context_entities;
  std::vector<EntitySpan> question_entities;
  std::optional<SubjectSpan> subject;

  friend bool operator==(const SampleAnnotation&, const SampleAnnotation&) = default;
};

struct AnnotationSet {
  std::map<std::string, SampleAnnotation, std::less<>> annotations;

  const SampleAnnotation* find(std::string_view id) const;
};

/// Reads SQuAD v1.1 JSON. Offsets that do not match are repaired when the
/// answer text occurs exactly once in the context (a warning is recorded);
/// otherwise the sample is rejected.
Dataset load_dataset(const std::filesystem::path& path, Warnings* warnings = nullptr);
Dataset parse_dataset(std::string_view json_text, std::string name, Warnings* warnings = nullptr);

/// Serializes back to SQuAD v1.1 JSON. Consecutive samples sharing a title
/// form one article and consecutive samples sharing a context one paragraph,
/// so file order survives a round trip. `extra` top-level members (such as
/// a provenance block) are merged in.
std::string dump_dataset(const Dataset& dataset, std::string_view extra_json_object = "{}");
void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  std::string_view extra_json_object = "{}");

/// Reads the flat {id: answer} predictions format of the SQuAD evaluator.
PredictionSet load_predictions(const std::filesystem::path& path, Warnings* warnings = nullptr);
PredictionSet parse_predictions(std::string_view json_text, std::string model_name,
                                Warnings* warnings = nullptr);
std::string dump_predictions(const PredictionSet& predictions);

/// Reads the annotation sidecar. When `dataset` is given, every span is
/// checked against the bounds of its sample's context/question.
AnnotationSet load_annotations(const std::filesystem::path& path, const Dataset* dataset = nullptr,
                               Warnings* warnings = nullptr);
AnnotationSet parse_annotations(std::string_view json_text, const Dataset* dataset = nullptr,
                                Warnings* warnings = nullptr);
std::string dump_annotations(const AnnotationSet& annotations);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename, so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace qabias
