#include "qabias/corpus.hpp"

#include <array>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "qabias/textproc.hpp"

namespace qabias {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> QaSample::answer_texts() const {
  std::vector<std::string> texts;
  texts.reserve(answers.size());
  for (const auto& a : answers) texts.push_back(a.text);
  return texts;
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].id == id) return i;
  }
  return std::nullopt;
}

const std::string& PredictionSet::at(std::string_view id) const {
  const auto it = predictions.find(id);
  if (it == predictions.end()) {
    throw ValidationError("prediction set '" + model_name + "' has no prediction for sample '" +
                          std::string(id) + "'");
  }
  return it->second;
}

const SampleAnnotation* AnnotationSet::find(std::string_view id) const {
  const auto it = annotations.find(id);
  return it == annotations.end() ? nullptr : &it->second;
}

bool is_known_entity_label(std::string_view label) {
  static constexpr std::array<std::string_view, 19> kLabels = {
      "PERSON",   "GPE",   "LOC",      "FAC",     "ORG",         "DATE",     "TIME",
      "CARDINAL", "QUANTITY", "MONEY", "PERCENT", "EVENT",       "NORP",     "PRODUCT",
      "WORK_OF_ART", "LANGUAGE", "LAW", "ORDINAL", "FB-OTHER"};
  for (auto known : kLabels) {
    if (known == label) return true;
  }
  return false;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
}

namespace {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + std::string(what) + " at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }
}

const json& member(const json& object, const char* key, std::string_view where) {
  if (!object.is_object() || !object.contains(key)) {
    throw ParseError(std::string(where) + ": missing member '" + key + "'");
  }
  return object.at(key);
}

std::string string_member(const json& object, const char* key, std::string_view where) {
  const auto& v = member(object, key, where);
  if (!v.is_string()) throw ParseError(std::string(where) + ": member '" + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t offset_member(const json& object, const char* key, std::string_view where) {
  const auto& v = member(object, key, where);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(std::string(where) + ": member '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::size_t count_overlapping(std::u32string_view haystack, std::u32string_view needle,
                              std::size_t* first) {
  std::size_t count = 0;
  std::size_t pos = haystack.find(needle);
  while (pos != std::u32string_view::npos) {
    if (count == 0) *first = pos;
    ++count;
    pos = haystack.find(needle, pos + 1);
  }
  return count;
}

void check_answer(QaSample& sample, const std::u32string& context, AnswerSpan& answer,
                  Warnings* warnings) {
  const auto text = to_u32(answer.text);
  if (text.empty()) throw ValidationError("sample '" + sample.id + "': empty answer text");
  if (answer.start_char + text.size() <= context.size() &&
      std::u32string_view(context).substr(answer.start_char, text.size()) == text) {
    return;
  }
  std::size_t found = 0;
  const auto hits = count_overlapping(context, text, &found);
  if (hits != 1) {
    throw ValidationError("sample '" + sample.id + "': answer '" + answer.text +
                          "' does not occur at offset " + std::to_string(answer.start_char) +
                          " and occurs " + std::to_string(hits) +
                          " times in the context; offset cannot be repaired");
  }
  if (warnings) {
    warnings->push_back("sample '" + sample.id + "': answer offset " +
                        std::to_string(answer.start_char) + " repaired to " +
                        std::to_string(found));
  }
  answer.start_char = found;
}

}  // namespace

Dataset parse_dataset(std::string_view json_text, std::string name, Warnings* warnings) {
  const json root = parse_json(json_text, "dataset '" + name + "'");
  const auto& data = member(root, "data", "dataset root");
  if (!data.is_array()) throw ParseError("dataset root: 'data' must be an array");

  Dataset dataset;
  dataset.name = std::move(name);
  std::unordered_set<std::string> ids;
  for (const auto& article : data) {
    std::optional<std::string> title;
    if (article.contains("title") && article["title"].is_string()) {
      title = article["title"].get<std::string>();
    }
    const auto& paragraphs = member(article, "paragraphs", "article");
    if (!paragraphs.is_array()) throw ParseError("article: 'paragraphs' must be an array");
    for (const auto& paragraph : paragraphs) {
      const auto context = string_member(paragraph, "context", "paragraph");
      const auto context32 = to_u32(context);
      const auto& qas = member(paragraph, "qas", "paragraph");
      if (!qas.is_array()) throw ParseError("paragraph: 'qas' must be an array");
      for (const auto& qa : qas) {
        QaSample sample;
        sample.id = string_member(qa, "id", "qa");
        sample.title = title;
        sample.context = context;
        sample.question = string_member(qa, "question", "qa '" + sample.id + "'");
        if (!ids.insert(sample.id).second) {
          throw ValidationError("duplicate sample id '" + sample.id + "'");
        }
        const auto& answers = member(qa, "answers", "qa '" + sample.id + "'");
        if (!answers.is_array()) throw ParseError("qa '" + sample.id + "': 'answers' must be an array");
        if (answers.empty()) throw ValidationError("sample '" + sample.id + "' has no gold answers");
        for (const auto& a : answers) {
          const std::string where = "answer of '" + sample.id + "'";
          AnswerSpan span{string_member(a, "text", where), offset_member(a, "answer_start", where)};
          check_answer(sample, context32, span, warnings);
          sample.answers.push_back(std::move(span));
        }
        dataset.samples.push_back(std::move(sample));
      }
    }
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path, Warnings* warnings) {
  return parse_dataset(read_file(path), path.stem().string(), warnings);
}

std::string dump_dataset(const Dataset& dataset, std::string_view extra_json_object) {
  ordered_json root;
  root["version"] = "1.1";
  const auto extra = parse_json(extra_json_object, "provenance block");
  for (const auto& [key, value] : extra.items()) root[key] = value;

  ordered_json data = ordered_json::array();
  const std::optional<std::string>* current_title = nullptr;
  const std::string* current_context = nullptr;
  for (const auto& sample : dataset.samples) {
    if (current_title == nullptr || *current_title != sample.title) {
      ordered_json article;
      if (sample.title) article["title"] = *sample.title;
      article["paragraphs"] = ordered_json::array();
      data.push_back(std::move(article));
      current_title = &sample.title;
      current_context = nullptr;
    }
    auto& paragraphs = data.back()["paragraphs"];
    if (current_context == nullptr || *current_context != sample.context) {
      ordered_json paragraph;
      paragraph["context"] = sample.context;
      paragraph["qas"] = ordered_json::array();
      paragraphs.push_back(std::move(paragraph));
      current_context = &sample.context;
    }
    ordered_json qa;
    qa["id"] = sample.id;
    qa["question"] = sample.question;
    qa["answers"] = ordered_json::array();
    for (const auto& a : sample.answers) {
      qa["answers"].push_back(ordered_json{{"text", a.text}, {"answer_start", a.start_char}});
    }
    paragraphs.back()["qas"].push_back(std::move(qa));
  }
  root["data"] = std::move(data);
  return root.dump(-1, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path,
                  std::string_view extra_json_object) {
  write_file(path, dump_dataset(dataset, extra_json_object));
}

PredictionSet parse_predictions(std::string_view json_text, std::string model_name,
                                Warnings* warnings) {
  PredictionSet set;
  set.model_name = std::move(model_name);
  if (json_text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    if (warnings) warnings->push_back("predictions file for '" + set.model_name + "' is empty");
    return set;
  }
  const json root = parse_json(json_text, "predictions '" + set.model_name + "'");
  if (!root.is_object()) throw ParseError("predictions must be a flat JSON object {id: answer}");
  for (const auto& [id, answer] : root.items()) {
    if (!answer.is_string()) {
      throw ParseError("prediction for '" + id + "' is not a string");
    }
    set.predictions.emplace(id, answer.get<std::string>());
  }
  if (set.predictions.empty() && warnings) {
    warnings->push_back("predictions file for '" + set.model_name + "' has no entries");
  }
  return set;
}

PredictionSet load_predictions(const std::filesystem::path& path, Warnings* warnings) {
  return parse_predictions(read_file(path), path.stem().string(), warnings);
}

std::string dump_predictions(const PredictionSet& predictions) {
  json root = json::object();
  for (const auto& [id, answer] : predictions.predictions) root[id] = answer;
  return root.dump(1, ' ', false, json::error_handler_t::replace) + "\n";
}

namespace {

std::vector<EntitySpan> parse_entities(const json& list, std::string_view id, std::string_view field,
                                       std::size_t bound, bool check_bound, Warnings* warnings) {
  std::vector<EntitySpan> out;
  if (list.is_null()) return out;
  if (!list.is_array()) throw ParseError("annotation '" + std::string(id) + "': '" + std::string(field) + "' must be an array");
  const std::string where = "entity of '" + std::string(id) + "'";
  for (const auto& e : list) {
    EntitySpan span{offset_member(e, "start_char", where), offset_member(e, "end_char", where),
                    string_member(e, "label", where)};
    if (span.end_char <= span.start_char || (check_bound && span.end_char > bound)) {
      throw ValidationError("annotation '" + std::string(id) + "': " + std::string(field) + " span [" +
                            std::to_string(span.start_char) + "," + std::to_string(span.end_char) +
                            ") out of bounds (length " + std::to_string(bound) + ")");
    }
    if (!is_known_entity_label(span.label)) {
      if (warnings) {
        warnings->push_back("annotation '" + std::string(id) + "': unknown label '" + span.label +
                            "' mapped to FB-OTHER");
      }
      span.label = std::string(kFallbackEntityLabel);
    }
    out.push_back(std::move(span));
  }
  return out;
}

}  // namespace

AnnotationSet parse_annotations(std::string_view json_text, const Dataset* dataset,
                                Warnings* warnings) {
  const json root = parse_json(json_text, "annotations");
  if (!root.is_object()) throw ParseError("annotations must be a JSON object {id: annotation}");
  std::unordered_map<std::string_view, const QaSample*> by_id;
  if (dataset) {
    for (const auto& s : dataset->samples) by_id.emplace(s.id, &s);
  }
  AnnotationSet set;
  for (const auto& [id, entry] : root.items()) {
    if (!entry.is_object()) throw ParseError("annotation '" + id + "' must be an object");
    const QaSample* sample = nullptr;
    if (dataset) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        if (warnings) warnings->push_back("annotation for unknown sample '" + id + "' ignored");
        continue;
      }
      sample = it->second;
    }
    const std::size_t context_len = sample ? code_point_length(sample->context) : 0;
    const std::size_t question_len = sample ? code_point_length(sample->question) : 0;
    SampleAnnotation ann;
    ann.context_entities = parse_entities(entry.value("context_entities", json()), id,
                                          "context_entities", context_len, sample != nullptr, warnings);
    ann.question_entities = parse_entities(entry.value("question_entities", json()), id,
                                           "question_entities", question_len, sample != nullptr, warnings);
    if (entry.contains("subject") && !entry["subject"].is_null()) {
      const std::string where = "subject of '" + id + "'";
      SubjectSpan subject{string_member(entry["subject"], "text", where),
                          offset_member(entry["subject"], "start_char", where)};
      if (sample && subject.start_char + code_point_length(subject.text) > question_len) {
        throw ValidationError("annotation '" + id + "': subject span at " +
                              std::to_string(subject.start_char) + " exceeds the question length " +
                              std::to_string(question_len));
      }
      ann.subject = std::move(subject);
    }
    set.annotations.emplace(id, std::move(ann));
  }
  return set;
}

AnnotationSet load_annotations(const std::filesystem::path& path, const Dataset* dataset,
                               Warnings* warnings) {
  return parse_annotations(read_file(path), dataset, warnings);
}

std::string dump_annotations(const AnnotationSet& annotations) {
  auto entities = [](const std::vector<EntitySpan>& list) {
    ordered_json out = ordered_json::array();
    for (const auto& e : list) {
      out.push_back(ordered_json{{"start_char", e.start_char}, {"end_char", e.end_char}, {"label", e.label}});
    }
    return out;
  };
  ordered_json root = ordered_json::object();
  for (const auto& [id, ann] : annotations.annotations) {
    ordered_json entry;
    entry["context_entities"] = entities(ann.context_entities);
    entry["question_entities"] = entities(ann.question_entities);
    if (ann.subject) {
      entry["subject"] = ordered_json{{"text", ann.subject->text}, {"start_char", ann.subject->start_char}};
    } else {
      entry["subject"] = nullptr;
    }
    root[id] = std::move(entry);
  }
  return root.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

}  // namespace qabias
