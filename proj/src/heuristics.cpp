#include "qabias/heuristics.hpp"

#include <unicode/uchar.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <unordered_set>

#include "qabias/error.hpp"
#include "qabias/parallel.hpp"
#include "qabias/version.hpp"

namespace qabias {

namespace {

constexpr std::array<std::string_view, 7> kNames = {"word-dist", "sim-word", "ans-pos", "cos-sim",
                                                    "ans-len",   "sim-ents", "subj-pos"};

const std::unordered_set<std::string_view>& wh_words() {
  static const std::unordered_set<std::string_view> words = {
      "what", "which", "who", "whom", "whose", "when", "where", "why", "how"};
  return words;
}

// Code-point span [start, end) of the canonical answer.
std::pair<std::size_t, std::size_t> answer_span(const QaSample& sample) {
  if (sample.answers.empty()) throw ValidationError("sample '" + sample.id + "' has no gold answer");
  const auto& answer = sample.canonical_answer();
  return {answer.start_char, answer.start_char + code_point_length(answer.text)};
}

TokenRange locate_answer_tokens(const QaSample& sample, std::span<const Token> context_tokens) {
  const auto [start, end] = answer_span(sample);
  const auto range = tokens_overlapping(context_tokens, start, end);
  if (range.empty()) {
    throw ValidationError("sample '" + sample.id + "': canonical answer '" +
                          sample.canonical_answer().text + "' covers no context token");
  }
  return range;
}

bool is_capitalized(const Token& token) {
  const auto first = to_u32(token.text).front();
  const auto c = static_cast<UChar32>(first);
  return u_isupper(c) || u_istitle(c);
}

bool is_digits(const Token& token) {
  for (char ch : token.text) {
    if (ch < '0' || ch > '9') return false;
  }
  return !token.text.empty();
}

bool only_space_between(std::u32string_view text, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to; ++i) {
    if (!is_space_char(text[i])) return false;
  }
  return true;
}

std::vector<EntitySpan> fallback_entities(std::u32string_view text, const Lexicon& lexicon) {
  const auto tokens = tokenize(text);
  const auto sentences = split_sentences(text, lexicon.abbreviations());
  std::vector<bool> initial(tokens.size(), false);
  {
    std::size_t k = 0;
    for (const auto& s : sentences) {
      while (k < tokens.size() && tokens[k].start_char < s.start_char) ++k;
      if (k < tokens.size()) initial[k] = true;
    }
    if (!tokens.empty()) initial[0] = true;
  }

  std::vector<EntitySpan> entities;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (is_digits(tokens[i])) {
      std::size_t j = i;
      while (j + 1 < tokens.size() && is_digits(tokens[j + 1]) &&
             tokens[j + 1].start_char == tokens[j].end_char + 1 &&
             (text[tokens[j].end_char] == U',' || text[tokens[j].end_char] == U'.')) {
        ++j;
      }
      std::string label = "CARDINAL";
      if (i == j && tokens[i].text.size() == 4) {
        const int year = std::stoi(tokens[i].text);
        if (year >= 1000 && year <= 2100) label = "DATE";
      }
      entities.push_back(EntitySpan{tokens[i].start_char, tokens[j].end_char, label});
      i = j + 1;
      continue;
    }
    if (is_capitalized(tokens[i]) && !initial[i]) {
      std::size_t j = i;
      while (j + 1 < tokens.size() && is_capitalized(tokens[j + 1]) &&
             only_space_between(text, tokens[j].end_char, tokens[j + 1].start_char)) {
        ++j;
      }
      entities.push_back(EntitySpan{tokens[i].start_char, tokens[j].end_char,
                                    std::string(kFallbackEntityLabel)});
      i = j + 1;
      continue;
    }
    ++i;
  }
  return entities;
}

}  // namespace

std::string_view to_string(HeuristicId id) { return kNames[static_cast<std::size_t>(id)]; }

std::optional<double> default_threshold(HeuristicId id) {
  switch (id) {
    case HeuristicId::WordDist: return 7.0;
    case HeuristicId::SimWord: return 3.0;
    case HeuristicId::AnsLen: return 4.0;
    case HeuristicId::CosSim: return 0.1;
    case HeuristicId::SimEnts: return 0.0;
    case HeuristicId::SubjPos: return 1.0;
    case HeuristicId::AnsPos: return std::nullopt;
  }
  return std::nullopt;
}

HeuristicId parse_heuristic(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<HeuristicId>(i);
  }
  throw ConfigError("unknown heuristic '" + std::string(name) +
                    "' (expected one of word-dist, sim-word, ans-pos, cos-sim, ans-len, sim-ents, subj-pos)");
}

double AttributeTable::at(std::string_view id) const {
  const auto it = values.find(id);
  if (it == values.end()) {
    throw ValidationError("attribute table " + std::string(to_string(heuristic)) + " for '" +
                          dataset_name + "' has no value for sample '" + std::string(id) + "'");
  }
  return it->second;
}

std::string dump_attributes(const AttributeTable& table) {
  nlohmann::ordered_json root;
  root["heuristic"] = to_string(table.heuristic);
  root["dataset_name"] = table.dataset_name;
  root["toolkit_version"] = kToolkitVersion;
  root["config_digest"] = table.config_digest;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
  for (const auto& [id, v] : table.values) values[id] = v;
  root["values"] = std::move(values);
  return root.dump(1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) + "\n";
}

AttributeTable parse_attributes(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed attribute file at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object() || !root.contains("heuristic") || !root.contains("values") ||
      !root["values"].is_object()) {
    throw ParseError("attribute file must contain 'heuristic' and a 'values' object");
  }
  AttributeTable table;
  table.heuristic = parse_heuristic(root["heuristic"].get<std::string>());
  table.dataset_name = root.value("dataset_name", "");
  table.config_digest = root.value("config_digest", "");
  for (const auto& [id, v] : root["values"].items()) {
    if (!v.is_number()) throw ParseError("attribute for '" + id + "' is not a number");
    const double value = v.get<double>();
    if (!std::isfinite(value)) throw ValidationError("attribute for '" + id + "' is not finite");
    table.values.emplace(id, value);
  }
  return table;
}

AttributeTable load_attributes(const std::filesystem::path& path) {
  return parse_attributes(read_file(path));
}

double attr_word_dist(const QaSample& sample, const Lexicon& lexicon) {
  const auto context_tokens = tokenize(std::string_view(sample.context));
  const auto answer = locate_answer_tokens(sample, context_tokens);

  std::unordered_set<std::string> question_words;
  for (const auto& t : tokenize(std::string_view(sample.question))) {
    if (!lexicon.is_stopword(t.lower)) question_words.insert(t.lower);
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < context_tokens.size(); ++i) {
    if (!question_words.contains(context_tokens[i].lower)) continue;
    std::size_t gap = 0;
    if (i < answer.first) {
      gap = answer.first - i - 1;
    } else if (i > answer.last) {
      gap = i - answer.last - 1;
    }
    if (!best || gap < *best) best = gap;
  }
  return static_cast<double>(best.value_or(context_tokens.size()));
}

double attr_sim_word(const QaSample& sample) {
  std::unordered_set<std::string> context_words;
  for (const auto& t : tokenize(std::string_view(sample.context))) context_words.insert(t.lower);
  std::unordered_set<std::string> shared;
  for (const auto& t : tokenize(std::string_view(sample.question))) {
    if (context_words.contains(t.lower)) shared.insert(t.lower);
  }
  return static_cast<double>(shared.size());
}

double attr_ans_pos(const QaSample& sample, const Lexicon& lexicon) {
  const auto context = to_u32(sample.context);
  const auto sentences = split_sentences(context, lexicon.abbreviations());
  const auto [start, end] = answer_span(sample);
  if (sentences.empty() || start >= context.size()) {
    throw ValidationError("sample '" + sample.id + "': answer offset " + std::to_string(start) +
                          " lies outside every sentence");
  }
  return static_cast<double>(sentence_index_at(sentences, start));
}

double attr_cos_sim(const QaSample& sample, const TfidfModel& model) {
  answer_span(sample);
  return cosine(model.vectorize(sample.question), model.vectorize(sample.canonical_answer().text));
}

double attr_ans_len(const QaSample& sample) {
  answer_span(sample);
  return static_cast<double>(tokenize(std::string_view(sample.canonical_answer().text)).size());
}

std::optional<std::set<std::string>> question_type_labels(std::string_view question,
                                                          const Lexicon& lexicon) {
  const auto tokens = tokenize(question);
  const auto& mapping = lexicon.entity_mapping();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!wh_words().contains(tokens[i].lower)) continue;
    if (i + 1 < tokens.size()) {
      const auto it = mapping.find(tokens[i].lower + " " + tokens[i + 1].lower);
      if (it != mapping.end()) return it->second;
    }
    const auto it = mapping.find(tokens[i].lower);
    if (it != mapping.end()) return it->second;
    return std::nullopt;
  }
  return std::nullopt;
}

double attr_sim_ents(const QaSample& sample, const SampleAnnotation& annotation, const Lexicon& lexicon) {
  const auto labels = question_type_labels(sample.question, lexicon);
  if (!labels) return static_cast<double>(annotation.context_entities.size());
  return static_cast<double>(std::count_if(
      annotation.context_entities.begin(), annotation.context_entities.end(),
      [&](const EntitySpan& e) { return labels->contains(e.label); }));
}

double attr_subj_pos(const QaSample& sample, const std::optional<SubjectSpan>& subject) {
  const auto [answer_start, answer_end] = answer_span(sample);
  if (!subject) return 0.0;
  const auto needle = to_lower(to_u32(subject->text));
  if (needle.empty()) return 0.0;
  const auto context = to_lower(to_u32(sample.context));

  std::size_t before = 0;
  std::size_t pos = context.find(needle);
  while (pos != std::u32string::npos && pos < answer_start) {
    const std::size_t end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_word_char(context[pos - 1]) || !is_word_char(needle.front());
    const bool right_ok = end == context.size() || !is_word_char(context[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) {
      ++before;
      pos = context.find(needle, end);
    } else {
      pos = context.find(needle, pos + 1);
    }
  }
  return static_cast<double>(std::min<std::size_t>(before, 2));
}

std::optional<SubjectSpan> fallback_subject(std::string_view question, const Lexicon& lexicon) {
  const auto text = to_u32(question);
  const auto tokens = tokenize(std::u32string_view(text));
  std::size_t i = 0;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (wh_words().contains(tokens[k].lower)) {
      i = k + 1;
      if (tokens[k].lower == "how" && i < tokens.size() &&
          (tokens[i].lower == "many" || tokens[i].lower == "much")) {
        ++i;
      }
      break;
    }
  }
  auto is_content = [&](const Token& t) { return !lexicon.is_stopword(t.lower) && !lexicon.is_verb(t.lower); };
  while (i < tokens.size() && !is_content(tokens[i])) ++i;
  if (i >= tokens.size()) return std::nullopt;
  std::size_t j = i;
  while (j + 1 < tokens.size() && is_content(tokens[j + 1])) ++j;
  const auto start = tokens[i].start_char;
  return SubjectSpan{to_utf8(std::u32string_view(text).substr(start, tokens[j].end_char - start)), start};
}

SampleAnnotation fallback_annotate(const QaSample& sample, const Lexicon& lexicon) {
  SampleAnnotation ann;
  ann.context_entities = fallback_entities(to_u32(sample.context), lexicon);
  ann.question_entities = fallback_entities(to_u32(sample.question), lexicon);
  ann.subject = fallback_subject(sample.question, lexicon);
  return ann;
}

AttributeTable compute_attributes(const Dataset& dataset, HeuristicId heuristic,
                                  const HeuristicDeps& deps, const Lexicon& lexicon, unsigned workers) {
  if (heuristic == HeuristicId::CosSim && deps.tfidf == nullptr) {
    throw ConfigError("cos-sim needs a fitted TF-IDF model");
  }
  const bool needs_annotations = heuristic == HeuristicId::SimEnts || heuristic == HeuristicId::SubjPos;
  if (needs_annotations && deps.annotations == nullptr && !deps.fallback_annotator) {
    throw ConfigError(std::string(to_string(heuristic)) +
                      " needs an annotation sidecar or the fallback annotator");
  }

  std::vector<double> values(dataset.size());
  parallel_for(dataset.size(), workers, [&](std::size_t i) {
    const auto& sample = dataset.samples[i];
    auto annotation = [&]() -> SampleAnnotation {
      if (deps.annotations) {
        if (const auto* found = deps.annotations->find(sample.id)) return *found;
      }
      if (deps.fallback_annotator) return fallback_annotate(sample, lexicon);
      throw ValidationError("sample '" + sample.id + "' has no annotation and no fallback annotator is configured");
    };
    double v = 0.0;
    switch (heuristic) {
      case HeuristicId::WordDist: v = attr_word_dist(sample, lexicon); break;
      case HeuristicId::SimWord: v = attr_sim_word(sample); break;
      case HeuristicId::AnsPos: v = attr_ans_pos(sample, lexicon); break;
      case HeuristicId::CosSim: v = attr_cos_sim(sample, *deps.tfidf); break;
      case HeuristicId::AnsLen: v = attr_ans_len(sample); break;
      case HeuristicId::SimEnts: v = attr_sim_ents(sample, annotation(), lexicon); break;
      case HeuristicId::SubjPos: {
        auto subject = annotation().subject;
        if (!subject) {
          if (!deps.fallback_annotator) {
            throw ValidationError("sample '" + sample.id + "' has no subject annotation and no fallback annotator is configured");
          }
          subject = fallback_subject(sample.question, lexicon);
        }
        v = attr_subj_pos(sample, subject);
        break;
      }
    }
    values[i] = v;
  });

  AttributeTable table;
  table.heuristic = heuristic;
  table.dataset_name = dataset.name;
  table.config_digest = lexicon.digest();
  for (std::size_t i = 0; i < dataset.size(); ++i) table.values.emplace(dataset.samples[i].id, values[i]);
  return table;
}

}  // namespace qabias
