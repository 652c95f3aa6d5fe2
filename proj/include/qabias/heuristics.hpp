#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "qabias/corpus.hpp"
#include "qabias/lexicon.hpp"
#include "qabias/textproc.hpp"

namespace qabias {

enum class HeuristicId { WordDist, SimWord, AnsPos, CosSim, AnsLen, SimEnts, SubjPos };

inline constexpr std::array<HeuristicId, 7> kAllHeuristics = {
    HeuristicId::WordDist, HeuristicId::SimWord, HeuristicId::AnsPos, HeuristicId::CosSim,
    HeuristicId::AnsLen,   HeuristicId::SimEnts, HeuristicId::SubjPos};

std::string_view to_string(HeuristicId id);

/// Thresholds found optimal for a BERT-Base-class model on SQuAD validation
/// (word-dist 7, sim-word 3, ans-len 4, cos-sim 0.1, sim-ents 0, subj-pos 1);
/// nullopt for ans-pos, which has no published value.
std::optional<double> default_threshold(HeuristicId id);

/// Accepts the report vocabulary ("word-dist", "sim-word", ...).
HeuristicId parse_heuristic(std::string_view name);

/// Per-sample attribute values of one heuristic over one dataset.
struct AttributeTable {
  HeuristicId heuristic = HeuristicId::WordDist;
  std::string dataset_name;
  std::string config_digest;
  std::map<std::string, double, std::less<>> values;

  /// Throws ValidationError when `id` is not covered.
  double at(std::string_view id) const;
};

std::string dump_attributes(const AttributeTable& table);
AttributeTable parse_attributes(std::string_view json_text);
AttributeTable load_attributes(const std::filesystem::path& path);

struct HeuristicDeps {
  const TfidfModel* tfidf = nullptr;
  const AnnotationSet* annotations = nullptr;
  /// Use the rule-based annotator for samples without a sidecar entry.
  bool fallback_annotator = false;
};

// Per-sample attributes. All throw ValidationError naming the sample when
// the canonical answer cannot be located.

/// Tokens strictly between the nearest non-stopword question word in the
/// context and the canonical answer span; 0 inside the span, the context
/// token count when no question word occurs.
double attr_word_dist(const QaSample& sample, const Lexicon& lexicon);

/// |question word set ∩ context word set| over lower-cased tokens.
double attr_sim_word(const QaSample& sample);

/// 0-based index of the sentence holding the canonical answer start.
double attr_ans_pos(const QaSample& sample, const Lexicon& lexicon);

double attr_cos_sim(const QaSample& sample, const TfidfModel& model);

/// Token count of the canonical answer.
double attr_ans_len(const QaSample& sample);

/// Context entities whose label matches the question type.
double attr_sim_ents(const QaSample& sample, const SampleAnnotation& annotation, const Lexicon& lexicon);

/// 0: answer before every subject occurrence (or subject absent),
/// 1: after one occurrence, 2: after several.
double attr_subj_pos(const QaSample& sample, const std::optional<SubjectSpan>& subject);

/// Entity labels counted for the question, or nullopt when its type is
/// unmapped (then every label counts).
std::optional<std::set<std::string>> question_type_labels(std::string_view question,
                                                          const Lexicon& lexicon);

/// Rule-based stand-in for the NLP annotator: capitalized token runs that
/// are not sentence-initial become FB-OTHER entities, digit runs become
/// DATE (plausible years) or CARDINAL, and the subject is the first run of
/// content words after the wh-word.
SampleAnnotation fallback_annotate(const QaSample& sample, const Lexicon& lexicon);
std::optional<SubjectSpan> fallback_subject(std::string_view question, const Lexicon& lexicon);

/// Full table over the dataset. Missing dependencies raise ConfigError.
AttributeTable compute_attributes(const Dataset& dataset, HeuristicId heuristic,
                                  const HeuristicDeps& deps, const Lexicon& lexicon,
                                  unsigned workers = 1);

}  // namespace qabias
