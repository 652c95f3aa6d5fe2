#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>

#include "qabias/textproc.hpp"

namespace qabias {

/// The word lists and mappings that attribute values depend on. Every
/// attribute table records `digest()` so tables computed under a different
/// lexicon are detected as stale.
class Lexicon {
 public:
  /// The lists shipped in data/ and compiled into the library.
  static const Lexicon& builtin();

  /// Builtin lists, with any of stopwords.txt, abbreviations.txt, verbs.txt
  /// or entity_mapping.json present in `dir` taking precedence.
  static Lexicon load(const std::filesystem::path& dir);

  static Lexicon from_sources(std::string stopwords, std::string abbreviations, std::string verbs,
                              std::string entity_mapping_json);

  bool is_stopword(std::string_view lowered) const { return stopwords_.contains(std::string(lowered)); }
  bool is_verb(std::string_view lowered) const { return verbs_.contains(std::string(lowered)); }
  const AbbreviationList& abbreviations() const { return abbreviations_; }

  /// Lower-cased question-type key ("who", "how many", ...) to entity labels.
  const std::map<std::string, std::set<std::string>>& entity_mapping() const { return entity_mapping_; }

  /// Hex SHA-256 over the four source texts.
  const std::string& digest() const { return digest_; }

 private:
  std::unordered_set<std::string> stopwords_;
  std::unordered_set<std::string> verbs_;
  AbbreviationList abbreviations_;
  std::map<std::string, std::set<std::string>> entity_mapping_;
  std::string digest_;
};

std::string sha256_hex(std::string_view data);

}  // namespace qabias
