#include "qabias/lexicon.hpp"

#include <openssl/evp.h>

#include <json.hpp>
#include <sstream>

#include "qabias/corpus.hpp"
#include "qabias/embedded_data.hpp"
#include "qabias/error.hpp"

namespace qabias {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

// One entry per line; blank lines and '#' comments are skipped.
std::vector<std::string> read_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(to_utf8(to_lower(to_u32(line.substr(first)))));
  }
  return lines;
}

}  // namespace

Lexicon Lexicon::from_sources(std::string stopwords, std::string abbreviations, std::string verbs,
                              std::string entity_mapping_json) {
  Lexicon lex;
  for (auto& w : read_lines(stopwords)) lex.stopwords_.insert(std::move(w));
  for (auto& w : read_lines(verbs)) lex.verbs_.insert(std::move(w));
  for (const auto& w : read_lines(abbreviations)) lex.abbreviations_.insert(to_u32(w));

  nlohmann::json mapping;
  try {
    mapping = nlohmann::json::parse(entity_mapping_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("entity mapping: malformed JSON at byte " + std::to_string(e.byte));
  }
  if (!mapping.is_object()) throw ParseError("entity mapping must be an object {question-type: [labels]}");
  for (const auto& [key, labels] : mapping.items()) {
    if (!labels.is_array()) throw ParseError("entity mapping '" + key + "' must list labels");
    auto& target = lex.entity_mapping_[to_utf8(to_lower(to_u32(key)))];
    for (const auto& label : labels) {
      if (!label.is_string() || !is_known_entity_label(label.get<std::string>())) {
        throw ValidationError("entity mapping '" + key + "' has an unknown label " + label.dump());
      }
      target.insert(label.get<std::string>());
    }
  }

  std::string material;
  for (const auto* part : {&stopwords, &abbreviations, &verbs, &entity_mapping_json}) {
    material += std::to_string(part->size());
    material += ':';
    material += *part;
  }
  lex.digest_ = sha256_hex(material);
  return lex;
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lexicon =
      from_sources(std::string(embedded::stopwords), std::string(embedded::abbreviations),
                   std::string(embedded::verbs), std::string(embedded::entity_mapping));
  return lexicon;
}

Lexicon Lexicon::load(const std::filesystem::path& dir) {
  auto pick = [&](const char* file, std::string_view fallback) {
    const auto path = dir / file;
    return std::filesystem::exists(path) ? read_file(path) : std::string(fallback);
  };
  return from_sources(pick("stopwords.txt", embedded::stopwords),
                      pick("abbreviations.txt", embedded::abbreviations),
                      pick("verbs.txt", embedded::verbs),
                      pick("entity_mapping.json", embedded::entity_mapping));
}

}  // namespace qabias
