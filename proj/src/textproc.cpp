#include "qabias/textproc.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "qabias/error.hpp"

namespace qabias {

std::u32string to_u32(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    uint8_t buf[4];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, 4, static_cast<UChar32>(c), error);
    if (error) {
      out.append("\xEF\xBF\xBD");
    } else {
      out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    }
  }
  return out;
}

std::size_t code_point_length(std::string_view utf8) {
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  std::size_t count = 0;
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    ++count;
  }
  return count;
}

bool is_word_char(char32_t c) {
  return (U_GET_GC_MASK(static_cast<UChar32>(c)) & (U_GC_L_MASK | U_GC_N_MASK)) != 0;
}

bool is_space_char(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

char32_t to_lower_char(char32_t c) {
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

std::u32string to_lower(std::u32string_view text) {
  std::u32string out(text);
  for (auto& c : out) c = to_lower_char(c);
  return out;
}

std::vector<std::size_t> find_all(std::u32string_view haystack, std::u32string_view needle) {
  std::vector<std::size_t> hits;
  if (needle.empty()) return hits;
  std::size_t pos = haystack.find(needle);
  while (pos != std::u32string_view::npos) {
    hits.push_back(pos);
    pos = haystack.find(needle, pos + needle.size());
  }
  return hits;
}

std::vector<Token> tokenize(std::u32string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    const auto word = text.substr(i, j - i);
    tokens.push_back(Token{to_utf8(word), to_utf8(to_lower(word)), i, j});
    i = j;
  }
  return tokens;
}

std::vector<Token> tokenize(std::string_view utf8) { return tokenize(to_u32(utf8)); }

TokenRange tokens_overlapping(std::span<const Token> tokens, std::size_t start_char,
                              std::size_t end_char) {
  TokenRange range;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (tokens[k].end_char <= start_char) continue;
    if (tokens[k].start_char >= end_char) break;
    if (range.empty()) range.first = k;
    range.last = k;
  }
  return range;
}

namespace {

bool is_closing_mark(char32_t c) {
  switch (c) {
    case U'"':
    case U'\'':
    case U')':
    case U']':
    case U'’':
    case U'”':
      return true;
    default:
      return false;
  }
}

bool is_opening_mark(char32_t c) {
  switch (c) {
    case U'"':
    case U'\'':
    case U'(':
    case U'[':
    case U'‘':
    case U'“':
      return true;
    default:
      return false;
  }
}

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

bool starts_sentence(char32_t c) {
  const auto uc = static_cast<UChar32>(c);
  return u_isupper(uc) || u_istitle(uc) || u_charType(uc) == U_DECIMAL_DIGIT_NUMBER;
}

// The whitespace-delimited word that ends with the period at `dot`.
std::u32string_view word_ending_at(std::u32string_view text, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !is_space_char(text[begin - 1])) --begin;
  while (begin < dot && is_opening_mark(text[begin])) ++begin;
  return text.substr(begin, dot + 1 - begin);
}

bool is_initial(std::u32string_view word) {
  // "J." style: one capital followed by the period.
  return word.size() == 2 && u_isupper(static_cast<UChar32>(word[0]));
}

}  // namespace

std::vector<SentenceSpan> split_sentences(std::u32string_view text,
                                          const AbbreviationList& abbreviations) {
  std::vector<SentenceSpan> sentences;
  const std::size_t n = text.size();
  std::size_t start = 0;
  while (start < n && is_space_char(text[start])) ++start;
  if (start == n) return sentences;

  std::size_t i = start;
  while (i < n) {
    if (!is_terminator(text[i])) {
      ++i;
      continue;
    }
    std::size_t end = i + 1;
    while (end < n && (is_terminator(text[end]) || is_closing_mark(text[end]))) ++end;
    if (end >= n || !is_space_char(text[end])) {
      i = end;
      continue;
    }
    std::size_t next = end;
    while (next < n && is_space_char(text[next])) ++next;
    std::size_t probe = next;
    while (probe < n && is_opening_mark(text[probe])) ++probe;
    if (probe >= n || !starts_sentence(text[probe])) {
      i = end;
      continue;
    }
    if (text[i] == U'.') {
      const auto word = word_ending_at(text, i);
      if (abbreviations.contains(to_lower(word)) || is_initial(word)) {
        i = end;
        continue;
      }
    }
    sentences.push_back(SentenceSpan{sentences.size(), start, end});
    start = next;
    i = next;
  }
  std::size_t last = n;
  while (last > start && is_space_char(text[last - 1])) --last;
  if (last > start) sentences.push_back(SentenceSpan{sentences.size(), start, last});
  return sentences;
}

std::size_t sentence_index_at(std::span<const SentenceSpan> sentences, std::size_t offset) {
  std::size_t index = 0;
  for (const auto& s : sentences) {
    if (s.start_char > offset) break;
    index = s.index;
  }
  return index;
}

namespace {

bool is_ascii_punctuation(char32_t c) {
  static constexpr std::u32string_view kPunct = U"!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  return kPunct.find(c) != std::u32string_view::npos;
}

}  // namespace

std::string normalize_answer(std::string_view utf8) {
  std::u32string text;
  for (char32_t c : to_u32(utf8)) {
    if (!is_ascii_punctuation(c)) text.push_back(to_lower_char(c));
  }
  // Articles are removed where they form a whole \w run, as in the
  // reference regex \b(a|an|the)\b.
  std::u32string stripped;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      stripped.push_back(text[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_char(text[j])) ++j;
    const auto word = std::u32string_view(text).substr(i, j - i);
    if (word == U"a" || word == U"an" || word == U"the") {
      stripped.push_back(U' ');
    } else {
      stripped.append(word);
    }
    i = j;
  }
  std::u32string out;
  for (std::size_t k = 0; k < stripped.size();) {
    if (is_space_char(stripped[k])) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j < stripped.size() && !is_space_char(stripped[j])) ++j;
    if (!out.empty()) out.push_back(U' ');
    out.append(stripped, k, j - k);
    k = j;
  }
  return to_utf8(out);
}

std::vector<std::string> split_whitespace(std::string_view utf8) {
  std::vector<std::string> parts;
  const auto text = to_u32(utf8);
  for (std::size_t k = 0; k < text.size();) {
    if (is_space_char(text[k])) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j < text.size() && !is_space_char(text[j])) ++j;
    parts.push_back(to_utf8(std::u32string_view(text).substr(k, j - k)));
    k = j;
  }
  return parts;
}

TfidfModel TfidfModel::fit(std::span<const std::string> contexts) {
  if (contexts.empty()) throw ValidationError("cannot fit TF-IDF on an empty corpus");
  TfidfModel model;
  std::set<std::string_view> seen;
  std::vector<std::size_t> df;
  for (const auto& context : contexts) {
    if (!seen.insert(context).second) continue;
    ++model.document_count_;
    std::unordered_set<std::size_t> in_doc;
    for (const auto& token : tokenize(std::string_view(context))) {
      auto [it, inserted] = model.vocabulary_.try_emplace(token.lower, model.terms_.size());
      if (inserted) {
        model.terms_.push_back(token.lower);
        df.push_back(0);
      }
      if (in_doc.insert(it->second).second) ++df[it->second];
    }
  }
  const double n = static_cast<double>(model.document_count_);
  model.idf_.reserve(df.size());
  for (std::size_t d : df) {
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(d))) + 1.0);
  }
  return model;
}

std::size_t TfidfModel::term_id(std::string_view lowered_term) const {
  const auto it = vocabulary_.find(std::string(lowered_term));
  return it == vocabulary_.end() ? npos : it->second;
}

double TfidfModel::idf(std::string_view lowered_term) const {
  const auto id = term_id(lowered_term);
  return id == npos ? 0.0 : idf_[id];
}

SparseVector TfidfModel::vectorize(std::string_view utf8) const {
  std::unordered_map<std::size_t, double> tf;
  for (const auto& token : tokenize(utf8)) {
    const auto it = vocabulary_.find(token.lower);
    if (it != vocabulary_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  v.entries.reserve(tf.size());
  double norm = 0.0;
  for (const auto& [id, count] : tf) {
    const double w = count * idf_[id];
    v.entries.emplace_back(id, w);
  }
  std::sort(v.entries.begin(), v.entries.end());
  for (const auto& [id, w] : v.entries) norm += w * w;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (auto& [id, w] : v.entries) w /= norm;
  }
  return v;
}

double cosine(const SparseVector& a, const SparseVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  auto ia = a.entries.begin();
  auto ib = b.entries.begin();
  while (ia != a.entries.end() && ib != b.entries.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return std::clamp(dot, 0.0, 1.0);
}

}  // namespace qabias
