#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qabias {

// All character offsets in this toolkit are Unicode scalar-value indices.
// UTF-8 is decoded once into std::u32string and every offset indexes that.

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view text);
std::size_t code_point_length(std::string_view utf8);

/// Letters (L*) and numbers (N*), the word-character class of the tokenizer.
bool is_word_char(char32_t c);
bool is_space_char(char32_t c);
char32_t to_lower_char(char32_t c);
std::u32string to_lower(std::u32string_view text);

/// Occurrences of `needle` in `haystack`, left to right, non-overlapping.
std::vector<std::size_t> find_all(std::u32string_view haystack, std::u32string_view needle);

struct Token {
  std::string text;
  std::string lower;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
};

/// Maximal runs of word characters; punctuation and whitespace are dropped.
std::vector<Token> tokenize(std::u32string_view text);
std::vector<Token> tokenize(std::string_view utf8);

/// Index range [first, last] of the tokens overlapping [start_char, end_char),
/// or nullopt-like {npos, npos} when no token overlaps.
struct TokenRange {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t first = npos;
  std::size_t last = npos;
  bool empty() const { return first == npos; }
};
TokenRange tokens_overlapping(std::span<const Token> tokens, std::size_t start_char,
                              std::size_t end_char);

struct SentenceSpan {
  std::size_t index = 0;
  std::size_t start_char = 0;
  std::size_t end_char = 0;
};

/// Lower-cased abbreviations (with their trailing period) that never end a sentence.
using AbbreviationList = std::unordered_set<std::u32string>;

/// Rule-based splitter. A sentence ends at '.', '!' or '?' (plus any closing
/// quotes/brackets) when followed by whitespace and then an upper-case letter
/// or digit, unless the word carrying the period is an abbreviation or a
/// single-letter initial.
std::vector<SentenceSpan> split_sentences(std::u32string_view text,
                                          const AbbreviationList& abbreviations);

/// Index of the sentence containing `offset`; whitespace between two
/// sentences belongs to the preceding one.
std::size_t sentence_index_at(std::span<const SentenceSpan> sentences, std::size_t offset);

/// SQuAD evaluator normalization: lower-case, drop ASCII punctuation, drop
/// the articles a/an/the as whole words, collapse whitespace.
std::string normalize_answer(std::string_view utf8);

/// Whitespace split of an already-normalized answer.
std::vector<std::string> split_whitespace(std::string_view utf8);

struct SparseVector {
  /// (term id, weight), sorted by term id.
  std::vector<std::pair<std::size_t, double>> entries;
  bool empty() const { return entries.empty(); }
};

class TfidfModel {
 public:
  /// Smoothed idf: ln((1 + N) / (1 + df)) + 1 over the unique documents.
  static TfidfModel fit(std::span<const std::string> contexts);

  /// Raw term frequency times idf, L2-normalized; OOV tokens are ignored.
  SparseVector vectorize(std::string_view utf8) const;

  std::size_t document_count() const { return document_count_; }
  std::size_t vocabulary_size() const { return terms_.size(); }
  /// Term id, or npos when out of vocabulary.
  std::size_t term_id(std::string_view lowered_term) const;
  double idf(std::string_view lowered_term) const;
  const std::vector<std::string>& terms() const { return terms_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::unordered_map<std::string, std::size_t> vocabulary_;
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::size_t document_count_ = 0;
};

/// Dot product of two unit vectors, clamped to [0, 1]; empty input gives 0.
double cosine(const SparseVector& a, const SparseVector& b);

}  // namespace qabias
